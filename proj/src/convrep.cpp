#include "fadekit/convrep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/SVD>

#include "fadekit/errors.hpp"

namespace fadekit {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Widens a computed enclosure by the accumulated rounding of an n-term sum.
Interval outward(double lower, double upper, double n_terms) {
  const double slack = 4.0 * n_terms * kEps;
  return {lower * (1.0 - slack), std::isinf(upper) ? upper : upper * (1.0 + slack)};
}

// log(sum exp(x_i)) over a list that may contain -inf.
double log_sum_exp(const std::vector<double>& logs) {
  double hi = -kInf;
  for (double v : logs) hi = std::max(hi, v);
  if (hi == -kInf || hi == kInf) return hi;
  double s = 0.0;
  for (double v : logs) s += std::exp(v - hi);
  return hi + std::log(s);
}

double log_weight(const WeightingSeq& w, int t) {
  const double k = -static_cast<double>(t);
  switch (w.kind()) {
    case WeightingSeq::Kind::exponential:
      return k * std::log(w.parameter());
    case WeightingSeq::Kind::polynomial:
      return -w.parameter() * std::log1p(k);
    case WeightingSeq::Kind::tabulated:
      if (t >= w.table_start()) return std::log(w(t));
      return std::min(0.0, std::log(w.tail().scale) + k * std::log(w.tail().ratio));
  }
  return 0.0;
}

// Upper bound for sum_{n>=1} n^{-e}, e > 1: explicit head plus integral tail.
double zeta_upper(double e, int head) {
  double s = 0.0;
  for (int n = head; n >= 1; --n) s += std::pow(static_cast<double>(n), -e);
  s += std::pow(static_cast<double>(head), 1.0 - e) / (e - 1.0);
  return s * (1.0 + 4.0 * head * kEps);
}

Verdict finiteness(const Interval& iv) {
  if (iv.upper < kInf) return Verdict::holds;
  if (iv.lower == kInf) return Verdict::fails;
  return Verdict::undecidable;
}

FMPReport decide(double p, const Interval& q_norm, const Interval& sup_norm, TriState decays,
                 bool finite_memory) {
  FMPReport r;
  r.p = p;
  r.q = conjugate_exponent(p);
  r.q_norm = q_norm;
  r.sup_norm = sup_norm;
  r.decays_to_zero = decays;
  r.finite_memory = finite_memory;

  if (p == 1.0) {
    const Verdict cont = finiteness(sup_norm);
    Verdict weighted = Verdict::undecidable;
    if (cont == Verdict::fails || decays == TriState::no) {
      weighted = Verdict::fails;
    } else if (cont == Verdict::holds && decays == TriState::yes) {
      weighted = Verdict::holds;
    }
    r.verdicts[property::continuity] = cont;
    r.verdicts[property::minimal] = cont;
    r.verdicts[property::weighted_fmp] = weighted;
  } else {
    const Verdict v = finiteness(q_norm);
    r.verdicts[property::continuity] = v;
    r.verdicts[property::minimal] = v;
    r.verdicts[property::weighted_fmp] = v;
  }
  r.verdicts[property::product_fmp] = finite_memory ? Verdict::holds : Verdict::fails;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

KernelSeq::KernelSeq(int in_dim, int out_dim, int window_start, std::vector<Matrix> matrices,
                     KernelTail tail)
    : in_dim_(in_dim),
      out_dim_(out_dim),
      window_start_(window_start),
      matrices_(std::move(matrices)),
      tail_(tail) {
  if (in_dim_ < 1 || out_dim_ < 1) throw DimensionMismatch("KernelSeq: dimensions must be positive");
  if (window_start_ > 0) throw DimensionMismatch("KernelSeq: window_start must be non-positive");
  if (matrices_.size() != static_cast<size_t>(1 - window_start_)) {
    throw DimensionMismatch("KernelSeq: expected " + std::to_string(1 - window_start_) + " matrices");
  }
  for (const auto& k : matrices_) {
    if (k.rows() != out_dim_ || k.cols() != in_dim_) {
      throw DimensionMismatch("KernelSeq: matrix shape differs from out_dim x in_dim");
    }
    if (!k.allFinite()) throw std::domain_error("KernelSeq: non-finite matrix entry");
  }
  if (tail_.kind == KernelTail::Kind::geometric) {
    if (!(tail_.M >= 0.0) || !std::isfinite(tail_.M)) throw std::domain_error("KernelSeq: tail M must be >= 0");
    if (!(tail_.rho > 0.0 && tail_.rho < 1.0)) throw std::domain_error("KernelSeq: tail rho must lie in (0,1)");
  }
}

std::vector<double> KernelSeq::window_norms() const {
  std::vector<double> out;
  out.reserve(matrices_.size());
  for (const auto& k : matrices_) out.push_back(op_norm(k));
  return out;
}

double KernelSeq::norm_bound(int t) const {
  if (t >= window_start_) return op_norm(at(t));
  if (tail_.vanishes()) return 0.0;
  return tail_.M * std::pow(tail_.rho, -static_cast<double>(t));
}

double analytic_norm(const AnalyticKernel& k, int t) {
  if (const auto* pl = std::get_if<PowerLawKernel>(&k)) {
    return std::pow(1.0 - static_cast<double>(t), -(1.0 + pl->omega));
  }
  return std::get<ConstantKernel>(k).level;
}

// ---------------------------------------------------------------------------

WindowedValue eval_windowed(const KernelSeq& kappa, const FiniteSeq& z) {
  if (z.dim() != kappa.in_dim()) throw DimensionMismatch("eval: input dim differs from kernel in_dim");
  WindowedValue out;
  out.value = Vector::Zero(kappa.out_dim());
  const int lo = std::max(z.start(), kappa.window_start());
  for (int t = lo; t <= 0; ++t) out.value.noalias() += kappa.at(t) * z.entry(t);

  if (z.start() < kappa.window_start() && !kappa.tail().vanishes()) {
    const auto& tail = kappa.tail();
    double residual = 0.0;
    for (int t = z.start(); t < kappa.window_start(); ++t) {
      const double n = z.entry(t).norm();
      if (n > 0.0) residual += tail.M * std::pow(tail.rho, -static_cast<double>(t)) * n;
    }
    out.residual_bound = residual;
    out.truncated = residual > 0.0;
  }
  return out;
}

Vector eval(const KernelSeq& kappa, const FiniteSeq& z) {
  auto w = eval_windowed(kappa, z);
  if (w.truncated) throw WindowUnderflow(std::move(w.value), w.residual_bound);
  return std::move(w.value);
}

double op_norm(const Matrix& mat) {
  if (mat.size() == 0) return 0.0;
  if (mat.rows() == 1 || mat.cols() == 1) return mat.norm();
  Eigen::JacobiSVD<Matrix> svd(mat);
  return svd.singularValues()(0);
}

double conjugate_exponent(double p) {
  check_exponent(p);
  if (p == 1.0) return kInf;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

Interval q_seq_norm(const KernelSeq& kappa, double q) {
  check_exponent(q);
  const auto norms = kappa.window_norms();
  const auto& tail = kappa.tail();
  const double K = 1.0 - static_cast<double>(kappa.window_start());  // |W| + 1
  const double tail_head = tail.vanishes() ? 0.0 : tail.M * std::pow(tail.rho, K);

  const double wmax = *std::max_element(norms.begin(), norms.end());
  if (std::isinf(q)) return {wmax, std::max(wmax, tail_head)};

  const double scale = std::max(wmax, tail_head);
  if (scale == 0.0) return {0.0, 0.0};
  double head = 0.0;
  for (auto it = norms.rbegin(); it != norms.rend(); ++it) head += std::pow(*it / scale, q);
  double tail_sum = 0.0;
  if (tail_head > 0.0) tail_sum = std::pow(tail_head / scale, q) / (1.0 - std::pow(tail.rho, q));
  const double lower = scale * std::pow(head, 1.0 / q);
  const double upper = scale * std::pow(head + tail_sum, 1.0 / q);
  if (tail_head == 0.0) return {lower, lower};
  return outward(lower, upper, static_cast<double>(norms.size()));
}

Interval q_seq_norm(const AnalyticKernel& kappa, double q) {
  check_exponent(q);
  if (const auto* c = std::get_if<ConstantKernel>(&kappa)) {
    if (std::isinf(q)) return {c->level, c->level};
    return {kInf, kInf};
  }
  const auto& pl = std::get<PowerLawKernel>(kappa);
  const double s = 1.0 + pl.omega;
  if (std::isinf(q)) return {1.0, 1.0};
  const double e = s * q;
  if (e <= 1.0) return {kInf, kInf};
  // t = 0..-window  <->  n = 1 - t = 1..window+1
  const int head_n = pl.window + 1;
  double head = 0.0;
  for (int n = head_n; n >= 1; --n) head += std::pow(static_cast<double>(n), -e);
  const double lo_tail = std::pow(head_n + 1.0, 1.0 - e) / (e - 1.0);
  const double hi_tail = std::pow(static_cast<double>(head_n), 1.0 - e) / (e - 1.0);
  return outward(std::pow(head + lo_tail, 1.0 / q), std::pow(head + hi_tail, 1.0 / q), head_n);
}

// ---------------------------------------------------------------------------

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::undecidable: return "undecidable";
  }
  return "undecidable";
}

std::string to_string(TriState v) {
  switch (v) {
    case TriState::yes: return "yes";
    case TriState::no: return "no";
    case TriState::unknown: return "unknown";
  }
  return "unknown";
}

FMPReport classify(const KernelSeq& kappa, double p) {
  const double q = conjugate_exponent(p);
  // Both admitted tail models decay, so every KernelSeq has ||kappa_t|| -> 0.
  return decide(p, q_seq_norm(kappa, q), q_seq_norm(kappa, kInf), TriState::yes, kappa.finite_memory());
}

FMPReport classify(const AnalyticKernel& kappa, double p) {
  const double q = conjugate_exponent(p);
  const TriState decays = std::holds_alternative<PowerLawKernel>(kappa) ? TriState::yes : TriState::no;
  return decide(p, q_seq_norm(kappa, q), q_seq_norm(kappa, kInf), decays, false);
}

// ---------------------------------------------------------------------------

std::variant<WeightingSeq, FiniteMemoryFlag> construct_weighting(const KernelSeq& kappa) {
  const auto norms = kappa.window_norms();
  const auto& tail = kappa.tail();
  if (tail.vanishes()) {
    FiniteMemoryFlag flag;
    for (size_t i = 0; i < norms.size(); ++i) {
      if (norms[i] > 0.0) {
        flag.last_nonzero = kappa.window_start() + static_cast<int>(i);
        break;
      }
    }
    return flag;
  }
  const int W = kappa.window_start();
  // sup over s < W of min{1, M rho^{|s|}} is attained at s = W - 1.
  double running = std::min(1.0, tail.M * std::pow(tail.rho, 1.0 - W));
  std::vector<double> values;
  values.reserve(norms.size());
  for (double n : norms) {
    running = std::max(running, std::min(1.0, n));
    values.push_back(running);
  }
  return WeightingSeq::tabulated(W, std::move(values), {tail.M, tail.rho});
}

std::variant<WeightingSeq, FiniteMemoryFlag> construct_weighting(const AnalyticKernel& kappa) {
  if (const auto* pl = std::get_if<PowerLawKernel>(&kappa)) {
    return WeightingSeq::polynomial(1.0 + pl->omega);
  }
  throw NoWeighting("kernel norms do not decay to zero; no weighting sequence exists");
}

double weighting_constant(const KernelSeq& kappa) {
  double c = 1.0;
  for (double n : kappa.window_norms()) c = std::max(c, n);
  const auto& tail = kappa.tail();
  if (!tail.vanishes()) c = std::max(c, tail.M * std::pow(tail.rho, 1.0 - kappa.window_start()));
  return c;
}

std::optional<double> continuity_bound(const KernelSeq& kappa, const WeightingSeq& w, double p) {
  check_exponent(p);
  if (p == 1.0) throw Unsupported("continuity_bound: p = 1 has no Hoelder certificate; use construct_weighting");
  const double q = conjugate_exponent(p);
  const double r = std::isinf(p) ? 1.0 : 1.0 / p;
  const double e = q * r;  // exponent of 1/w

  // log of w_t^{-e} ||kappa_t||^q for window terms
  std::vector<double> logs;
  const auto norms = kappa.window_norms();
  for (size_t i = 0; i < norms.size(); ++i) {
    if (norms[i] == 0.0) continue;
    const int t = kappa.window_start() + static_cast<int>(i);
    logs.push_back(-e * log_weight(w, t) + q * std::log(norms[i]));
  }

  const auto& tail = kappa.tail();
  if (!tail.vanishes()) {
    const int K = 1 - kappa.window_start();  // first tail lag |t|
    const double logM = q * std::log(tail.M);
    const double log_rho_q = q * std::log(tail.rho);
    switch (w.kind()) {
      case WeightingSeq::Kind::exponential: {
        const double log_beta = log_rho_q - e * std::log(w.parameter());
        if (log_beta >= 0.0) return std::nullopt;
        logs.push_back(logM + K * log_beta - std::log(-std::expm1(log_beta)));
        break;
      }
      case WeightingSeq::Kind::polynomial: {
        const double b = w.parameter() * e;
        auto log_term = [&](double k) { return logM + b * std::log1p(k) + k * log_rho_q; };
        const double target = std::log((1.0 + std::exp(log_rho_q)) / 2.0);
        double k = K;
        // sum explicitly until the successive-term ratio is safely below one
        while (b * (std::log(k + 2.0) - std::log(k + 1.0)) + log_rho_q > target) {
          logs.push_back(log_term(k));
          k += 1.0;
        }
        const double log_ratio = b * (std::log(k + 2.0) - std::log(k + 1.0)) + log_rho_q;
        logs.push_back(log_term(k) - std::log(-std::expm1(log_ratio)));
        break;
      }
      case WeightingSeq::Kind::tabulated: {
        const int table_lag = -w.table_start();
        int k = K;
        for (; k <= table_lag; ++k) {
          logs.push_back(logM + k * log_rho_q - e * log_weight(w, -k));
        }
        // below the table: w^{-e} <= 1 + scale^{-e} ratio^{-e k}
        logs.push_back(logM + k * log_rho_q - std::log(-std::expm1(log_rho_q)));
        const double log_gamma = log_rho_q - e * std::log(w.tail().ratio);
        if (log_gamma >= 0.0) return std::nullopt;
        logs.push_back(logM - e * std::log(w.tail().scale) + k * log_gamma - std::log(-std::expm1(log_gamma)));
        break;
      }
    }
  }
  if (logs.empty()) return 0.0;
  const double total = log_sum_exp(logs);
  const double bound = std::exp(total / q);
  if (!std::isfinite(bound)) return std::nullopt;
  return bound * (1.0 + 4.0 * static_cast<double>(logs.size()) * kEps);
}

std::optional<double> continuity_bound(const AnalyticKernel& kappa, const WeightingSeq& w, double p) {
  check_exponent(p);
  if (p == 1.0) throw Unsupported("continuity_bound: p = 1 has no Hoelder certificate; use construct_weighting");
  if (std::holds_alternative<ConstantKernel>(kappa)) return std::nullopt;
  const auto& pl = std::get<PowerLawKernel>(kappa);
  // Exponentially decaying weights (including geometric tabulated tails) make
  // w_t^{-e} grow faster than any power, so the series diverges.
  if (w.kind() != WeightingSeq::Kind::polynomial) return std::nullopt;
  const double q = conjugate_exponent(p);
  const double r = std::isinf(p) ? 1.0 : 1.0 / p;
  const double gamma = (1.0 + pl.omega) * q - w.parameter() * q * r;
  if (gamma <= 1.0) return std::nullopt;
  return std::pow(zeta_upper(gamma, pl.window + 1), 1.0 / q);
}

// ---------------------------------------------------------------------------

Extraction extract_kernel(const Functional& H, int in_dim, int horizon, std::uint64_t seed) {
  if (in_dim < 1) throw DimensionMismatch("extract_kernel: in_dim must be positive");
  if (horizon > 0) throw std::invalid_argument("extract_kernel: horizon must be non-positive");

  const int m = static_cast<int>(H(FiniteSeq::zero(in_dim)).size());
  if (m < 1) throw DimensionMismatch("extract_kernel: functional returned an empty vector");

  std::vector<Matrix> mats(static_cast<size_t>(1 - horizon), Matrix::Zero(m, in_dim));
  for (int t = horizon; t <= 0; ++t) {
    for (int j = 0; j < in_dim; ++j) {
      const Vector col = H(include(Vector::Unit(in_dim, j), t));
      if (col.size() != m) throw DimensionMismatch("extract_kernel: inconsistent output dimension");
      mats[static_cast<size_t>(t - horizon)].col(j) = col;
    }
  }
  KernelSeq kernel(in_dim, m, horizon, std::move(mats));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto random_seq = [&] {
    Matrix cols(in_dim, 1 - horizon);
    for (Eigen::Index i = 0; i < cols.size(); ++i) cols.data()[i] = normal(rng);
    return FiniteSeq::from_columns(cols);
  };

  double worst = 0.0;
  auto record = [&](const Vector& diff, double scale) {
    const double n = diff.norm();
    const double defect = scale > 0.0 ? n / scale : n;
    worst = std::max(worst, defect);
  };
  for (int k = 0; k < kLinearityPairs; ++k) {
    const FiniteSeq z1 = random_seq();
    const FiniteSeq z2 = random_seq();
    const double a = normal(rng);
    const double b = normal(rng);
    const Vector h1 = H(z1);
    const Vector h2 = H(z2);
    const Vector h12 = H(a * z1 + b * z2);
    record(h12 - (a * h1 + b * h2), h12.norm() + std::abs(a) * h1.norm() + std::abs(b) * h2.norm());
    const Vector k1 = eval(kernel, z1);
    record(h1 - k1, h1.norm() + k1.norm());
  }
  if (worst > kLinearityTolerance) {
    throw NotLinear("extract_kernel: linearity defect " + std::to_string(worst) + " exceeds tolerance");
  }
  return {std::move(kernel), horizon, worst};
}

// ---------------------------------------------------------------------------

int orthant_index(const Vector& y) {
  if (y.size() > 30) throw Unsupported("orthant_index: dimension too large");
  int idx = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) < 0.0) idx |= 1 << i;
  }
  return idx + 1;
}

double cone_constant(int m) {
  // sqrt(2) is sharp for m <= 2; in R^m the orthant constant is sqrt(m).
  return std::sqrt(static_cast<double>(std::max(2, m)));
}

ConeCertificate cone_certificate(const KernelSeq& kappa, const FiniteSeq& z) {
  const auto full = eval_windowed(kappa, z);
  if (full.truncated) throw WindowUnderflow(full.value, full.residual_bound);
  const int m = kappa.out_dim();
  if (m > 16) throw Unsupported("cone_certificate: output dimension too large for orthant enumeration");

  ConeCertificate cert;
  cert.constant = cone_constant(m);
  cert.index_sets.assign(size_t{1} << m, {});
  const int lo = std::max(z.start(), kappa.window_start());
  for (int t = lo; t <= 0; ++t) {
    const Vector v = kappa.at(t) * z.entry(t);
    if (v.isZero(0.0)) continue;
    cert.index_sets[static_cast<size_t>(orthant_index(v) - 1)].push_back(t);
    cert.lhs += v.norm();
  }
  double parts = 0.0;
  for (const auto& J : cert.index_sets) {
    if (J.empty()) continue;
    // z^i = sum_{t in J_i} delta^t(z_t), evaluated through the functional itself
    std::vector<Vector> entries(static_cast<size_t>(1 - J.front()), Vector::Zero(z.dim()));
    for (int t : J) entries[static_cast<size_t>(t - J.front())] = z.entry(t);
    parts += eval(kappa, FiniteSeq(z.dim(), J.front(), std::move(entries))).norm();
  }
  cert.rhs = cert.constant * parts;
  cert.holds = cert.lhs <= cert.rhs + 1e-12 * cert.lhs;
  return cert;
}

}  // namespace fadekit
