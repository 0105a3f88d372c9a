#include "fadekit/ssm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "fadekit/errors.hpp"

namespace fadekit {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kExactScanDepth = 12;  // ||A^j|| is scanned directly for j < 2^12
constexpr long kMaxKernelWindow = 1L << 22;

void require_square(const Matrix& A, const char* where) {
  if (A.rows() != A.cols() || A.rows() < 1) {
    throw DimensionMismatch(std::string(where) + ": state matrix must be square and non-empty");
  }
}

// A^{2^k} = 2^{exponent} * mantissa, with mantissa rescaled by powers of two
// (exact in floating point) so that squaring never overflows.
struct ScaledPower {
  Matrix mantissa;
  long exponent = 0;
  bool zero = false;
};

ScaledPower rescale(Matrix m, long exponent) {
  const double big = m.cwiseAbs().maxCoeff();
  if (big == 0.0) return {std::move(m), 0, true};
  int e = 0;
  std::frexp(big, &e);
  m *= std::ldexp(1.0, -e);
  return {std::move(m), exponent + e, false};
}

}  // namespace

LinearSSM::LinearSSM(Matrix A, Matrix C, Matrix h) : A_(std::move(A)), C_(std::move(C)), h_(std::move(h)) {
  require_square(A_, "LinearSSM");
  const auto n = A_.rows();
  if (C_.rows() != n || C_.cols() < 1) throw DimensionMismatch("LinearSSM: C must be n x d");
  if (h_.cols() != n || h_.rows() < 1) throw DimensionMismatch("LinearSSM: h must be m x n");
  if (!A_.allFinite() || !C_.allFinite() || !h_.allFinite()) {
    throw std::domain_error("LinearSSM: non-finite entry");
  }
}

StabilityReport spectral_radius(const Matrix& A, double margin) {
  require_square(A, "spectral_radius");
  if (!(margin > 0.0)) throw std::domain_error("spectral_radius: margin must be positive");
  const double n = static_cast<double>(A.rows());
  const double slack = 16.0 * n * kEps;

  StabilityReport rep;
  std::vector<double> log2_norms;  // log2 ||A^{2^k}||
  double upper = kInf;
  double lower = 0.0;

  ScaledPower P = rescale(A, 0);
  for (int k = 0; k <= kMaxSquarings && !P.zero; ++k) {
    const double m = std::ldexp(1.0, k);
    const double log2_norm = static_cast<double>(P.exponent) + std::log2(op_norm(P.mantissa));
    log2_norms.push_back(log2_norm);
    const double up = std::exp2(log2_norm / m) * (1.0 + slack);
    if (up < upper) {
      upper = up;
      rep.gelfand_k = k;
    }
    const double tr = std::abs(P.mantissa.trace());
    if (tr > 0.0) {
      const double log2_tr = static_cast<double>(P.exponent) + std::log2(tr / n);
      lower = std::max(lower, std::exp2(log2_tr / m));
    }
    if (k < kMaxSquarings) P = rescale(P.mantissa * P.mantissa, 2 * P.exponent);
  }
  if (P.zero) upper = 0.0;  // some power vanished: nilpotent

  const Eigen::PartialPivLU<Matrix> lu(A);
  double log_det = 0.0;
  bool singular = false;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double u = std::abs(lu.matrixLU()(i, i));
    if (u == 0.0) {
      singular = true;
      break;
    }
    log_det += std::log(u);
  }
  if (!singular) lower = std::max(lower, std::exp(log_det / n));
  lower = std::min(lower, upper);
  rep.rho = {lower, upper};

  if (upper < 1.0 - margin) {
    rep.stable = Stability::yes;
  } else if (lower >= 1.0) {
    rep.stable = Stability::no;
  } else {
    rep.stable = Stability::margin_undecided;
  }
  if (rep.stable != Stability::yes) return rep;

  if (upper == 0.0) {
    // some A^{2^k} vanished: A^j = 0 for j >= n, so any r works once M covers j < n
    const double r = 0.5;
    double M = 1.0;
    Matrix Pj = Matrix::Identity(A.rows(), A.cols());
    for (Eigen::Index j = 1; j < A.rows(); ++j) {
      Pj = (A * Pj / r).eval();
      M = std::max(M, op_norm(Pj));
    }
    rep.geometric_bound = StabilityReport::GeometricBound{M * (1.0 + slack), r};
    return rep;
  }

  // Any level k with u = ||A^{2^k}||^{2^-k} < 1 certifies ||A^j|| <= M_k u^j where
  // M_k = max_{j < 2^k} ||A^j|| / u^j. Small k keeps M_k small, large k pushes u
  // toward rho(A); keep the level whose pair needs the shortest kernel window.
  const int levels = static_cast<int>(log2_norms.size());
  const int c = std::min(levels - 1, kExactScanDepth);
  std::vector<double> log2_pow(size_t{1} << c);  // log2 ||A^j||, j < 2^c
  {
    Matrix Pj = Matrix::Identity(A.rows(), A.cols());
    double log2_scale = 0.0;
    for (size_t j = 0; j < log2_pow.size(); ++j) {
      const double nrm = op_norm(Pj);
      log2_pow[j] = nrm > 0.0 ? log2_scale + std::log2(nrm) : -kInf;
      Pj = (A * Pj).eval();
      const double big = Pj.cwiseAbs().maxCoeff();
      if (big == 0.0) {
        std::fill(log2_pow.begin() + static_cast<long>(j) + 1, log2_pow.end(), -kInf);
        break;
      }
      int e = 0;
      std::frexp(big, &e);
      Pj *= std::ldexp(1.0, -e);
      log2_scale += e;
    }
  }
  constexpr double kReferenceLog2Eps = -40.0;
  double best_cost = kInf;
  for (int k = 0; k < levels; ++k) {
    const double u = std::exp2(log2_norms[static_cast<size_t>(k)] / std::ldexp(1.0, k)) * (1.0 + slack);
    if (!(u < 1.0) || u <= 0.0) continue;
    const double log2_u = std::log2(u);
    const long scan = 1L << std::min(k, c);
    double log2_M = 0.0;
    for (long j = 0; j < scan; ++j) log2_M = std::max(log2_M, log2_pow[static_cast<size_t>(j)] - j * log2_u);
    // ||A^j|| / u^j <= prod over the binary digits of j of ||A^{2^i}|| / u^{2^i}
    for (int i = c; i < k; ++i) {
      log2_M += std::max(0.0, log2_norms[static_cast<size_t>(i)] - std::ldexp(1.0, i) * log2_u);
    }
    const double M = std::exp2(log2_M) * (1.0 + slack);
    if (!std::isfinite(M)) continue;
    const double cost = (std::log2(M) - kReferenceLog2Eps - std::log2(1.0 - u)) / -log2_u;
    if (cost < best_cost) {
      best_cost = cost;
      rep.geometric_bound = StabilityReport::GeometricBound{M, u};
    }
  }
  if (!rep.geometric_bound) {
    throw NumericalFailure("spectral_radius: no finite geometric bound despite a certified radius below one");
  }
  return rep;
}

KernelSeq ssm_to_kernel(const LinearSSM& sys, double eps, double margin) {
  if (!(eps > 0.0)) throw std::domain_error("ssm_to_kernel: eps must be positive");
  const auto rep = spectral_radius(sys.A(), margin);
  if (rep.stable == Stability::no) throw Unstable("ssm_to_kernel: spectral radius >= 1");
  if (rep.stable == Stability::margin_undecided) {
    throw StabilityUndecided("ssm_to_kernel: spectral radius within margin of 1");
  }
  const int n = sys.state_dim();
  const int d = sys.input_dim();
  const int m = sys.output_dim();

  auto materialize = [&](long lags, KernelTail tail) {
    std::vector<Matrix> mats(static_cast<size_t>(lags + 1));
    Matrix P = sys.C();
    for (long k = 0; k <= lags; ++k) {
      mats[static_cast<size_t>(lags - k)] = sys.h() * P;
      if (k < lags) P = (sys.A() * P).eval();
    }
    return KernelSeq(d, m, static_cast<int>(-lags), std::move(mats), tail);
  };

  // nilpotent A: kappa_t = 0 once A^{|t|} = 0
  Matrix P = sys.A();
  for (int j = 1; j <= n; ++j) {
    if (P.isZero(0.0)) return materialize(j - 1, KernelTail::zero());
    P = (sys.A() * P).eval();
  }

  const double prefactor = rep.geometric_bound->M * op_norm(sys.h()) * op_norm(sys.C());
  if (prefactor == 0.0) return materialize(0, KernelTail::zero());
  const double r = rep.geometric_bound->r;
  // M' r^{|W|+1} / (1 - r) <= eps
  const double lags_real = std::ceil(std::log(eps * (1.0 - r) / prefactor) / std::log(r));
  const long lags = std::max(0L, static_cast<long>(std::max(0.0, lags_real)));
  if (lags > kMaxKernelWindow) throw std::length_error("ssm_to_kernel: required window is too long");
  return materialize(lags, KernelTail::geometric(prefactor, r));
}

Vector run_recurrent(const LinearSSM& sys, const FiniteSeq& z) {
  if (z.dim() != sys.input_dim()) throw DimensionMismatch("run_recurrent: input dim mismatch");
  Vector x = Vector::Zero(sys.state_dim());
  for (int t = z.start(); t <= 0; ++t) x = sys.A() * x + sys.C() * z.entry(t);
  return sys.h() * x;
}

std::optional<UnstableWitness> unstable_witness(const Matrix& A, int window) {
  require_square(A, "unstable_witness");
  if (window < 1) throw std::invalid_argument("unstable_witness: window must be positive");
  Eigen::EigenSolver<Matrix> es(A);
  if (es.info() != Eigen::Success) throw NumericalFailure("unstable_witness: eigensolver did not converge");

  const auto& values = es.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (std::abs(values(i)) > std::abs(values(best))) best = i;
  }
  std::complex<double> lambda = values(best);
  const double modulus = std::abs(lambda);
  if (modulus < 1.0 - 1e-12) return std::nullopt;
  if (modulus < 1.0) lambda /= modulus;  // roundoff on the unit circle

  Eigen::VectorXcd v = es.eigenvectors().col(best);
  v.normalize();
  Eigen::Index lead = 0;
  v.cwiseAbs().maxCoeff(&lead);
  v *= std::conj(v(lead)) / std::abs(v(lead));

  UnstableWitness w;
  w.lambda = lambda;
  w.v = v;
  w.window = window;
  auto state = [&](int t) -> Vector { return (std::pow(lambda, t) * v).real(); };
  Vector prev = state(-window - 1);
  for (int t = -window; t <= 0; ++t) {
    Vector x = state(t);
    w.max_residual = std::max(w.max_residual, (x - A * prev).norm());
    w.sup_norm = std::max(w.sup_norm, x.norm());
    w.trajectory.push_back(x);
    prev = std::move(x);
  }
  if (w.max_residual > 1e-9 || w.sup_norm > 1.0 + 1e-12) {
    throw NumericalFailure("unstable_witness: eigenpair too inaccurate to certify a bounded solution");
  }
  return w;
}

}  // namespace fadekit
