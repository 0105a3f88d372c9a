#include "fadekit/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "fadekit/convrep.hpp"
#include "fadekit/duality.hpp"
#include "fadekit/errors.hpp"
#include "fadekit/io.hpp"
#include "fadekit/rkhs.hpp"
#include "fadekit/seqspace.hpp"
#include "fadekit/ssm.hpp"

namespace fadekit {

namespace {

struct RunConfig {
  std::string command;
  std::string input;
  std::string output;
  std::string p = "2";
  double gamma = 1e-2;
  std::optional<int> truncate;
  double eps = 1e-10;
  std::uint64_t seed = 42;
  std::string format = "json";
  std::string kernel = "lambda";
  double lambda = 0.5;
  std::string kernel_spec;
  std::string save_fit;
  int trials = 20;
  int probes = 200;
  std::vector<int> lengths;
};

class BadInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double parse_p(const std::string& s) {
  double p = 0.0;
  if (s == "inf" || s == "infinity") {
    p = kInf;
  } else {
    try {
      size_t used = 0;
      p = std::stod(s, &used);
      if (used != s.size()) throw BadInput("");
    } catch (const std::exception&) {
      throw BadInput("invalid --p '" + s + "'");
    }
  }
  if (!(p >= 1.0)) throw BadInput("--p must be >= 1 or 'inf'");
  return p;
}

// "a.b.c: value" lines; object keys come out sorted.
void flatten(const Json& j, const std::string& prefix, std::ostream& os) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, os);
  } else if (j.is_array() && !j.empty() && (j.front().is_object() || j.front().is_array())) {
    for (size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", os);
  } else {
    os << prefix << ": " << (j.is_string() ? j.get<std::string>() : j.dump()) << '\n';
  }
}

void emit(const RunConfig& cfg, const Json& report, std::ostream& out) {
  std::ostringstream text;
  if (cfg.format == "text") {
    flatten(report, "", text);
  } else {
    text << report.dump(2) << '\n';
  }
  if (cfg.output.empty()) {
    out << text.str();
    return;
  }
  std::ofstream f(cfg.output);
  if (!f) throw BadInput("cannot write '" + cfg.output + "'");
  f << text.str();
}

Vector random_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

Matrix random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> normal;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

FiniteSeq random_seq(std::mt19937_64& rng, int dim, int length) {
  std::vector<Vector> e;
  for (int k = 0; k < length; ++k) e.push_back(random_vector(rng, dim));
  return FiniteSeq(dim, 1 - length, std::move(e));
}

// ---------------------------------------------------------------------------

int cmd_classify(const RunConfig& cfg, std::ostream& out) {
  const double p = parse_p(cfg.p);
  const auto spec = kernel_spec_from_json(read_json_file(cfg.input));
  Json report = std::visit([p](const auto& k) { return to_json(classify(k, p)); }, spec);
  if (const auto* k = std::get_if<KernelSeq>(&spec)) {
    const auto w = construct_weighting(*k);
    if (std::holds_alternative<FiniteMemoryFlag>(w)) {
      report["weighting"] = {{"finite_memory", true},
                             {"last_nonzero", std::get<FiniteMemoryFlag>(w).last_nonzero}};
    } else {
      report["weighting"] = {{"finite_memory", false}, {"constant", weighting_constant(*k)}};
      if (p > 1.0) report["weighting"]["continuity_bound"] = number_to_json(
          continuity_bound(*k, std::get<WeightingSeq>(w), p).value_or(kInf));
    }
  }
  emit(cfg, report, out);
  return kExitOk;
}

int cmd_realize(const RunConfig& cfg, std::ostream& out) {
  if (!(cfg.eps > 0.0)) throw BadInput("--eps must be positive");
  const LinearSSM sys = linear_ssm_from_json(read_json_file(cfg.input));
  const StabilityReport rep = spectral_radius(sys.A());
  Json report = {{"schema_version", kSchemaVersion}, {"stability", to_json(rep)}};
  if (rep.stable != Stability::yes) {
    const auto w = unstable_witness(sys.A());
    report["witness"] = w ? to_json(*w) : Json(nullptr);
    emit(cfg, report, out);
    return kExitUnstable;
  }
  report["eps"] = cfg.eps;
  report["kernel"] = to_json(ssm_to_kernel(sys, cfg.eps));
  emit(cfg, report, out);
  return kExitOk;
}

int cmd_regress(const RunConfig& cfg, std::ostream& out) {
  if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma)) throw BadInput("--gamma must be positive");
  if (cfg.truncate && *cfg.truncate > 0) throw BadInput("--truncate must be non-positive");
  const Dataset ds = load_dataset(cfg.input);

  std::optional<SeqKernel> K;
  if (cfg.kernel == "lambda") {
    if (!(cfg.lambda > 0.0 && cfg.lambda <= 1.0)) throw BadInput("--lambda must lie in (0,1]");
    K = SeqKernel::lambda(cfg.lambda, ds.dim);
  } else {
    if (cfg.kernel_spec.empty()) throw BadInput("--kernel induced needs --kernel-spec");
    K = SeqKernel::induced(kernel_seq_from_json(read_json_file(cfg.kernel_spec)));
  }
  int oldest = 0;
  for (const auto& z : ds.samples) oldest = std::min(oldest, z.start());
  const int T = cfg.truncate.value_or(oldest);

  const RidgeFit fit = truncated_fit(*K, ds.samples, ds.targets, cfg.gamma, T);
  double mse = 0.0;
  const Vector fitted = fit.gram * fit.alpha;
  mse = (fitted - ds.targets).squaredNorm() / static_cast<double>(ds.targets.size());

  Json alpha = Json::array();
  for (Eigen::Index i = 0; i < fit.alpha.size(); ++i) alpha.push_back(fit.alpha(i));
  Json report = {{"schema_version", kSchemaVersion},
                 {"kernel", to_json(*K)},
                 {"gamma", cfg.gamma},
                 {"truncate", T},
                 {"samples", ds.samples.size()},
                 {"alpha", std::move(alpha)},
                 {"rkhs_norm", rkhs_norm(fit)},
                 {"train_mse", mse},
                 {"objective", objective(fit)}};

  if (K->is_lambda()) {
    const FiniteMemoryFit fm = finite_memory_fit(*K, ds.samples, ds.targets, cfg.gamma, T);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> len(1, 1 - T + 2);
    double worst = 0.0;
    auto compare = [&](const FiniteSeq& z) {
      const double a = predict(fit, z);
      const double b = predict(fm, z);
      worst = std::max(worst, std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0}));
    };
    for (const auto& z : ds.samples) compare(z);
    for (int i = 0; i < cfg.probes; ++i) compare(random_seq(rng, ds.dim, len(rng)));
    const double obj_fm = objective(fm, ds.samples, ds.targets);
    const double obj = objective(fit);
    report["finite_memory"] = {
        {"prediction_residual", worst},
        {"objective", obj_fm},
        {"objective_residual", std::abs(obj - obj_fm) / std::max({obj, obj_fm, 1e-300})},
        {"rkhs_norm", rkhs_norm(fm)},
        {"probes", cfg.probes + static_cast<int>(ds.samples.size())}};
  }
  if (!cfg.save_fit.empty()) {
    std::ofstream f(cfg.save_fit);
    if (!f) throw BadInput("cannot write '" + cfg.save_fit + "'");
    f << to_json(fit).dump(2) << '\n';
  }
  emit(cfg, report, out);
  return kExitOk;
}

// Randomized self-checks on small instances; each entry records its worst defect.
int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  if (cfg.trials < 1) throw BadInput("--trials must be positive");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> small(1, 4);
  std::uniform_int_distribution<int> len(1, 48);
  Json checks = Json::array();
  bool all = true;
  auto record = [&](const char* name, bool passed, double defect) {
    checks.push_back({{"name", name}, {"passed", passed}, {"trials", cfg.trials}, {"max_defect", defect}});
    all = all && passed;
  };

  {  // recurrent and convolution modes agree
    double worst = 0.0;
    bool ok = true;
    for (int i = 0; i < cfg.trials; ++i) {
      const int n = small(rng) * 2, d = small(rng), m = small(rng);
      Matrix A = random_matrix(rng, n, n);
      A *= 0.9 / std::max(1e-12, op_norm(A));
      const LinearSSM sys(A, random_matrix(rng, n, d), random_matrix(rng, m, n));
      const KernelSeq k = ssm_to_kernel(sys, cfg.eps);
      const FiniteSeq z = random_seq(rng, d, len(rng));
      const double defect = (run_recurrent(sys, z) - eval_windowed(k, z).value).norm();
      const double bound = cfg.eps * lp_norm(z, kInf);
      worst = std::max(worst, defect / bound);
      ok = ok && defect <= bound;
    }
    record("dual_mode", ok, worst);
  }
  {  // functional <-> filter roundtrips
    double worst = 0.0;
    bool ok = true;
    for (int i = 0; i < cfg.trials; ++i) {
      const int d = small(rng), m = small(rng), W = len(rng) % 8;
      std::vector<Matrix> mats;
      for (int t = -W; t <= 0; ++t) mats.push_back(random_matrix(rng, m, d));
      const KernelSeq k(d, m, -W, std::move(mats));
      const Functional H = [k](const FiniteSeq& z) { return eval(k, z); };
      const WindowedFilter U = functional_to_filter(H, d, -W - 2);
      const Functional back = filter_to_functional(U);
      const FiniteSeq z = random_seq(rng, d, 1 + W);
      const double defect = (back(z) - H(z)).norm();
      worst = std::max(worst, defect);
      ok = ok && defect <= kDualityTolerance * std::max(1.0, H(z).norm()) &&
           time_invariance_check(U, 2, rng()).passed && causality_check(U, 2, rng()).passed;
    }
    record("functional_filter_roundtrip", ok, worst);
  }
  {  // lambda kernel recursion
    double worst = 0.0;
    std::uniform_real_distribution<double> lam(0.05, 1.0);
    for (int i = 0; i < cfg.trials; ++i) {
      const int d = small(rng);
      const auto K = SeqKernel::lambda(lam(rng), d);
      const FiniteSeq a = random_seq(rng, d, len(rng)), b = random_seq(rng, d, len(rng));
      const double l = K.as_lambda().lambda;
      const double lhs = kernel_eval(K, a, b);
      const double rhs = a.entry(0).dot(b.entry(0)) + l * l * kernel_eval(K, advance(a, -1), advance(b, -1));
      worst = std::max(worst, std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1.0}));
    }
    record("lambda_recursion", worst <= 1e-12, worst);
  }
  {  // cone certificate
    bool ok = true;
    double worst = 0.0;
    for (int i = 0; i < cfg.trials; ++i) {
      const int d = small(rng), m = 1 + small(rng) % 3, W = len(rng) % 16;
      std::vector<Matrix> mats;
      for (int t = -W; t <= 0; ++t) mats.push_back(random_matrix(rng, m, d));
      const KernelSeq k(d, m, -W, std::move(mats));
      const auto cert = cone_certificate(k, random_seq(rng, d, 1 + W));
      ok = ok && cert.holds;
      if (cert.rhs > 0.0) worst = std::max(worst, cert.lhs / cert.rhs);
    }
    record("cone_certificate", ok, worst);
  }
  {  // truncated and finite-memory fits agree
    double worst = 0.0;
    std::uniform_real_distribution<double> lam(0.2, 1.0);
    for (int i = 0; i < cfg.trials; ++i) {
      const int d = small(rng) % 3 + 1, M = 2 + len(rng) % 10, T = -(len(rng) % 5);
      const auto K = SeqKernel::lambda(lam(rng), d);
      std::vector<FiniteSeq> xs;
      for (int s = 0; s < M; ++s) xs.push_back(random_seq(rng, d, len(rng) % 10 + 1));
      const Vector y = random_vector(rng, M);
      const RidgeFit f = truncated_fit(K, xs, y, 0.1, T);
      const FiniteMemoryFit g = finite_memory_fit(K, xs, y, 0.1, T);
      for (int s = 0; s < 10; ++s) {
        const FiniteSeq z = random_seq(rng, d, len(rng) % 10 + 1);
        const double a = predict(f, z), b = predict(g, z);
        worst = std::max(worst, std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0}));
      }
    }
    record("finite_memory_equivalence", worst <= 1e-8, worst);
  }

  if (!cfg.input.empty()) {  // a serialized fit: digests and normal equations
    const RidgeFit fit = ridge_fit_from_json(read_json_file(cfg.input));
    Matrix system = fit.gram;
    system.diagonal().array() += fit.gamma * static_cast<double>(fit.alpha.size());
    const double res = (system * fit.alpha - fit.targets).norm();
    const double tol = 1e-10 * std::max(fit.targets.norm(), 1e-300);
    checks.push_back({{"name", "fit_normal_equations"}, {"passed", res <= tol}, {"trials", 1}, {"max_defect", res}});
    all = all && res <= tol;
  }

  Json report = {{"schema_version", kSchemaVersion}, {"seed", cfg.seed}, {"passed", all}, {"checks", std::move(checks)}};
  emit(cfg, report, out);
  return all ? kExitOk : kExitCheckFailed;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out) {
  if (!(cfg.eps > 0.0)) throw BadInput("--eps must be positive");
  const LinearSSM sys = linear_ssm_from_json(read_json_file(cfg.input));
  const StabilityReport rep = spectral_radius(sys.A());
  if (rep.stable != Stability::yes) {
    Json report = {{"schema_version", kSchemaVersion}, {"stability", to_json(rep)}};
    emit(cfg, report, out);
    return kExitUnstable;
  }
  const KernelSeq k = ssm_to_kernel(sys, cfg.eps);
  std::vector<int> lengths = cfg.lengths;
  if (lengths.empty()) {
    for (int e = 8; e <= 14; ++e) lengths.push_back(1 << e);
  }
  constexpr int kReps = 11;
  std::mt19937_64 rng(cfg.seed);
  using Clock = std::chrono::steady_clock;
  auto median_seconds = [&](auto&& fn) {
    std::vector<double> s;
    for (int r = 0; r < kReps; ++r) {
      const auto t0 = Clock::now();
      fn();
      s.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    }
    std::nth_element(s.begin(), s.begin() + kReps / 2, s.end());
    return s[kReps / 2];
  };
  Json rows = Json::array();
  for (int L : lengths) {
    if (L < 1) throw BadInput("--lengths must be positive");
    const FiniteSeq z = random_seq(rng, sys.input_dim(), L);
    Vector rec, conv;
    const double t_rec = median_seconds([&] { rec = run_recurrent(sys, z); });
    const double t_conv = median_seconds([&] { conv = eval_windowed(k, z).value; });
    const double disc = (rec - conv).norm();
    rows.push_back({{"length", L},
                    {"recurrent_median_s", t_rec},
                    {"convolution_median_s", t_conv},
                    {"max_discrepancy", disc},
                    {"bound", cfg.eps * lp_norm(z, kInf)}});
  }
  Json report = {{"schema_version", kSchemaVersion},
                 {"repetitions", kReps},
                 {"kernel_window", 1 - k.window_start()},
                 {"rows", std::move(rows)}};
  emit(cfg, report, out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"fading-memory analysis of linear functionals, state-space systems and sequence kernels", "fadekit"};
  app.require_subcommand(1, 1);

  auto common = [&cfg](CLI::App* sub) {
    sub->add_option("--output", cfg.output, "write the report here instead of stdout");
    sub->add_option("--format", cfg.format, "report format")->check(CLI::IsMember({"json", "text"}));
    sub->add_option("--seed", cfg.seed, "seed for randomized checks");
  };
  auto* classify_cmd = app.add_subcommand("classify", "fading-memory verdicts for a kernel spec");
  classify_cmd->add_option("--input", cfg.input, "kernel JSON")->required();
  classify_cmd->add_option("--p", cfg.p, "exponent p >= 1 or 'inf'");
  common(classify_cmd);

  auto* realize_cmd = app.add_subcommand("realize", "convolution kernel of a state-space system");
  realize_cmd->add_option("--input", cfg.input, "state-space JSON")->required();
  realize_cmd->add_option("--eps", cfg.eps, "tail tolerance");
  common(realize_cmd);

  auto* regress_cmd = app.add_subcommand("regress", "kernel ridge regression on a sequence dataset");
  regress_cmd->add_option("--input", cfg.input, "dataset manifest or CSV")->required();
  regress_cmd->add_option("--kernel", cfg.kernel, "kernel kind")->check(CLI::IsMember({"lambda", "induced"}));
  regress_cmd->add_option("--lambda", cfg.lambda, "discount of the lambda kernel");
  regress_cmd->add_option("--kernel-spec", cfg.kernel_spec, "kernel JSON for --kernel induced");
  regress_cmd->add_option("--gamma", cfg.gamma, "regularization strength");
  regress_cmd->add_option("--truncate", cfg.truncate, "truncation time T <= 0");
  regress_cmd->add_option("--save-fit", cfg.save_fit, "write the fitted model for later verification");
  regress_cmd->add_option("--probes", cfg.probes, "random probe sequences for the equivalence residual");
  common(regress_cmd);

  auto* verify_cmd = app.add_subcommand("verify", "randomized property checks");
  verify_cmd->add_option("--input", cfg.input, "optional serialized fit to re-check");
  verify_cmd->add_option("--trials", cfg.trials, "instances per check");
  verify_cmd->add_option("--eps", cfg.eps, "tail tolerance for the dual-mode check");
  common(verify_cmd);

  auto* bench_cmd = app.add_subcommand("bench", "recurrent versus convolution timings");
  bench_cmd->add_option("--input", cfg.input, "state-space JSON")->required();
  bench_cmd->add_option("--lengths", cfg.lengths, "input lengths")->delimiter(',');
  bench_cmd->add_option("--eps", cfg.eps, "tail tolerance");
  common(bench_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitBadInput;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    if (cfg.command == "classify") return cmd_classify(cfg, out);
    if (cfg.command == "realize") return cmd_realize(cfg, out);
    if (cfg.command == "regress") return cmd_regress(cfg, out);
    if (cfg.command == "verify") return cmd_verify(cfg, out);
    return cmd_bench(cfg, out);
  } catch (const BadInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const WindowUnderflow& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const Unstable& e) {
    err << "error: " << e.what() << '\n';
    return kExitUnstable;
  } catch (const StabilityUndecided& e) {
    err << "error: " << e.what() << '\n';
    return kExitUnstable;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
}

}  // namespace fadekit
