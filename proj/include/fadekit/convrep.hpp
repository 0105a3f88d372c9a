#pragma once

// Convolution representations H(z) = sum_{t<=0} kappa_t z_t of linear functionals,
// their summability, and the fading-memory verdicts they imply.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fadekit/seqspace.hpp"

namespace fadekit {

/// Certified enclosure [lower, upper]; upper may be +inf.
struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double x) const { return lower <= x && x <= upper; }
};

/// What is known about kappa_t for t below the explicit window.
struct KernelTail {
  enum class Kind { zero, geometric };
  Kind kind = Kind::zero;
  double M = 0.0;    ///< ||kappa_t||_op <= M rho^{|t|} for t < window_start
  double rho = 0.5;

  static KernelTail zero() { return {}; }
  static KernelTail geometric(double M, double rho) { return {Kind::geometric, M, rho}; }
  bool vanishes() const { return kind == Kind::zero || M == 0.0; }
};

/// Sequence of m x d matrices kappa_t on an explicit window [window_start, 0]
/// plus a certified tail bound for everything older.
class KernelSeq {
 public:
  /// `matrices` is ordered t = window_start..0. Throws DimensionMismatch on
  /// shape errors and std::domain_error on an invalid tail.
  KernelSeq(int in_dim, int out_dim, int window_start, std::vector<Matrix> matrices,
            KernelTail tail = KernelTail::zero());

  int in_dim() const noexcept { return in_dim_; }
  int out_dim() const noexcept { return out_dim_; }
  int window_start() const noexcept { return window_start_; }
  const KernelTail& tail() const noexcept { return tail_; }
  std::span<const Matrix> matrices() const noexcept { return matrices_; }

  /// kappa_t for t in the window.
  const Matrix& at(int t) const { return matrices_[static_cast<size_t>(t - window_start_)]; }

  /// ||kappa_t||_op for each window entry, oldest first.
  std::vector<double> window_norms() const;

  /// Bound on ||kappa_t||_op valid for every t (exact inside the window).
  double norm_bound(int t) const;

  bool finite_memory() const { return tail_.vanishes(); }

 private:
  int in_dim_;
  int out_dim_;
  int window_start_;
  std::vector<Matrix> matrices_;
  KernelTail tail_;
};

// --- analytic families whose tails are not geometric ------------------------

/// ||kappa_t|| = (1 - t)^{-(1 + omega)}, omega > -1. The first `window` + 1 terms
/// are summed explicitly, the rest is bracketed by integral comparison.
struct PowerLawKernel {
  double omega = 1.0;
  int window = 1000;
};

/// ||kappa_t|| = level > 0 for every t <= 0.
struct ConstantKernel {
  double level = 1.0;
};

using AnalyticKernel = std::variant<PowerLawKernel, ConstantKernel>;

/// ||kappa_t|| for an analytic family.
double analytic_norm(const AnalyticKernel& k, int t);

// --- evaluation -------------------------------------------------------------

struct WindowedValue {
  Vector value;                ///< sum over the explicit window
  double residual_bound = 0.0; ///< M * sum_{t<W} rho^{|t|} |z_t|
  bool truncated = false;      ///< input reached below the window with a non-zero tail
};

/// sum_t kappa_t z_t. Throws DimensionMismatch, or WindowUnderflow when z has
/// non-zero entries older than the window and the tail does not vanish.
Vector eval(const KernelSeq& kappa, const FiniteSeq& z);

/// Like eval but reports the residual instead of throwing.
WindowedValue eval_windowed(const KernelSeq& kappa, const FiniteSeq& z);

/// Spectral norm (largest singular value).
double op_norm(const Matrix& mat);

/// Hoelder conjugate of p (1 <-> inf).
double conjugate_exponent(double p);

/// Enclosure of (sum_t ||kappa_t||^q)^{1/q} (sup_t ||kappa_t|| for q = inf).
Interval q_seq_norm(const KernelSeq& kappa, double q);
Interval q_seq_norm(const AnalyticKernel& kappa, double q);

// --- classification ---------------------------------------------------------

enum class Verdict { holds, fails, undecidable };
enum class TriState { yes, no, unknown };

std::string to_string(Verdict v);
std::string to_string(TriState v);

namespace property {
inline constexpr const char* weighted_fmp = "p_weighted_fmp";
inline constexpr const char* continuity = "p_continuity";
inline constexpr const char* minimal = "minimal_fmp_and_minimal_continuity";
inline constexpr const char* product_fmp = "product_fmp";
}  // namespace property

struct FMPReport {
  double p = 1.0;
  double q = kInf;
  Interval q_norm;
  Interval sup_norm;
  TriState decays_to_zero = TriState::unknown;
  bool finite_memory = false;
  std::map<std::string, Verdict> verdicts;

  Verdict verdict(const std::string& prop) const { return verdicts.at(prop); }
};

/// Verdicts for the functional represented by kappa on an l^p domain that contains
/// c_0 intersected with the l^p unit ball:
///   p in (1,inf): p-weighted FMP <=> p-continuity <=> minimal pair <=> |||kappa|||_q < inf
///   p = inf:      same with |||kappa|||_1
///   p = 1:        1-continuity <=> minimal pair <=> |||kappa|||_inf < inf,
///                 1-weighted FMP <=> ||kappa_t|| -> 0
///   product FMP <=> finite memory.
FMPReport classify(const KernelSeq& kappa, double p);
FMPReport classify(const AnalyticKernel& kappa, double p);

// --- weighting sequences from kernels ---------------------------------------

/// Marker for an eventually-zero weighting candidate, i.e. finite memory.
struct FiniteMemoryFlag {
  int last_nonzero = 0;  ///< oldest t with kappa_t != 0 (0 if kappa is identically zero)
};

/// w_t = sup_{s<=t} min{1, ||kappa_s||}, with the tail sup bounded by min{1, M rho^{|t|}}.
/// Returns FiniteMemoryFlag when w is eventually zero.
std::variant<WeightingSeq, FiniteMemoryFlag> construct_weighting(const KernelSeq& kappa);
/// Power laws give a polynomial weighting; a constant kernel throws NoWeighting.
std::variant<WeightingSeq, FiniteMemoryFlag> construct_weighting(const AnalyticKernel& kappa);

/// C = sup_t max{1, ||kappa_t||}, so that |H(z)| <= C |z|_{w,1} with w from construct_weighting.
double weighting_constant(const KernelSeq& kappa);

/// (sum_t w_t^{-q r} ||kappa_t||^q)^{1/q} with r = 1/p (r = 1 for p = inf), the constant B
/// in |H(z)| <= B |z|_{w,p}. Returns nullopt when no finite certificate exists under w.
/// Throws Unsupported for p = 1.
std::optional<double> continuity_bound(const KernelSeq& kappa, const WeightingSeq& w, double p);
std::optional<double> continuity_bound(const AnalyticKernel& kappa, const WeightingSeq& w, double p);

// --- black-box kernel extraction --------------------------------------------

using Functional = std::function<Vector(const FiniteSeq&)>;

struct Extraction {
  KernelSeq kernel;               ///< tail recorded as zero: nothing is known beyond the horizon
  int horizon = 0;                ///< probed window [horizon, 0]
  double max_linearity_defect = 0.0;
};

inline constexpr int kLinearityPairs = 32;
inline constexpr double kLinearityTolerance = 1e-9;

/// kappa_t e_j = H(delta^t(e_j)) for t in [horizon, 0]. Linearity is spot-checked on
/// random pairs; a relative defect above kLinearityTolerance throws NotLinear.
Extraction extract_kernel(const Functional& H, int in_dim, int horizon, std::uint64_t seed = 0x5eed);

// --- cone partition ---------------------------------------------------------

/// Orthant of y: bit i is set iff y_i < 0; result is 1 + sum_i bit_i 2^i.
int orthant_index(const Vector& y);

/// Constant c with sum ||v_n|| <= c ||sum v_n|| for v_n in one orthant of R^m.
double cone_constant(int m);

struct ConeCertificate {
  std::vector<std::vector<int>> index_sets;  ///< J_i for orthants 1..2^m
  double lhs = 0.0;                          ///< sum_t ||kappa_t z_t||
  double rhs = 0.0;                          ///< c * sum_i ||H(z^i)||
  double constant = 0.0;
  bool holds = false;
};

/// Splits the time indices of z by the orthant of kappa_t z_t and compares both sides
/// of the cone inequality. Throws WindowUnderflow as eval does.
ConeCertificate cone_certificate(const KernelSeq& kappa, const FiniteSeq& z);

}  // namespace fadekit
