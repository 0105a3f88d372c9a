#pragma once

// Finitely supported semi-infinite sequences z = (..., z_{-2}, z_{-1}, z_0) in R^d
// and the (weighted) l^p norms used to define fading memory.

#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace fadekit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A sequence indexed by t <= 0 whose entries vanish below `start()`.
///
/// Entries are stored oldest first: `entries()[0]` is z_start and the last
/// element is z_0. Values are immutable once constructed.
class FiniteSeq {
 public:
  /// Throws DimensionMismatch if `entries` is empty, `start > 0`,
  /// `entries.size() != 1 - start` or an entry has the wrong length.
  FiniteSeq(int dim, int start, std::vector<Vector> entries);

  /// The zero sequence in R^dim (start = 0, z_0 = 0).
  static FiniteSeq zero(int dim);

  /// Builds a sequence from a dim x L column block; column 0 is the oldest entry.
  static FiniteSeq from_columns(const Matrix& columns);

  int dim() const noexcept { return dim_; }
  int start() const noexcept { return start_; }
  int length() const noexcept { return static_cast<int>(entries_.size()); }
  std::span<const Vector> entries() const noexcept { return entries_; }

  /// z_t, the zero vector outside [start, 0]. Requires t <= 0.
  Vector at(int t) const;

  /// Reference to a stored entry; requires start <= t <= 0.
  const Vector& entry(int t) const { return entries_[static_cast<size_t>(t - start_)]; }

  /// Oldest index carrying a non-zero entry (0 for the zero sequence).
  int effective_start() const;

  /// Same sequence with leading (oldest) zero entries removed.
  FiniteSeq normalized() const;

  bool is_zero() const;

  /// Equality after zero-extension.
  friend bool operator==(const FiniteSeq& a, const FiniteSeq& b);

  friend FiniteSeq operator+(const FiniteSeq& a, const FiniteSeq& b);
  friend FiniteSeq operator-(const FiniteSeq& a, const FiniteSeq& b);
  friend FiniteSeq operator*(double s, const FiniteSeq& a);

 private:
  int dim_;
  int start_;
  std::vector<Vector> entries_;
};

/// Weighting sequence w: Z_- -> (0,1], monotone and vanishing at -infinity.
///
/// Families:
///  - exponential(r):  w_t = r^{|t|},          r in (0,1)
///  - polynomial(a):   w_t = (1 - t)^{-a},     a > 0
///  - tabulated:       explicit values on [start, 0]; below start
///                     w_t = min(1, scale * ratio^{|t|}) with ratio in (0,1).
class WeightingSeq {
 public:
  enum class Kind { exponential, polynomial, tabulated };

  struct TailRule {
    double scale;
    double ratio;
  };

  static WeightingSeq exponential(double r);
  static WeightingSeq polynomial(double a);
  /// `values` holds w_start..w_0. Throws std::domain_error unless the values lie
  /// in (0,1], are non-decreasing in t, and the tail stays below w_start.
  static WeightingSeq tabulated(int start, std::vector<double> values, TailRule tail);

  Kind kind() const noexcept { return kind_; }
  /// r for exponential, a for polynomial.
  double parameter() const noexcept { return param_; }
  int table_start() const noexcept { return table_start_; }
  std::span<const double> table() const noexcept { return table_; }
  TailRule tail() const noexcept { return tail_; }

  double operator()(int t) const;

 private:
  WeightingSeq() = default;

  Kind kind_ = Kind::exponential;
  double param_ = 0.5;
  int table_start_ = 0;
  std::vector<double> table_;
  TailRule tail_{1.0, 0.5};
};

/// Throws std::domain_error unless p >= 1 (p may be kInf).
void check_exponent(double p);

/// (sum_t |z_t|^p)^{1/p}, or sup_t |z_t| for p = inf; |.| is Euclidean on R^d.
double lp_norm(const FiniteSeq& z, double p);

/// (sum_t w_t |z_t|^p)^{1/p}, or sup_t w_t |z_t| for p = inf.
double weighted_lp_norm(const FiniteSeq& z, const WeightingSeq& w, double p);

/// Delay by s >= 0 steps: result_t = z_{t-s}. Entries pushed past t = 0 are dropped,
/// so shift(include(v, 0), 1) is the zero sequence and shift(include(v, -3), 1) = include(v, -2).
FiniteSeq shift(const FiniteSeq& z, int s);

/// Keeps z_t for T <= t <= 0 and zeroes everything older.
FiniteSeq truncate(const FiniteSeq& z, int T);

/// The inclusion delta^t(v): v at index t, zero elsewhere.
FiniteSeq include(const Vector& v, int t);

}  // namespace fadekit
