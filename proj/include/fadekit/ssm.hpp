#pragma once

// Finite-dimensional linear state-space systems
//   x_t = A x_{t-1} + C z_t,   y_t = h x_t
// and their convolution kernels kappa_t = h A^{|t|} C.

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fadekit/convrep.hpp"
#include "fadekit/seqspace.hpp"

namespace fadekit {

class LinearSSM {
 public:
  /// Throws DimensionMismatch unless A is n x n, C is n x d, h is m x n;
  /// std::domain_error on non-finite entries.
  LinearSSM(Matrix A, Matrix C, Matrix h);

  int state_dim() const noexcept { return static_cast<int>(A_.rows()); }
  int input_dim() const noexcept { return static_cast<int>(C_.cols()); }
  int output_dim() const noexcept { return static_cast<int>(h_.rows()); }
  const Matrix& A() const noexcept { return A_; }
  const Matrix& C() const noexcept { return C_; }
  const Matrix& h() const noexcept { return h_; }

 private:
  Matrix A_;
  Matrix C_;
  Matrix h_;
};

enum class Stability { yes, no, margin_undecided };

struct StabilityReport {
  Interval rho;          ///< enclosure of the spectral radius
  Stability stable = Stability::margin_undecided;
  int gelfand_k = 0;     ///< the bound was taken at power 2^gelfand_k
  /// ||A^j|| <= M r^j for all j >= 0; present iff stable == yes.
  struct GeometricBound {
    double M;
    double r;
  };
  std::optional<GeometricBound> geometric_bound;
};

inline constexpr double kDefaultMargin = 1e-6;
inline constexpr int kMaxSquarings = 20;

/// Gelfand-type enclosure of rho(A) by repeated squaring.
///
/// upper = min_k ||A^{2^k}||^{2^-k} (k <= 20) is rigorous by submultiplicativity;
/// lower = max over k of (|tr A^{2^k}| / n)^{2^-k} together with |det A|^{1/n}.
/// Stable when upper < 1 - margin, unstable when lower >= 1.
StabilityReport spectral_radius(const Matrix& A, double margin = kDefaultMargin);

/// Materializes kappa_t = h A^{|t|} C on a window long enough that the certified
/// tail has |||.|||_1 <= eps. A nilpotent A yields a finite window with a zero tail.
/// Throws Unstable / StabilityUndecided when A is not certified stable.
KernelSeq ssm_to_kernel(const LinearSSM& sys, double eps, double margin = kDefaultMargin);

/// h x_0 for the zero-started recursion; exact for finitely supported inputs since the
/// bounded solution of a stable system forgets everything before the support.
Vector run_recurrent(const LinearSSM& sys, const FiniteSeq& z);

/// Nonzero bounded solution x_t = Re(lambda^t v) of x_t = A x_{t-1}, t <= 0.
struct UnstableWitness {
  std::complex<double> lambda;
  Eigen::VectorXcd v;              ///< unit eigenvector, phase chosen so that Re(v) != 0
  int window = 0;                  ///< verification window t = -window..0
  std::vector<Vector> trajectory;  ///< x_t for t = -window..0
  double max_residual = 0.0;       ///< max_t |x_t - A x_{t-1}|
  double sup_norm = 0.0;           ///< max_t |x_t|
};

inline constexpr int kWitnessWindow = 64;

/// Witness for an eigenvalue with |lambda| >= 1, or nullopt when all eigenvalues lie
/// inside the unit disc. Throws NumericalFailure if the eigensolver does not converge.
std::optional<UnstableWitness> unstable_witness(const Matrix& A, int window = kWitnessWindow);

}  // namespace fadekit
