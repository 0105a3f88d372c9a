#pragma once

// Sequence kernels K(z1, z2) = <H(z1), H(z2)>, Gram matrices and kernel ridge regression
// with mean-square loss and a Tikhonov penalty:
//   minimize (1/M) sum_i (f(z^i) - y_i)^2 + gamma ||f||_H^2.
// The representer solution f = sum_i alpha_i K(z^i, .) has (G + gamma M I) alpha = y.

#include <variant>
#include <vector>

#include "fadekit/convrep.hpp"
#include "fadekit/seqspace.hpp"
#include "fadekit/ssm.hpp"

namespace fadekit {

class SeqKernel {
 public:
  struct Induced {
    KernelSeq kappa;
  };
  /// K(z1, z2) = sum_{t<=0} lambda^{2|t|} <z1_t, z2_t>
  struct Lambda {
    double lambda = 1.0;
    int dim = 1;
  };

  static SeqKernel induced(KernelSeq kappa);
  /// Throws std::domain_error unless lambda in (0,1], DimensionMismatch unless dim >= 1.
  static SeqKernel lambda(double lambda, int dim);

  int dim() const;
  bool is_lambda() const { return std::holds_alternative<Lambda>(kind_); }
  const Lambda& as_lambda() const { return std::get<Lambda>(kind_); }
  const Induced& as_induced() const { return std::get<Induced>(kind_); }

 private:
  explicit SeqKernel(std::variant<Induced, Lambda> k) : kind_(std::move(k)) {}
  std::variant<Induced, Lambda> kind_;
};

/// Induced kind throws WindowUnderflow as eval does. The lambda kind runs the
/// recursion K(z1,z2) = <z1_0,z2_0> + lambda^2 K(T z1, T z2) from the oldest entry.
double kernel_eval(const SeqKernel& K, const FiniteSeq& z1, const FiniteSeq& z2);

/// Pairwise kernel values. Rows are filled in parallel (FADEKIT_THREADS caps the
/// worker count); every entry is computed by the same code path, so the result does
/// not depend on the thread count.
Matrix gram(const SeqKernel& K, const std::vector<FiniteSeq>& samples);

/// Worker count for internal parallelism: FADEKIT_THREADS if set and positive,
/// otherwise the hardware concurrency.
int worker_count();

struct RidgeFit {
  SeqKernel kernel;
  std::vector<FiniteSeq> samples;
  Matrix gram;
  double gamma = 0.0;
  Vector alpha;
  Vector targets;
};

/// Throws std::domain_error for gamma <= 0 and DimensionMismatch for empty or
/// inconsistent data; NumericalFailure if the solve misses 1e-10 ||y|| residual.
RidgeFit ridge_fit(const SeqKernel& K, std::vector<FiniteSeq> samples, const Vector& targets, double gamma);

double predict(const RidgeFit& fit, const FiniteSeq& z);

/// ridge_fit on tau_T(z^i).
RidgeFit truncated_fit(const SeqKernel& K, const std::vector<FiniteSeq>& samples, const Vector& targets,
                       double gamma, int T);

/// sqrt(alpha^T G alpha)
double rkhs_norm(const RidgeFit& fit);

/// (1/M) sum_i (f(z^i) - y_i)^2 + gamma ||f||^2 evaluated on the fit's own samples.
double objective(const RidgeFit& fit);

// --- the finite-memory primal problem ---------------------------------------

/// f(z) = sum_{t=T}^{0} <b_t, z_t>. Under the lambda kernel the RKHS norm of such f is
/// (sum_t lambda^{-2|t|} |b_t|^2)^{1/2}.
struct FiniteMemoryFit {
  double lambda = 1.0;
  int T = 0;
  int dim = 1;
  double gamma = 0.0;
  std::vector<Vector> weights;  ///< b_t for t = T..0
};

/// Tikhonov problem over functionals of memory |T|, solved in the primal through the
/// normal equations of the feature expansion. Shares no code with the kernel path.
/// Throws OrthogonalityNotCertified unless K is a lambda kernel.
FiniteMemoryFit finite_memory_fit(const SeqKernel& K, const std::vector<FiniteSeq>& samples,
                                  const Vector& targets, double gamma, int T);

double predict(const FiniteMemoryFit& fit, const FiniteSeq& z);
double rkhs_norm(const FiniteMemoryFit& fit);
double objective(const FiniteMemoryFit& fit, const std::vector<FiniteSeq>& samples, const Vector& targets);

// --- explicit structure of the lambda kernel --------------------------------

/// Coordinates of H(z) = sum_t lambda^{|t|} delta^t(z_t), block k holding lambda^k z_{-k},
/// over k = 0..horizon. Entries older than -horizon are dropped.
Vector lambda_feature_map(double lambda, const FiniteSeq& z, int horizon);

/// A lambda-kernel functional f = <y, H(.)> has RKHS norm |y|; the embedding
/// f -> <H(y), .> into l^2 has norm |H(y)|. The two differ once lambda < 1 and y
/// has mass before t = 0.
struct EmbeddingNorms {
  double rkhs = 0.0;
  double embedded = 0.0;
};
EmbeddingNorms lambda_embedding_norms(double lambda, const FiniteSeq& y);

/// Nilpotent state-space realization of H on windows of length L: the state stacks
/// lambda^k z_{-k} for k < L, so h A^{|t|} C = lambda^{|t|} times the block inclusion.
LinearSSM lambda_kernel_ssm(double lambda, int dim, int L);

}  // namespace fadekit
