#include "fadekit/rkhs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <Eigen/Cholesky>

#include "fadekit/errors.hpp"

namespace fadekit {

SeqKernel SeqKernel::induced(KernelSeq kappa) { return SeqKernel(Induced{std::move(kappa)}); }

SeqKernel SeqKernel::lambda(double lambda, int dim) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::domain_error("lambda kernel needs lambda in (0,1]");
  if (dim < 1) throw DimensionMismatch("lambda kernel needs dim >= 1");
  return SeqKernel(Lambda{lambda, dim});
}

int SeqKernel::dim() const {
  if (is_lambda()) return as_lambda().dim;
  return as_induced().kappa.in_dim();
}

namespace {

double lambda_eval(const SeqKernel::Lambda& k, const FiniteSeq& a, const FiniteSeq& b) {
  const double l2 = k.lambda * k.lambda;
  const int lo = std::max(a.start(), b.start());  // older entries pair with zeros
  double acc = 0.0;
  for (int t = lo; t <= 0; ++t) acc = l2 * acc + a.entry(t).dot(b.entry(t));
  return acc;
}

void check_dim(const SeqKernel& K, const FiniteSeq& z) {
  if (z.dim() != K.dim()) throw DimensionMismatch("kernel: sample dimension mismatch");
}

// Fills rows i in [0, M) via fill(i), spreading rows over workers.
template <class Fill>
void parallel_rows(int M, Fill fill) {
  const int workers = std::min(worker_count(), M);
  if (workers <= 1) {
    for (int i = 0; i < M; ++i) fill(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < M && !failed; i = next++) {
        try {
          fill(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

int worker_count() {
  if (const char* env = std::getenv("FADEKIT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

double kernel_eval(const SeqKernel& K, const FiniteSeq& z1, const FiniteSeq& z2) {
  check_dim(K, z1);
  check_dim(K, z2);
  if (K.is_lambda()) return lambda_eval(K.as_lambda(), z1, z2);
  const auto& kappa = K.as_induced().kappa;
  return eval(kappa, z1).dot(eval(kappa, z2));
}

Matrix gram(const SeqKernel& K, const std::vector<FiniteSeq>& samples) {
  if (samples.empty()) throw DimensionMismatch("gram: no samples");
  for (const auto& z : samples) check_dim(K, z);
  const int M = static_cast<int>(samples.size());
  Matrix G(M, M);
  if (K.is_lambda()) {
    parallel_rows(M, [&](int i) {
      for (int j = 0; j <= i; ++j) G(i, j) = lambda_eval(K.as_lambda(), samples[i], samples[j]);
    });
  } else {
    std::vector<Vector> features(static_cast<size_t>(M));
    parallel_rows(M, [&](int i) { features[i] = eval(K.as_induced().kappa, samples[i]); });
    parallel_rows(M, [&](int i) {
      for (int j = 0; j <= i; ++j) G(i, j) = features[i].dot(features[j]);
    });
  }
  G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
  return G;
}

RidgeFit ridge_fit(const SeqKernel& K, std::vector<FiniteSeq> samples, const Vector& targets, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::domain_error("ridge_fit: gamma must be positive");
  if (samples.empty() || static_cast<Eigen::Index>(samples.size()) != targets.size()) {
    throw DimensionMismatch("ridge_fit: need one target per sample");
  }
  Matrix G = gram(K, samples);
  const auto M = static_cast<double>(samples.size());
  Matrix system = G;
  system.diagonal().array() += gamma * M;
  const Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success) throw NumericalFailure("ridge_fit: system is not positive definite");
  Vector alpha = llt.solve(targets);
  alpha += llt.solve(targets - system * alpha);  // one step of iterative refinement
  if (!alpha.allFinite() || (system * alpha - targets).norm() > 1e-10 * targets.norm()) {
    throw NumericalFailure("ridge_fit: linear solve residual too large");
  }
  return RidgeFit{K, std::move(samples), std::move(G), gamma, std::move(alpha), targets};
}

double predict(const RidgeFit& fit, const FiniteSeq& z) {
  double s = 0.0;
  for (size_t i = 0; i < fit.samples.size(); ++i) {
    if (fit.alpha(static_cast<Eigen::Index>(i)) != 0.0) {
      s += fit.alpha(static_cast<Eigen::Index>(i)) * kernel_eval(fit.kernel, fit.samples[i], z);
    }
  }
  return s;
}

RidgeFit truncated_fit(const SeqKernel& K, const std::vector<FiniteSeq>& samples, const Vector& targets,
                       double gamma, int T) {
  std::vector<FiniteSeq> cut;
  cut.reserve(samples.size());
  for (const auto& z : samples) cut.push_back(truncate(z, T));
  return ridge_fit(K, std::move(cut), targets, gamma);
}

double rkhs_norm(const RidgeFit& fit) {
  return std::sqrt(std::max(0.0, fit.alpha.dot(fit.gram * fit.alpha)));
}

double objective(const RidgeFit& fit) {
  const Vector residual = fit.gram * fit.alpha - fit.targets;
  const double M = static_cast<double>(fit.targets.size());
  return residual.squaredNorm() / M + fit.gamma * std::max(0.0, fit.alpha.dot(fit.gram * fit.alpha));
}

// ---------------------------------------------------------------------------

FiniteMemoryFit finite_memory_fit(const SeqKernel& K, const std::vector<FiniteSeq>& samples,
                                  const Vector& targets, double gamma, int T) {
  if (!K.is_lambda()) {
    throw OrthogonalityNotCertified("finite_memory_fit: only the lambda kernel has certified orthogonal shifts");
  }
  if (T > 0) throw std::invalid_argument("finite_memory_fit: T must be non-positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::domain_error("finite_memory_fit: gamma must be positive");
  if (samples.empty() || static_cast<Eigen::Index>(samples.size()) != targets.size()) {
    throw DimensionMismatch("finite_memory_fit: need one target per sample");
  }
  const double lambda = K.as_lambda().lambda;
  const int d = K.as_lambda().dim;
  const int blocks = 1 - T;
  const auto M = static_cast<Eigen::Index>(samples.size());

  // f(z) = <y, Psi(z)> with Psi(z) = (lambda^k z_{-k})_k and ||f|| = |y|.
  Matrix Psi = Matrix::Zero(M, static_cast<Eigen::Index>(blocks) * d);
  for (Eigen::Index i = 0; i < M; ++i) {
    const auto& z = samples[static_cast<size_t>(i)];
    if (z.dim() != d) throw DimensionMismatch("finite_memory_fit: sample dimension mismatch");
    double scale = 1.0;
    for (int k = 0; k < blocks; ++k, scale *= lambda) {
      if (-k < z.start()) break;
      Psi.block(i, static_cast<Eigen::Index>(k) * d, 1, d) = scale * z.entry(-k).transpose();
    }
  }
  const double m = static_cast<double>(M);
  Matrix normal = Psi.transpose() * Psi / m;
  normal.diagonal().array() += gamma;
  const Eigen::LLT<Matrix> llt(normal);
  if (llt.info() != Eigen::Success) throw NumericalFailure("finite_memory_fit: normal equations not positive definite");
  const Vector y = llt.solve(Psi.transpose() * targets / m);

  FiniteMemoryFit fit;
  fit.lambda = lambda;
  fit.T = T;
  fit.dim = d;
  fit.gamma = gamma;
  fit.weights.resize(static_cast<size_t>(blocks));
  double scale = 1.0;
  for (int k = 0; k < blocks; ++k, scale *= lambda) {
    // b_t = lambda^{|t|} y_t, stored oldest first
    fit.weights[static_cast<size_t>(blocks - 1 - k)] = scale * y.segment(static_cast<Eigen::Index>(k) * d, d);
  }
  return fit;
}

double predict(const FiniteMemoryFit& fit, const FiniteSeq& z) {
  if (z.dim() != fit.dim) throw DimensionMismatch("predict: sample dimension mismatch");
  double s = 0.0;
  for (int t = std::max(fit.T, z.start()); t <= 0; ++t) {
    s += fit.weights[static_cast<size_t>(t - fit.T)].dot(z.entry(t));
  }
  return s;
}

double rkhs_norm(const FiniteMemoryFit& fit) {
  // |y_t| = lambda^{-|t|} |b_t|, accumulated newest first to avoid overflowing lambda^{-|T|}
  double sq = 0.0;
  double inv = 1.0;
  for (int t = 0; t >= fit.T; --t, inv /= fit.lambda) {
    sq += std::pow(inv * fit.weights[static_cast<size_t>(t - fit.T)].norm(), 2);
  }
  return std::sqrt(sq);
}

double objective(const FiniteMemoryFit& fit, const std::vector<FiniteSeq>& samples, const Vector& targets) {
  if (static_cast<Eigen::Index>(samples.size()) != targets.size() || samples.empty()) {
    throw DimensionMismatch("objective: need one target per sample");
  }
  double loss = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    loss += std::pow(predict(fit, samples[i]) - targets(static_cast<Eigen::Index>(i)), 2);
  }
  const double n = rkhs_norm(fit);
  return loss / static_cast<double>(samples.size()) + fit.gamma * n * n;
}

// ---------------------------------------------------------------------------

Vector lambda_feature_map(double lambda, const FiniteSeq& z, int horizon) {
  if (horizon < 0) throw std::invalid_argument("lambda_feature_map: horizon must be non-negative");
  const int d = z.dim();
  Vector phi = Vector::Zero(static_cast<Eigen::Index>(horizon + 1) * d);
  for (int k = 0; k <= horizon && -k >= z.start(); ++k) {
    phi.segment(static_cast<Eigen::Index>(k) * d, d) = std::pow(lambda, k) * z.entry(-k);
  }
  return phi;
}

EmbeddingNorms lambda_embedding_norms(double lambda, const FiniteSeq& y) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::domain_error("lambda must lie in (0,1]");
  return {lp_norm(y, 2.0), lambda_feature_map(lambda, y, -y.start()).norm()};
}

LinearSSM lambda_kernel_ssm(double lambda, int dim, int L) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::domain_error("lambda must lie in (0,1]");
  if (dim < 1 || L < 1) throw DimensionMismatch("lambda_kernel_ssm: need dim >= 1 and L >= 1");
  const Eigen::Index n = static_cast<Eigen::Index>(dim) * L;
  Matrix A = Matrix::Zero(n, n);
  if (L > 1) A.bottomLeftCorner(n - dim, n - dim).setIdentity();
  A *= lambda;
  Matrix C = Matrix::Zero(n, dim);
  C.topRows(dim).setIdentity();
  return LinearSSM(std::move(A), std::move(C), Matrix::Identity(n, n));
}

}  // namespace fadekit
