#pragma once

// Test-side generators and brute-force reference computations. Nothing here calls
// into the library beyond constructing its value types.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fadekit/convrep.hpp"
#include "fadekit/seqspace.hpp"
#include "fadekit/ssm.hpp"

namespace oracle {

using fadekit::FiniteSeq;
using fadekit::Matrix;
using fadekit::Vector;

using Rng = std::mt19937_64;

inline double normal(Rng& rng) { return std::normal_distribution<double>()(rng); }
inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline Vector random_vector(Rng& rng, int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline Matrix random_matrix(Rng& rng, int r, int c) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = normal(rng);
  return m;
}

/// Length-L sequence of standard normal entries ending at t = 0.
inline FiniteSeq random_seq(Rng& rng, int dim, int length) {
  std::vector<Vector> e;
  for (int k = 0; k < length; ++k) e.push_back(random_vector(rng, dim));
  return FiniteSeq(dim, 1 - length, std::move(e));
}

/// Random sequence with some exact-zero entries and a random scale per entry.
inline FiniteSeq random_sparse_seq(Rng& rng, int dim, int length) {
  std::vector<Vector> e;
  for (int k = 0; k < length; ++k) {
    if (uniform(rng, 0, 1) < 0.2) {
      e.push_back(Vector::Zero(dim));
    } else {
      e.push_back(std::exp(uniform(rng, -3, 3)) * random_vector(rng, dim));
    }
  }
  return FiniteSeq(dim, 1 - length, std::move(e));
}

/// Spectral radius through the eigenvalues.
inline double true_spectral_radius(const Matrix& A) {
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Random n x n matrix rescaled to spectral radius rho.
inline Matrix matrix_with_radius(Rng& rng, int n, double rho) {
  Matrix A = random_matrix(rng, n, n);
  const double r = true_spectral_radius(A);
  return A * (rho / r);
}

/// Planted spectrum: V diag-block(eigs) V^{-1} with a well-conditioned random V.
/// Complex eigenvalues enter as 2x2 rotation-scaling blocks, so `moduli` pairs
/// with `angles`; an angle of 0 gives a real eigenvalue.
inline Matrix planted_matrix(Rng& rng, const std::vector<double>& moduli, const std::vector<double>& angles) {
  std::vector<Matrix> blocks;
  int n = 0;
  for (size_t i = 0; i < moduli.size(); ++i) {
    if (angles[i] == 0.0) {
      blocks.push_back(Matrix::Constant(1, 1, moduli[i]));
      n += 1;
    } else {
      Matrix b(2, 2);
      const double c = moduli[i] * std::cos(angles[i]);
      const double s = moduli[i] * std::sin(angles[i]);
      b << c, -s, s, c;
      blocks.push_back(b);
      n += 2;
    }
  }
  Matrix D = Matrix::Zero(n, n);
  int at = 0;
  for (const auto& b : blocks) {
    D.block(at, at, b.rows(), b.cols()) = b;
    at += static_cast<int>(b.rows());
  }
  Matrix V = Matrix::Identity(n, n) + 0.3 * random_matrix(rng, n, n) / std::sqrt(static_cast<double>(n));
  return V * D * V.inverse();
}

/// sum_t kappa_t z_t over the overlap of the window and the support, indexing
/// both by lag k = -t.
inline Vector direct_convolution(const std::vector<Matrix>& mats_oldest_first, const FiniteSeq& z) {
  const int W = 1 - static_cast<int>(mats_oldest_first.size());
  Vector out = Vector::Zero(mats_oldest_first.front().rows());
  for (int k = 0; k <= -W && k <= -z.start(); ++k) {
    out += mats_oldest_first[static_cast<size_t>(-k - W)] * z.entries()[static_cast<size_t>(-k - z.start())];
  }
  return out;
}

/// sum_t lambda^{-2t} <z1_t, z2_t> by explicit powers.
inline double lambda_kernel_direct(double lambda, const FiniteSeq& a, const FiniteSeq& b) {
  double s = 0.0;
  for (int t = std::max(a.start(), b.start()); t <= 0; ++t) {
    s += std::pow(lambda, -2.0 * t) * a.entries()[static_cast<size_t>(t - a.start())].dot(
                                          b.entries()[static_cast<size_t>(t - b.start())]);
  }
  return s;
}

/// Largest singular value through the eigenvalues of M^T M.
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.transpose() * m, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline double rel_diff(double a, double b) {
  const double s = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / s;
}

}  // namespace oracle
