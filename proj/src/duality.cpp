#include "fadekit/duality.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "fadekit/errors.hpp"

namespace fadekit {

Vector WindowedFilter::operator()(const FiniteSeq& z, int t) const {
  if (t > 0 || t < horizon) throw std::out_of_range("WindowedFilter: t outside the window");
  if (z.dim() != in_dim) throw DimensionMismatch("WindowedFilter: input dimension mismatch");
  return output(z, t);
}

FiniteSeq advance(const FiniteSeq& z, int t) {
  if (t > 0) throw std::invalid_argument("advance: t must be non-positive");
  if (t < z.start()) return FiniteSeq::zero(z.dim());
  auto first = z.entries().begin();
  return FiniteSeq(z.dim(), z.start() - t, std::vector<Vector>(first, first + (t - z.start() + 1)));
}

WindowedFilter functional_to_filter(Functional H, int in_dim, int horizon) {
  if (horizon > 0) throw std::invalid_argument("functional_to_filter: horizon must be non-positive");
  if (in_dim < 1) throw DimensionMismatch("functional_to_filter: in_dim must be positive");
  WindowedFilter U;
  U.horizon = horizon;
  U.in_dim = in_dim;
  U.output = [H = std::move(H)](const FiniteSeq& z, int t) { return H(advance(z, t)); };
  return U;
}

Functional filter_to_functional(WindowedFilter U) {
  return [U = std::move(U)](const FiniteSeq& z) { return U(z, 0); };
}

namespace {

FiniteSeq random_input(std::mt19937_64& rng, int dim, int horizon) {
  std::uniform_int_distribution<int> start_dist(horizon, 0);
  std::normal_distribution<double> normal;
  const int start = start_dist(rng);
  std::vector<Vector> entries(static_cast<size_t>(1 - start), Vector(dim));
  for (auto& e : entries) {
    for (int i = 0; i < dim; ++i) e(i) = normal(rng);
  }
  return FiniteSeq(dim, start, std::move(entries));
}

double relative_defect(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return kInf;
  const double scale = std::max({1.0, a.norm(), b.norm()});
  return (a - b).norm() / scale;
}

}  // namespace

CheckResult time_invariance_check(const WindowedFilter& U, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("time_invariance_check: trials must be positive");
  std::mt19937_64 rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const FiniteSeq z = random_input(rng, U.in_dim, U.horizon);
    for (int s = 1; s <= -U.horizon; ++s) {
      const FiniteSeq delayed = shift(z, s);
      for (int t = U.horizon + s; t <= 0; ++t) {
        const double defect = relative_defect(U(delayed, t), U(z, t - s));
        if (defect > kDualityTolerance) return {false, Violation{t, s, z, defect}};
      }
    }
  }
  return {};
}

CheckResult causality_check(const WindowedFilter& U, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("causality_check: trials must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < trials; ++trial) {
    const FiniteSeq z = random_input(rng, U.in_dim, U.horizon);
    for (int t = std::max(U.horizon, z.start()); t < 0; ++t) {
      std::vector<Vector> entries(z.entries().begin(), z.entries().end());
      for (int s = t + 1; s <= 0; ++s) {
        for (int i = 0; i < z.dim(); ++i) entries[static_cast<size_t>(s - z.start())](i) += normal(rng);
      }
      const FiniteSeq perturbed(z.dim(), z.start(), std::move(entries));
      const double defect = relative_defect(U(perturbed, t), U(z, t));
      if (defect > kDualityTolerance) return {false, Violation{t, 0, z, defect}};
    }
  }
  return {};
}

}  // namespace fadekit
