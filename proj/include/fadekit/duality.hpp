#pragma once

// Functionals H : sequences -> R^m versus time-invariant filters U, restricted to a
// finite window [horizon, 0]:
//   (U_H(z))_t = H(z advanced so that time t becomes time 0),   H_U(z) = (U(z))_0.
// The right inverse of truncation is zero extension throughout.

#include <cstdint>
#include <functional>
#include <optional>

#include "fadekit/convrep.hpp"
#include "fadekit/seqspace.hpp"

namespace fadekit {

/// Evaluators must be safe to call concurrently.
struct WindowedFilter {
  using Evaluator = std::function<Vector(const FiniteSeq& z, int t)>;

  int horizon = 0;  ///< outputs are defined for t in [horizon, 0]
  int in_dim = 1;
  Evaluator output;

  /// (U(z))_t; throws std::out_of_range outside the window.
  Vector operator()(const FiniteSeq& z, int t) const;
};

/// The sequence whose entry at time s is z_{s+t}, for t <= 0: entries newer than t
/// are dropped and time t moves to 0.
FiniteSeq advance(const FiniteSeq& z, int t);

WindowedFilter functional_to_filter(Functional H, int in_dim, int horizon);

Functional filter_to_functional(WindowedFilter U);

/// Input z and output time t at which a check failed; s is the delay (0 for causality).
struct Violation {
  int t = 0;
  int s = 0;
  FiniteSeq z;
  double defect = 0.0;
};

struct CheckResult {
  bool passed = true;
  std::optional<Violation> counterexample;
};

inline constexpr double kDualityTolerance = 1e-12;

/// Random inputs supported on the window; for every t and s >= 0 with t - s in the
/// window compares (U(shift(z, s)))_t with (U(z))_{t-s}. Reports the first failure.
CheckResult time_invariance_check(const WindowedFilter& U, int trials, std::uint64_t seed = 1);

/// Perturbs entries newer than t and checks that (U(z))_t does not move.
CheckResult causality_check(const WindowedFilter& U, int trials, std::uint64_t seed = 1);

}  // namespace fadekit
