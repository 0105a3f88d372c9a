#include <doctest.h>

#include <numbers>

#include "fadekit/convrep.hpp"
#include "fadekit/errors.hpp"
#include "fadekit/ssm.hpp"
#include "oracles.hpp"

using namespace fadekit;

namespace {

Matrix scalar(double x) { return Matrix::Constant(1, 1, x); }

// scalar kernel kappa_t = values[t - W], oldest first
KernelSeq scalar_kernel(std::vector<double> values, KernelTail tail = KernelTail::zero()) {
  std::vector<Matrix> mats;
  for (double v : values) mats.push_back(scalar(v));
  const int start = 1 - static_cast<int>(mats.size());
  return KernelSeq(1, 1, start, std::move(mats), tail);
}

KernelSeq random_kernel(oracle::Rng& rng, int d, int m, int W, KernelTail tail = KernelTail::zero()) {
  std::vector<Matrix> mats;
  for (int t = W; t <= 0; ++t) mats.push_back(oracle::random_matrix(rng, m, d));
  return KernelSeq(d, m, W, std::move(mats), tail);
}

// kappa_t = c * rho^{|t|} * G_t with |G_t| <= 1 on [W, 0] plus the matching tail.
KernelSeq random_decaying_kernel(oracle::Rng& rng, int d, int m, int W, double c, double rho) {
  std::vector<Matrix> mats;
  for (int t = W; t <= 0; ++t) {
    Matrix G = oracle::random_matrix(rng, m, d);
    G /= oracle::spectral_norm(G);
    mats.push_back(c * std::pow(rho, -t) * oracle::uniform(rng, 0.0, 1.0) * G);
  }
  return KernelSeq(d, m, W, std::move(mats), KernelTail::geometric(c, rho));
}

}  // namespace

TEST_CASE("KernelSeq validates shapes and tails") {
  CHECK_THROWS_AS(KernelSeq(1, 1, -1, {scalar(1)}), DimensionMismatch);
  CHECK_THROWS_AS(KernelSeq(2, 1, 0, {scalar(1)}), DimensionMismatch);
  CHECK_THROWS_AS(KernelSeq(1, 1, 1, {}), DimensionMismatch);
  CHECK_THROWS_AS(KernelSeq(1, 1, 0, {scalar(1)}, KernelTail::geometric(1.0, 1.0)), std::domain_error);
  CHECK_THROWS_AS(KernelSeq(1, 1, 0, {scalar(1)}, KernelTail::geometric(-1.0, 0.5)), std::domain_error);
  CHECK(scalar_kernel({1, 2}).finite_memory());
  CHECK_FALSE(scalar_kernel({1}, KernelTail::geometric(1, 0.5)).finite_memory());
  CHECK(scalar_kernel({1}, KernelTail::geometric(0, 0.5)).finite_memory());
}

TEST_CASE("eval examples") {
  const KernelSeq k = scalar_kernel({0.25, 0.5, 1.0});  // 2^t on -2..0
  CHECK(eval(k, FiniteSeq::zero(1))(0) == 0.0);
  CHECK(eval(k, include(Vector::Constant(1, 3.0), -1))(0) == doctest::Approx(1.5));
  const FiniteSeq ones(1, -2, std::vector<Vector>(3, Vector::Ones(1)));
  CHECK(eval(k, ones)(0) == doctest::Approx(1.75).epsilon(1e-15));
  CHECK_THROWS_AS(eval(k, FiniteSeq::zero(2)), DimensionMismatch);
}

TEST_CASE("eval below the window") {
  const KernelSeq finite = scalar_kernel({1.0});
  const FiniteSeq z(1, -3, std::vector<Vector>(4, Vector::Ones(1)));
  CHECK(eval(finite, z)(0) == 1.0);  // zero tail: older entries contribute nothing

  const KernelSeq geo = scalar_kernel({1.0}, KernelTail::geometric(2.0, 0.5));
  try {
    eval(geo, z);
    FAIL("expected WindowUnderflow");
  } catch (const WindowUnderflow& e) {
    CHECK(e.partial()(0) == 1.0);
    CHECK(e.residual_bound() == doctest::Approx(2.0 * (0.5 + 0.25 + 0.125)));
  }
  // zeros below the window are harmless even with a live tail
  const FiniteSeq padded(1, -3, {Vector::Zero(1), Vector::Zero(1), Vector::Zero(1), Vector::Ones(1)});
  CHECK(eval(geo, padded)(0) == 1.0);
  const auto wv = eval_windowed(geo, z);
  CHECK(wv.truncated);
  CHECK(wv.value(0) == 1.0);
}

TEST_CASE("op_norm examples") {
  CHECK(op_norm(Matrix::Zero(2, 3)) == 0.0);
  CHECK(op_norm(Matrix::Identity(4, 4)) == doctest::Approx(1.0));
  Matrix D(2, 2);
  D << 3, 0, 0, 4;
  CHECK(op_norm(D) == doctest::Approx(4.0));
  oracle::Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const Matrix m = oracle::random_matrix(rng, oracle::uniform_int(rng, 1, 5), oracle::uniform_int(rng, 1, 5));
    CHECK(op_norm(m) == doctest::Approx(oracle::spectral_norm(m)).epsilon(1e-12));
  }
}

TEST_CASE("q_seq_norm examples") {
  const KernelSeq finite = scalar_kernel({3.0, -4.0});
  for (double q : {1.0, 2.0, kInf}) {
    const Interval iv = q_seq_norm(finite, q);
    CHECK(iv.lower == iv.upper);
  }
  CHECK(q_seq_norm(finite, 1.0).upper == doctest::Approx(7.0));
  CHECK(q_seq_norm(finite, 2.0).upper == doctest::Approx(5.0));
  CHECK(q_seq_norm(finite, kInf).upper == 4.0);
  CHECK_THROWS_AS(q_seq_norm(finite, 0.9), std::domain_error);

  const KernelSeq geo = scalar_kernel({1.0}, KernelTail::geometric(1.0, 0.5));
  const Interval g = q_seq_norm(geo, 1.0);
  CHECK(g.lower == doctest::Approx(1.0));
  CHECK(g.upper == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(g.upper >= 2.0);

  // zeta(2) for the omega = 1 power law
  const Interval pl = q_seq_norm(AnalyticKernel{PowerLawKernel{1.0, 1000}}, 1.0);
  const double basel = std::numbers::pi * std::numbers::pi / 6.0;
  CHECK(pl.contains(basel));
  CHECK(pl.upper - pl.lower < 1e-5);
  CHECK(q_seq_norm(AnalyticKernel{PowerLawKernel{-0.5, 1000}}, 1.0).lower == kInf);
  CHECK(q_seq_norm(AnalyticKernel{ConstantKernel{2.0}}, 2.0).lower == kInf);
  CHECK(q_seq_norm(AnalyticKernel{ConstantKernel{2.0}}, kInf).upper == 2.0);
}

TEST_CASE("q_seq_norm encloses a long explicit sum") {
  oracle::Rng rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const double rho = oracle::uniform(rng, 0.1, 0.9);
    const int W = -oracle::uniform_int(rng, 0, 10);
    // exact kernel c rho^{|t|} everywhere; the window holds the head
    std::vector<double> values;
    for (int t = W; t <= 0; ++t) values.push_back(std::pow(rho, -t));
    const KernelSeq k = scalar_kernel(values, KernelTail::geometric(1.0, rho));
    for (double q : {1.0, 2.0, 3.0}) {
      const double exact = std::pow(1.0 / (1.0 - std::pow(rho, q)), 1.0 / q);
      CHECK(q_seq_norm(k, q).contains(exact));
    }
  }
}

TEST_CASE("classify examples") {
  const KernelSeq finite = scalar_kernel({0.0, 1.0, -2.0});
  for (double p : {1.0, 2.0, kInf}) {
    const FMPReport r = classify(finite, p);
    for (const auto& [name, v] : r.verdicts) CHECK(v == Verdict::holds);
    CHECK(r.finite_memory);
  }
  oracle::Rng rng(3);
  const LinearSSM sys(oracle::matrix_with_radius(rng, 3, 0.8), oracle::random_matrix(rng, 3, 2),
                      oracle::random_matrix(rng, 2, 3));
  const FMPReport ssm = classify(ssm_to_kernel(sys, 1e-8), kInf);
  CHECK(ssm.verdict(property::weighted_fmp) == Verdict::holds);
  CHECK(ssm.verdict(property::product_fmp) == Verdict::fails);

  const FMPReport c1 = classify(AnalyticKernel{ConstantKernel{1.0}}, 1.0);
  CHECK(c1.verdict(property::continuity) == Verdict::holds);
  CHECK(c1.verdict(property::weighted_fmp) == Verdict::fails);
  CHECK(c1.verdict(property::minimal) == Verdict::holds);
  CHECK_THROWS_AS(classify(finite, 0.5), std::domain_error);
}

TEST_CASE("classifier truth table on analytic families") {
  const std::vector<double> ps = {1.0, 2.0, kInf};
  for (double omega : {0.5, 1.0, 2.0}) {
    for (double p : ps) {
      const FMPReport r = classify(AnalyticKernel{PowerLawKernel{omega, 1000}}, p);
      CHECK(r.verdict(property::weighted_fmp) == Verdict::holds);
      CHECK(r.verdict(property::continuity) == Verdict::holds);
      CHECK(r.verdict(property::minimal) == Verdict::holds);
      CHECK(r.verdict(property::product_fmp) == Verdict::fails);
    }
  }
  // sum ||kappa_t|| diverges for omega <= 0, so the infinity-weighted FMP fails
  const FMPReport slow = classify(AnalyticKernel{PowerLawKernel{-0.5, 1000}}, kInf);
  CHECK(slow.verdict(property::weighted_fmp) == Verdict::fails);
  // (1 - t)^{-q/2} is summable iff q > 2
  CHECK(classify(AnalyticKernel{PowerLawKernel{-0.5, 1000}}, 1.5).verdict(property::weighted_fmp) == Verdict::holds);
  CHECK(classify(AnalyticKernel{PowerLawKernel{-0.5, 1000}}, 2.0).verdict(property::weighted_fmp) == Verdict::fails);
  for (double p : {2.0, kInf}) {
    const FMPReport r = classify(AnalyticKernel{ConstantKernel{1.0}}, p);
    for (const auto& [name, v] : r.verdicts) CHECK(v == Verdict::fails);
  }
}

TEST_CASE("verdicts respect the implication diagram") {
  oracle::Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const bool finite = trial % 3 == 0;
    const KernelSeq k = finite ? random_kernel(rng, 2, 2, -oracle::uniform_int(rng, 0, 6))
                               : random_decaying_kernel(rng, 2, 2, -oracle::uniform_int(rng, 0, 6), 1.5,
                                                        oracle::uniform(rng, 0.1, 0.95));
    for (double p : {1.0, 1.5, 2.0, 4.0, kInf}) {
      const FMPReport r = classify(k, p);
      CHECK(r.q_norm.lower <= r.q_norm.upper);
      if (r.verdict(property::weighted_fmp) == Verdict::holds) {
        CHECK(r.verdict(property::continuity) == Verdict::holds);
        CHECK(r.verdict(property::minimal) == Verdict::holds);
      }
      if (r.verdict(property::product_fmp) == Verdict::holds) {
        for (const auto& [name, v] : r.verdicts) CHECK(v == Verdict::holds);
      }
      CHECK(r.finite_memory == finite);
    }
  }
}

TEST_CASE("construct_weighting examples") {
  std::vector<double> halves;
  for (int t = -6; t <= 0; ++t) halves.push_back(std::pow(0.5, -t));
  const auto w = construct_weighting(scalar_kernel(halves, KernelTail::geometric(1.0, 0.5)));
  REQUIRE(std::holds_alternative<WeightingSeq>(w));
  for (int t = -20; t <= 0; ++t) CHECK(std::get<WeightingSeq>(w)(t) == doctest::Approx(std::pow(0.5, -t)));

  const auto flag = construct_weighting(scalar_kernel({0, 0, 0, 0.3, 1, 1, 1}));
  REQUIRE(std::holds_alternative<FiniteMemoryFlag>(flag));
  CHECK(std::get<FiniteMemoryFlag>(flag).last_nonzero == -3);

  std::vector<double> clipped;
  for (int t = -5; t <= 0; ++t) clipped.push_back(std::min(1.0, 2.0 * std::pow(0.5, -t)));
  const auto w2 = std::get<WeightingSeq>(construct_weighting(scalar_kernel(clipped, KernelTail::geometric(2.0, 0.5))));
  CHECK(w2(0) == 1.0);
  CHECK(w2(-1) == 1.0);
  CHECK(w2(-2) == doctest::Approx(0.5));
  CHECK(w2(-3) == doctest::Approx(0.25));

  CHECK_THROWS_AS(construct_weighting(AnalyticKernel{ConstantKernel{1.0}}), NoWeighting);
  const auto wp = std::get<WeightingSeq>(construct_weighting(AnalyticKernel{PowerLawKernel{1.0, 10}}));
  CHECK(wp(-1) == doctest::Approx(0.25));
}

TEST_CASE("continuity_bound examples") {
  const KernelSeq finite = scalar_kernel({2.0, -1.0, 3.0});
  const auto w = WeightingSeq::exponential(0.5);
  // p = inf: sum_t w_t^{-1} |kappa_t| = 3 + 1*2 + 2*4
  CHECK(*continuity_bound(finite, w, kInf) == doctest::Approx(13.0));
  // p = 2: sqrt(sum w_t^{-1} kappa_t^2)
  CHECK(*continuity_bound(finite, w, 2.0) == doctest::Approx(std::sqrt(9.0 + 2.0 + 16.0)));
  CHECK_THROWS_AS(continuity_bound(finite, w, 1.0), Unsupported);

  const double rho = 0.3, r = 0.6;
  std::vector<double> vals;
  for (int t = -4; t <= 0; ++t) vals.push_back(std::pow(rho, -t));
  const auto b = continuity_bound(scalar_kernel(vals, KernelTail::geometric(1.0, rho)), WeightingSeq::exponential(r), kInf);
  REQUIRE(b.has_value());
  CHECK(*b == doctest::Approx(1.0 / (1.0 - rho / r)).epsilon(1e-12));
  CHECK(*b >= 1.0 / (1.0 - rho / r));
  // r <= rho: the series diverges
  CHECK_FALSE(continuity_bound(scalar_kernel(vals, KernelTail::geometric(1.0, rho)), WeightingSeq::exponential(0.2), kInf));

  const AnalyticKernel pl = PowerLawKernel{1.0, 1000};
  CHECK_FALSE(continuity_bound(pl, WeightingSeq::exponential(0.99), kInf).has_value());
  CHECK_FALSE(continuity_bound(pl, WeightingSeq::exponential(0.99), 2.0).has_value());
  CHECK(continuity_bound(pl, WeightingSeq::polynomial(0.5), kInf).has_value());
  CHECK_FALSE(continuity_bound(AnalyticKernel{ConstantKernel{1}}, WeightingSeq::polynomial(1), 2.0).has_value());
}

TEST_CASE("Hoelder certificate bounds evaluation") {
  oracle::Rng rng(5);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int d = oracle::uniform_int(rng, 1, 3), m = oracle::uniform_int(rng, 1, 3);
    const int W = -oracle::uniform_int(rng, 0, 8);
    const double rho = oracle::uniform(rng, 0.1, 0.8);
    const KernelSeq k = random_decaying_kernel(rng, d, m, W, oracle::uniform(rng, 0.5, 3.0), rho);
    const double p = trial % 2 ? 2.0 : kInf;
    WeightingSeq w = WeightingSeq::exponential(oracle::uniform(rng, 0.05, 0.99));
    if (trial % 3 == 0) w = WeightingSeq::polynomial(oracle::uniform(rng, 0.1, 3.0));
    if (trial % 5 == 0) w = std::get<WeightingSeq>(construct_weighting(k));
    const auto B = continuity_bound(k, w, p);
    if (!B) continue;
    ++checked;
    const FiniteSeq z = oracle::random_sparse_seq(rng, d, 1 - W);
    CHECK(eval(k, z).norm() <= *B * weighted_lp_norm(z, w, p) * (1 + 1e-12));
  }
  CHECK(checked > 100);
}

TEST_CASE("constructed weighting certifies the l^1 bound") {
  oracle::Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = oracle::uniform_int(rng, 1, 3), W = -oracle::uniform_int(rng, 0, 10);
    const KernelSeq k = random_decaying_kernel(rng, d, 2, W, oracle::uniform(rng, 0.2, 4.0), oracle::uniform(rng, 0.1, 0.9));
    const auto w = std::get<WeightingSeq>(construct_weighting(k));
    const double C = weighting_constant(k);
    const FiniteSeq z = oracle::random_sparse_seq(rng, d, 1 - W);
    CHECK(eval(k, z).norm() <= C * weighted_lp_norm(z, w, 1.0) * (1 + 1e-12));
  }
}

TEST_CASE("eval is linear") {
  oracle::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = oracle::uniform_int(rng, 1, 4), m = oracle::uniform_int(rng, 1, 4), W = -oracle::uniform_int(rng, 0, 12);
    const KernelSeq k = random_kernel(rng, d, m, W);
    const FiniteSeq a = oracle::random_seq(rng, d, oracle::uniform_int(rng, 1, 20));
    const FiniteSeq b = oracle::random_seq(rng, d, oracle::uniform_int(rng, 1, 20));
    const double x = oracle::normal(rng), y = oracle::normal(rng);
    const Vector lhs = eval(k, x * a + y * b);
    const Vector rhs = x * eval(k, a) + y * eval(k, b);
    CHECK((lhs - rhs).norm() <= 1e-12 * (std::abs(x) * eval(k, a).norm() + std::abs(y) * eval(k, b).norm() + 1.0));
    std::vector<Matrix> mats(k.matrices().begin(), k.matrices().end());
    CHECK((eval(k, a) - oracle::direct_convolution(mats, a)).norm() <= 1e-12 * (1 + eval(k, a).norm()));
  }
}

TEST_CASE("extract_kernel examples") {
  oracle::Rng rng(8);
  const KernelSeq k0 = random_kernel(rng, 2, 3, -5);
  const Extraction ex = extract_kernel([&](const FiniteSeq& z) { return eval(k0, z); }, 2, -5);
  for (int t = -5; t <= 0; ++t) CHECK((ex.kernel.at(t) - k0.at(t)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(ex.max_linearity_defect <= 1e-12);

  const Extraction zero = extract_kernel([](const FiniteSeq&) { return Vector::Zero(2); }, 3, -2);
  for (const auto& mtx : zero.kernel.matrices()) CHECK(mtx.isZero(0.0));

  const Extraction proj = extract_kernel([](const FiniteSeq& z) { return z.at(0); }, 3, -3);
  CHECK(proj.kernel.at(0).isIdentity(0.0));
  for (int t = -3; t < 0; ++t) CHECK(proj.kernel.at(t).isZero(0.0));

  const Functional square = [](const FiniteSeq& z) {
    Vector v = z.at(0);
    return Vector(v.array().square());
  };
  CHECK_THROWS_AS(extract_kernel(square, 2, -3), NotLinear);
  // affine is not linear either
  CHECK_THROWS_AS(extract_kernel([](const FiniteSeq& z) { return Vector(z.at(0).array() + 1.0); }, 1, 0), NotLinear);
}

TEST_CASE("orthant_index examples") {
  CHECK(orthant_index(Vector::Zero(3)) == 1);
  Vector y(2);
  y << 1, 1;
  CHECK(orthant_index(y) == 1);
  y << -1, 1;
  CHECK(orthant_index(y) == 2);
  Vector y3(3);
  y3 << 1, -3, 2;
  CHECK(orthant_index(y3) == 3);
  y3 << -1, -1, -1;
  CHECK(orthant_index(y3) == 8);
}

TEST_CASE("cone certificate examples") {
  oracle::Rng rng(9);
  const KernelSeq k = random_kernel(rng, 2, 2, -19);
  const ConeCertificate zero = cone_certificate(k, FiniteSeq::zero(2));
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);
  CHECK(zero.holds);

  // m = 1: sum |kappa_t z_t| equals |positive part| + |negative part|
  const KernelSeq k1 = random_kernel(rng, 1, 1, -9);
  const FiniteSeq z1 = oracle::random_seq(rng, 1, 10);
  const ConeCertificate c1 = cone_certificate(k1, z1);
  double pos = 0.0, neg = 0.0;
  for (int t = -9; t <= 0; ++t) {
    const double v = k1.at(t)(0, 0) * z1.at(t)(0);
    (v >= 0 ? pos : neg) += v;
  }
  CHECK(c1.lhs == doctest::Approx(pos - neg).epsilon(1e-13));
  CHECK(c1.rhs / c1.constant == doctest::Approx(pos - neg).epsilon(1e-13));
  CHECK(c1.holds);

  const ConeCertificate c2 = cone_certificate(k, oracle::random_seq(rng, 2, 20));
  CHECK(c2.holds);
  CHECK(c2.index_sets.size() == 4);
  CHECK(c2.constant == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("same-orthant vectors satisfy the cone inequality") {
  oracle::Rng rng(10);
  for (int trial = 0; trial < 2000; ++trial) {
    const int m = oracle::uniform_int(rng, 1, 4);
    Vector sign(m);
    for (int i = 0; i < m; ++i) sign(i) = oracle::uniform(rng, 0, 1) < 0.5 ? -1.0 : 1.0;
    Vector sum = Vector::Zero(m);
    double norms = 0.0;
    for (int n = oracle::uniform_int(rng, 1, 12); n > 0; --n) {
      const Vector v = oracle::random_vector(rng, m).cwiseAbs().cwiseProduct(sign);
      sum += v;
      norms += v.norm();
    }
    CHECK(norms <= cone_constant(m) * sum.norm() * (1 + 1e-12));
    if (m <= 2) CHECK(norms <= std::sqrt(2.0) * sum.norm() * (1 + 1e-12));
  }
}

TEST_CASE("sqrt(2) is too small in three dimensions") {
  // the coordinate axes share the closed positive orthant of R^3
  const Matrix I = Matrix::Identity(3, 3);
  const double norms = 3.0;
  const double sum = (I.col(0) + I.col(1) + I.col(2)).norm();
  CHECK(norms > std::sqrt(2.0) * sum);
  CHECK(norms <= cone_constant(3) * sum * (1 + 1e-15));
}

TEST_CASE("cone certificate always holds") {
  oracle::Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = oracle::uniform_int(rng, 1, 3), d = oracle::uniform_int(rng, 1, 3);
    const int W = -oracle::uniform_int(rng, 0, 25);
    const KernelSeq k = random_kernel(rng, d, m, W);
    const ConeCertificate c = cone_certificate(k, oracle::random_sparse_seq(rng, d, oracle::uniform_int(rng, 1, 1 - W)));
    CHECK(c.holds);
    CHECK(c.index_sets.size() == (size_t{1} << m));
  }
}
