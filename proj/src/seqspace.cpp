#include "fadekit/seqspace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fadekit/errors.hpp"

namespace fadekit {

FiniteSeq::FiniteSeq(int dim, int start, std::vector<Vector> entries)
    : dim_(dim), start_(start), entries_(std::move(entries)) {
  if (dim_ < 1) throw DimensionMismatch("FiniteSeq: dim must be positive");
  if (start_ > 0) throw DimensionMismatch("FiniteSeq: start must be non-positive");
  if (entries_.size() != static_cast<size_t>(1 - start_)) {
    throw DimensionMismatch("FiniteSeq: expected " + std::to_string(1 - start_) + " entries, got " +
                            std::to_string(entries_.size()));
  }
  for (const auto& e : entries_) {
    if (e.size() != dim_) throw DimensionMismatch("FiniteSeq: entry length differs from dim");
  }
}

FiniteSeq FiniteSeq::zero(int dim) { return FiniteSeq(dim, 0, {Vector::Zero(dim)}); }

FiniteSeq FiniteSeq::from_columns(const Matrix& columns) {
  if (columns.cols() < 1) throw DimensionMismatch("FiniteSeq::from_columns: no columns");
  std::vector<Vector> entries;
  entries.reserve(static_cast<size_t>(columns.cols()));
  for (Eigen::Index j = 0; j < columns.cols(); ++j) entries.emplace_back(columns.col(j));
  return FiniteSeq(static_cast<int>(columns.rows()), 1 - static_cast<int>(columns.cols()),
                   std::move(entries));
}

Vector FiniteSeq::at(int t) const {
  if (t > 0) throw std::out_of_range("FiniteSeq::at: index must be non-positive");
  if (t < start_) return Vector::Zero(dim_);
  return entry(t);
}

int FiniteSeq::effective_start() const {
  for (int t = start_; t < 0; ++t) {
    if (!entry(t).isZero(0.0)) return t;
  }
  return 0;
}

FiniteSeq FiniteSeq::normalized() const {
  const int s = effective_start();
  if (s == start_) return *this;
  return FiniteSeq(dim_, s, std::vector<Vector>(entries_.begin() + (s - start_), entries_.end()));
}

bool FiniteSeq::is_zero() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const Vector& e) { return e.isZero(0.0); });
}

bool operator==(const FiniteSeq& a, const FiniteSeq& b) {
  if (a.dim_ != b.dim_) return false;
  const int lo = std::min(a.start_, b.start_);
  for (int t = lo; t <= 0; ++t) {
    if (a.at(t) != b.at(t)) return false;
  }
  return true;
}

namespace {

template <class Op>
FiniteSeq combine(const FiniteSeq& a, const FiniteSeq& b, Op op) {
  if (a.dim() != b.dim()) throw DimensionMismatch("FiniteSeq: dimension mismatch");
  const int lo = std::min(a.start(), b.start());
  std::vector<Vector> out;
  out.reserve(static_cast<size_t>(1 - lo));
  for (int t = lo; t <= 0; ++t) out.emplace_back(op(a.at(t), b.at(t)));
  return FiniteSeq(a.dim(), lo, std::move(out));
}

}  // namespace

FiniteSeq operator+(const FiniteSeq& a, const FiniteSeq& b) {
  return combine(a, b, [](const Vector& x, const Vector& y) -> Vector { return x + y; });
}

FiniteSeq operator-(const FiniteSeq& a, const FiniteSeq& b) {
  return combine(a, b, [](const Vector& x, const Vector& y) -> Vector { return x - y; });
}

FiniteSeq operator*(double s, const FiniteSeq& a) {
  std::vector<Vector> out;
  out.reserve(a.entries_.size());
  for (const auto& e : a.entries_) out.emplace_back(s * e);
  return FiniteSeq(a.dim_, a.start_, std::move(out));
}

// ---------------------------------------------------------------------------

WeightingSeq WeightingSeq::exponential(double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::domain_error("exponential weighting needs r in (0,1)");
  WeightingSeq w;
  w.kind_ = Kind::exponential;
  w.param_ = r;
  return w;
}

WeightingSeq WeightingSeq::polynomial(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw std::domain_error("polynomial weighting needs a > 0");
  WeightingSeq w;
  w.kind_ = Kind::polynomial;
  w.param_ = a;
  return w;
}

WeightingSeq WeightingSeq::tabulated(int start, std::vector<double> values, TailRule tail) {
  if (start > 0 || values.size() != static_cast<size_t>(1 - start)) {
    throw std::domain_error("tabulated weighting: need one value per t in [start, 0]");
  }
  if (!(tail.ratio > 0.0 && tail.ratio < 1.0) || !(tail.scale > 0.0) || !std::isfinite(tail.scale)) {
    throw std::domain_error("tabulated weighting: tail must decay geometrically (ratio in (0,1), scale > 0)");
  }
  for (size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0 && values[i] <= 1.0)) {
      throw std::domain_error("tabulated weighting: values must lie in (0,1]");
    }
    if (i > 0 && values[i] < values[i - 1]) {
      throw std::domain_error("tabulated weighting: values must be non-decreasing in t");
    }
  }
  WeightingSeq w;
  w.kind_ = Kind::tabulated;
  w.table_start_ = start;
  w.table_ = std::move(values);
  w.tail_ = tail;
  if (w(start - 1) > w.table_.front()) {
    throw std::domain_error("tabulated weighting: tail rule exceeds the oldest tabulated value");
  }
  return w;
}

double WeightingSeq::operator()(int t) const {
  const double k = -static_cast<double>(t);
  switch (kind_) {
    case Kind::exponential:
      return std::pow(param_, k);
    case Kind::polynomial:
      return std::pow(1.0 + k, -param_);
    case Kind::tabulated:
      if (t >= table_start_) return table_[static_cast<size_t>(t - table_start_)];
      return std::min(1.0, tail_.scale * std::pow(tail_.ratio, k));
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

void check_exponent(double p) {
  if (!(p >= 1.0)) throw std::domain_error("exponent p must satisfy p >= 1");
}

namespace {

// Weighted l^p combination of non-negative magnitudes, scaled by the largest term
// so that large p neither overflows nor underflows.
template <class WeightFn>
double weighted_norm_impl(const FiniteSeq& z, double p, WeightFn weight) {
  check_exponent(p);
  if (std::isinf(p)) {
    double best = 0.0;
    for (int t = z.start(); t <= 0; ++t) best = std::max(best, weight(t) * z.entry(t).stableNorm());
    return best;
  }
  // scale-aware: a_t = w_t^{1/p} |z_t|
  std::vector<double> a;
  a.reserve(static_cast<size_t>(z.length()));
  double amax = 0.0;
  for (int t = z.start(); t <= 0; ++t) {
    const double v = std::pow(weight(t), 1.0 / p) * z.entry(t).stableNorm();
    a.push_back(v);
    amax = std::max(amax, v);
  }
  if (amax == 0.0) return 0.0;
  if (p == 1.0) {
    double s = 0.0;
    for (double v : a) s += v;
    return s;
  }
  double s = 0.0;
  for (double v : a) s += std::pow(v / amax, p);
  return amax * std::pow(s, 1.0 / p);
}

}  // namespace

double lp_norm(const FiniteSeq& z, double p) {
  return weighted_norm_impl(z, p, [](int) { return 1.0; });
}

double weighted_lp_norm(const FiniteSeq& z, const WeightingSeq& w, double p) {
  return weighted_norm_impl(z, p, [&w](int t) { return w(t); });
}

FiniteSeq shift(const FiniteSeq& z, int s) {
  if (s < 0) throw std::invalid_argument("shift: amount must be non-negative");
  if (s == 0) return z;
  const int new_start = z.start() + s;
  if (new_start > 0) return FiniteSeq::zero(z.dim());
  // result_t = z_{t-s} for t in [new_start, 0]; source indices [z.start(), -s].
  auto first = z.entries().begin();
  return FiniteSeq(z.dim(), new_start, std::vector<Vector>(first, first + (1 - new_start)));
}

FiniteSeq truncate(const FiniteSeq& z, int T) {
  if (T > 0) throw std::invalid_argument("truncate: T must be non-positive");
  if (T <= z.start()) return z;
  auto first = z.entries().begin() + (T - z.start());
  return FiniteSeq(z.dim(), T, std::vector<Vector>(first, z.entries().end()));
}

FiniteSeq include(const Vector& v, int t) {
  if (t > 0) throw std::invalid_argument("include: t must be non-positive");
  if (v.size() < 1) throw DimensionMismatch("include: empty vector");
  std::vector<Vector> entries(static_cast<size_t>(1 - t), Vector::Zero(v.size()));
  entries.front() = v;
  return FiniteSeq(static_cast<int>(v.size()), t, std::move(entries));
}

}  // namespace fadekit
