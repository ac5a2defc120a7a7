#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace forch {

/// Deterministic pairwise summation. The reduction tree depends only on n,
/// so repeated runs over identical data are bit-identical.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 16) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& x) {
  return pairwise_sum(x.data(), x.size());
}

/// Nonnegative magnitude carried as a natural log so that products of
/// astronomically large proof constants stay representable. lg == -inf
/// encodes exact zero.
struct Mag {
  double lg = -std::numeric_limits<double>::infinity();

  static Mag zero() { return Mag{}; }
  static Mag one() { return Mag{0.0}; }
  static Mag from_log(double l) { return Mag{l}; }

  static Mag from(double v) {
    if (!(v >= 0.0)) throw std::domain_error("Mag::from requires a nonnegative value");
    if (v == 0.0) return zero();
    return Mag{std::log(v)};
  }

  bool is_zero() const { return std::isinf(lg) && lg < 0; }

  /// exp(lg); overflows to +inf past ~1.8e308, underflows to 0. The log is
  /// the canonical representation, value() is for display only.
  double value() const { return is_zero() ? 0.0 : std::exp(lg); }

  bool representable() const { return is_zero() || lg < 709.0; }

  Mag pow(double e) const {
    if (is_zero()) {
      if (e > 0) return zero();
      if (e == 0) return one();
      throw std::domain_error("Mag::pow: negative power of zero");
    }
    return Mag{lg * e};
  }

  friend Mag operator*(Mag a, Mag b) {
    if (a.is_zero() || b.is_zero()) return zero();
    return Mag{a.lg + b.lg};
  }
  friend Mag operator/(Mag a, Mag b) {
    if (b.is_zero()) throw std::domain_error("Mag: division by zero");
    if (a.is_zero()) return zero();
    return Mag{a.lg - b.lg};
  }
  friend bool operator<(Mag a, Mag b) { return a.lg < b.lg; }
  friend bool operator<=(Mag a, Mag b) { return a.lg <= b.lg; }

  static Mag max(Mag a, Mag b) { return a.lg >= b.lg ? a : b; }

  /// log-sum-exp; exact when one side is zero.
  static Mag add(Mag a, Mag b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const double hi = std::max(a.lg, b.lg), lo = std::min(a.lg, b.lg);
    return Mag{hi + std::log1p(std::exp(lo - hi))};
  }

  /// a - b for a > b; log-diff-exp.
  static Mag sub(Mag a, Mag b) {
    if (b.is_zero()) return a;
    if (!(b.lg < a.lg)) throw std::domain_error("Mag::sub requires a > b");
    return Mag{a.lg + std::log1p(-std::exp(b.lg - a.lg))};
  }
};

/// Sampled scalar time series. Times are strictly increasing.
struct TimeSeries {
  std::vector<double> t;
  std::vector<double> v;

  std::size_t size() const { return t.size(); }

  void push(double time, double value) {
    if (!t.empty() && !(time > t.back()))
      throw std::invalid_argument("TimeSeries: times must be strictly increasing");
    t.push_back(time);
    v.push_back(value);
  }

  /// Piecewise-linear value, clamped to the end samples outside the range.
  double at(double time) const {
    if (t.empty()) throw std::runtime_error("TimeSeries: empty");
    if (time <= t.front()) return v.front();
    if (time >= t.back()) return v.back();
    std::size_t i = 1;
    while (t[i] < time) ++i;
    const double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
    return v[i - 1] + w * (v[i] - v[i - 1]);
  }

  /// Cumulative trapezoid integral up to `time`, constant-extrapolating the
  /// last sample beyond the range.
  double integral_to(double time) const {
    if (t.empty()) throw std::runtime_error("TimeSeries: empty");
    double acc = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (time <= t[i - 1]) return acc;
      const double hi = std::min(time, t[i]);
      const double vi = at(hi);
      acc += 0.5 * (v[i - 1] + vi) * (hi - t[i - 1]);
      if (time <= t[i]) return acc;
    }
    if (time > t.back()) acc += v.back() * (time - t.back());
    return acc;
  }
};

inline double trapezoid(const std::vector<double>& t, const std::vector<double>& v) {
  if (t.size() != v.size() || t.size() < 2)
    throw std::invalid_argument("trapezoid: need matching samples, at least two");
  std::vector<double> parts(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i)
    parts[i - 1] = 0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1]);
  return pairwise_sum(parts);
}

}  // namespace forch
