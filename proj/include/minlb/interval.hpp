#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace minlb {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval [lo, hi]. Results of arithmetic are conservative:
/// every finite bound is nudged outward by one ulp so that floating-point
/// evaluation of the underlying expression can never escape the interval.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  Interval() = default;
  Interval(double l, double h) : lo(l), hi(h) {
    if (!(lo <= hi)) throw std::invalid_argument("Interval: lo > hi");
  }
  static Interval point(double v) { return Interval(v, v); }

  bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
  bool contains(double v, double slack = 0.0) const {
    return v >= lo - slack && v <= hi + slack;
  }
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

namespace detail {

inline double down(double v) {
  return std::isfinite(v) ? std::nextafter(v, -kInf) : v;
}
inline double up(double v) {
  return std::isfinite(v) ? std::nextafter(v, kInf) : v;
}
inline Interval widen(double lo, double hi) { return Interval(down(lo), up(hi)); }

// 0 * inf arises from zero coefficients on unbounded variables; the exact
// contribution is zero, so treat it as such.
inline double mul0(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b;
}

}  // namespace detail

inline Interval operator+(const Interval& a, const Interval& b) {
  return detail::widen(a.lo + b.lo, a.hi + b.hi);
}

inline Interval operator-(const Interval& a, const Interval& b) {
  return detail::widen(a.lo - b.hi, a.hi - b.lo);
}

inline Interval operator*(const Interval& a, const Interval& b) {
  using detail::mul0;
  const double c[4] = {mul0(a.lo, b.lo), mul0(a.lo, b.hi), mul0(a.hi, b.lo),
                       mul0(a.hi, b.hi)};
  return detail::widen(std::min({c[0], c[1], c[2], c[3]}),
                       std::max({c[0], c[1], c[2], c[3]}));
}

inline Interval scale(const Interval& a, double s) {
  double lo = detail::mul0(s, a.lo), hi = detail::mul0(s, a.hi);
  if (lo > hi) std::swap(lo, hi);
  return detail::widen(lo, hi);
}

inline Interval shift(const Interval& a, double c) {
  return detail::widen(a.lo + c, a.hi + c);
}

/// Division requires the denominator interval to exclude zero.
inline Interval operator/(const Interval& a, const Interval& b) {
  if (b.lo <= 0.0 && b.hi >= 0.0)
    throw std::domain_error("interval division: denominator range contains 0");
  Interval inv = detail::widen(1.0 / b.hi, 1.0 / b.lo);
  return a * inv;
}

inline Interval int_pow(const Interval& a, long long k) {
  if (k == 0) return Interval(1.0, 1.0);
  if (k < 0) return Interval(1.0, 1.0) / int_pow(a, -k);
  auto p = [&](double v) { return std::pow(v, static_cast<double>(k)); };
  if (k % 2 != 0) return detail::widen(p(a.lo), p(a.hi));  // odd: monotone
  if (a.lo >= 0.0) return detail::widen(p(a.lo), p(a.hi));
  if (a.hi <= 0.0) return detail::widen(p(a.hi), p(a.lo));
  return detail::widen(0.0, std::max(p(a.lo), p(a.hi)));  // even, straddling 0
}

inline Interval exp(const Interval& a) {
  return detail::widen(std::exp(a.lo), std::exp(a.hi));
}

inline Interval log(const Interval& a) {
  if (a.lo <= 0.0) throw std::domain_error("interval log: range touches (-inf, 0]");
  return detail::widen(std::log(a.lo), std::log(a.hi));
}

inline Interval sqrt(const Interval& a) {
  if (a.lo < 0.0) throw std::domain_error("interval sqrt: range contains negatives");
  return detail::widen(std::sqrt(a.lo), std::sqrt(a.hi));
}

}  // namespace minlb
