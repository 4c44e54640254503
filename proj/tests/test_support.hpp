#pragma once

// Independent oracles shared by the test programs. Nothing here calls into
// the library's own root finders or quantile code.

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

/// Adaptive quadrature over [a, b]: Gauss-Kronrod on finite intervals,
/// exp-sinh / sinh-sinh on infinite ones (handles algebraic tails).
inline double integrate(const std::function<double(double)>& f, double a, double b) {
  if (std::isfinite(a) && std::isfinite(b)) {
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-11,
                                                                         &err);
  }
  if (std::isfinite(a)) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate([&](double t) { return f(a + t); }, 0.0, INFINITY);
  }
  if (std::isfinite(b)) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate([&](double t) { return f(b - t); }, 0.0, INFINITY);
  }
  boost::math::quadrature::sinh_sinh<double> q;
  return q.integrate(f);
}

/// Integral over the real line split at the given break points.
inline double integrate_pieces(const std::function<double(double)>& f, std::vector<double> breaks,
                               double lo = -std::numeric_limits<double>::infinity(),
                               double hi = std::numeric_limits<double>::infinity()) {
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> pts{lo};
  for (double b : breaks)
    if (b > lo && b < hi) pts.push_back(b);
  pts.push_back(hi);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) total += integrate(f, pts[i], pts[i + 1]);
  return total;
}

/// Plain bisection for a nondecreasing cdf: smallest x with cdf(x) >= p.
inline double invert(const std::function<double(double)>& cdf, double p, double lo, double hi) {
  while (cdf(lo) > p) lo -= (hi - lo);
  while (cdf(hi) < p) hi += (hi - lo);
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// GARCH(1,1) path with innovations drawn by `innovation(k)` for k = 0, 1, ...
/// after `burn_in` discarded steps started at the unconditional variance.
template <class Innovation>
std::vector<double> simulate_garch(double mu, double a0, double a1, double b1, std::size_t n,
                                   Innovation innovation, std::size_t burn_in = 500) {
  double s2 = a0 / (1.0 - a1 - b1);
  double e_prev = 0.0;
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n + burn_in; ++k) {
    if (k > 0) s2 = a0 + a1 * e_prev * e_prev + b1 * s2;
    const double e = std::sqrt(s2) * innovation(k);
    e_prev = e;
    if (k >= burn_in) out.push_back(mu + e);
  }
  return out;
}

}  // namespace oracle
