// Small statistical helpers: normal/chi-square tails, moments, medians.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <cdrift/common.hpp>

namespace cdrift {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Two-sided p-value for a standard-normal statistic.
inline double normal_two_sided_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

namespace detail {

// Regularized lower incomplete gamma P(a, x) via its power series; accurate
// for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) via the Lentz continued
// fraction; accurate for x >= a + 1 and keeps precision in small tails.
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

// Upper tail of the chi-square distribution with df degrees of freedom.
inline double chi_square_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  if (df == 1.0) return std::erfc(std::sqrt(x / 2.0));
  if (df == 2.0) return std::exp(-x / 2.0);
  double a = df / 2.0, xx = x / 2.0;
  if (xx < a + 1.0) return 1.0 - detail::gamma_p_series(a, xx);
  return detail::gamma_q_cf(a, xx);
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population standard deviation (claims are complete populations of posts).
inline double population_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v), s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// Median with the average-of-middles convention for even counts.
inline double median_of(std::vector<double> v) {
  if (v.empty()) throw Error("median of empty set");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace cdrift
