#pragma once

#include <cmath>
#include <limits>

#include "sums/errors.hpp"

namespace sums {

inline double normal_pdf(double x, double mean = 0.0, double sd = 1.0) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
}

inline double normal_cdf(double x, double mean = 0.0, double sd = 1.0) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

// log of the multivariate gamma function Gamma_p(a)
inline double log_multigamma(int p, double a) {
  double r = 0.25 * p * (p - 1) * std::log(M_PI);
  for (int i = 0; i < p; ++i) r += std::lgamma(a - 0.5 * i);
  return r;
}

namespace detail {

// series expansion of P(a,x), valid for x < a+1
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// continued fraction for Q(a,x), valid for x >= a+1 (Lentz)
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

// regularized lower incomplete gamma P(a,x)
inline double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw ValidationError("gamma_p: invalid arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

// regularized upper incomplete gamma Q(a,x)
inline double gamma_q(double a, double x) { return 1.0 - gamma_p(a, x); }

inline double chi_squared_cdf(double x, double dof) {
  return x <= 0.0 ? 0.0 : gamma_p(0.5 * dof, 0.5 * x);
}

// upper-tail p-value of a chi-squared statistic
inline double chi_squared_sf(double x, double dof) {
  return x <= 0.0 ? 1.0 : gamma_q(0.5 * dof, 0.5 * x);
}

inline double gamma_cdf(double x, double shape, double rate) {
  return x <= 0.0 ? 0.0 : gamma_p(shape, rate * x);
}

}  // namespace sums
