#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace levyest {
namespace special {

namespace detail {
constexpr double euler_gamma = 0.57721566490153286060651209008240243;
constexpr double tiny = 1e-300;
constexpr int max_iter = 10000;
} // namespace detail

//! Exponential integral E1(x) = int_x^inf e^{-t}/t dt, x > 0.
//! Power series below 1, Lentz continued fraction above.
inline double expint_e1(double x)
{
  if (!(x > 0))
    throw std::domain_error("expint_e1: x must be positive");
  if (std::isinf(x))
    return 0.0;
  if (x <= 1.0) {
    // E1 = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    double sum = 0.0, term = 1.0;
    for (int k = 1; k < detail::max_iter; ++k) {
      term *= -x / k;
      double add = term / k;
      sum += add;
      if (std::abs(add) < 1e-17 * std::abs(sum))
        break;
    }
    return -detail::euler_gamma - std::log(x) - sum;
  }
  // E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
  double b = x + 1.0;
  double c = 1.0 / detail::tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < detail::max_iter; ++i) {
    double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16)
      break;
  }
  return h * std::exp(-x);
}

namespace detail {

// series for P(a, x), valid for x < a + 1
inline double gamma_p_series(double a, double x)
{
  double ap = a, del = 1.0 / a, sum = del;
  for (int n = 0; n < max_iter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-17)
      break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// continued fraction for Q(a, x), valid for x >= a + 1
inline double gamma_q_fraction(double a, double x)
{
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < max_iter; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny)
      d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny)
      c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16)
      break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Q(a, x) for small a and moderate x without forming 1 - P:
// Gamma(a, x) = [(Gamma(1+a) - 1) - (x^a - 1)]/a - x^a sum_{n>=1} (-x)^n/(n!(a+n))
inline double gamma_q_small_a(double a, double x)
{
  double lg1p = std::lgamma(1.0 + a);
  double head = (std::expm1(lg1p) - std::expm1(a * std::log(x))) / a;
  double sum = 0.0, term = 1.0;
  for (int n = 1; n < max_iter; ++n) {
    term *= -x / n;
    double add = term / (a + n);
    sum += add;
    if (std::abs(add) < 1e-17 * std::abs(sum))
      break;
  }
  double upper = head - std::exp(a * std::log(x)) * sum;
  return a * upper / std::exp(lg1p);
}

} // namespace detail

//! Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x)
{
  if (!(a > 0) || x < 0)
    throw std::domain_error("gamma_p: need a > 0, x >= 0");
  if (x == 0)
    return 0.0;
  if (std::isinf(x))
    return 1.0;
  if (x < a + 1.0)
    return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_fraction(a, x);
}

//! Regularized upper incomplete gamma Q(a, x).
inline double gamma_q(double a, double x)
{
  if (!(a > 0) || x < 0)
    throw std::domain_error("gamma_q: need a > 0, x >= 0");
  if (x == 0)
    return 1.0;
  if (std::isinf(x))
    return 0.0;
  if (x < a + 1.0) {
    if (a < 0.5)
      return detail::gamma_q_small_a(a, x);
    return 1.0 - detail::gamma_p_series(a, x);
  }
  return detail::gamma_q_fraction(a, x);
}

//! Standard normal CDF.
inline double normal_cdf(double x)
{
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

} // namespace special
} // namespace levyest
