#pragma once

#include "errors.hpp"
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <vector>

namespace levyest {

struct QuadratureOptions
{
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_intervals = 4000;
};

struct QuadratureResult
{
  double value;
  double error;
  int intervals;
};

namespace quad_detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21)
constexpr std::array<double, 11> xgk = {
  0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
  0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
  0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
  0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
  0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
  0.0
};
constexpr std::array<double, 11> wgk = {
  0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
  0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
  0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
  0.123491976262065851077208745093062, 0.134709217311473325928054001771707,
  0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
  0.149445554002916905664936468389821
};
// Gauss weights for the odd-indexed Kronrod nodes
constexpr std::array<double, 5> wg = {
  0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
  0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
  0.295524224714752870173892994651338
};

struct Segment
{
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template<class F>
inline Segment gk21(const F& f, double a, double b)
{
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = f(c);
  double kron = fc * wgk[10], gauss = 0.0;
  for (int i = 0; i < 10; ++i) {
    double dx = h * xgk[i];
    double f1 = f(c - dx), f2 = f(c + dx);
    kron += wgk[i] * (f1 + f2);
    if (i % 2 == 1)
      gauss += wg[i / 2] * (f1 + f2);
  }
  kron *= h;
  gauss *= h;
  if (!std::isfinite(kron))
    throw IntegrationFailure("non-finite integrand on [" + std::to_string(a) +
                               ", " + std::to_string(b) + "]",
                             kron, INFINITY);
  return { a, b, kron, std::abs(kron - gauss) };
}

} // namespace quad_detail

//! Globally adaptive Gauss-Kronrod (21 point) on a finite interval.
//! Throws IntegrationFailure when the tolerance cannot be met.
template<class F>
QuadratureResult integrate(const F& f,
                           double a,
                           double b,
                           const QuadratureOptions& opts = {})
{
  if (a == b)
    return { 0.0, 0.0, 0 };
  if (!(std::isfinite(a) && std::isfinite(b)))
    throw std::invalid_argument("integrate: use integrate_upper for infinite ranges");
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::priority_queue<quad_detail::Segment> heap;
  auto first = quad_detail::gk21(f, a, b);
  heap.push(first);
  double total = first.value, err = first.error;
  // segments too short to split further still count towards the error
  double frozen_err = 0.0;
  int count = 1;
  while (err + frozen_err > std::max(opts.abs_tol, opts.rel_tol * std::abs(total))) {
    if (heap.empty() || count >= opts.max_intervals) {
      throw IntegrationFailure("quadrature did not converge on [" +
                                 std::to_string(a) + ", " + std::to_string(b) + "]",
                               sign * total, err + frozen_err);
    }
    auto s = heap.top();
    heap.pop();
    double mid = 0.5 * (s.a + s.b);
    if (!(mid > s.a && mid < s.b) ||
        (s.b - s.a) < 1e-14 * std::max(std::abs(s.a), std::abs(s.b))) {
      err -= s.error;
      frozen_err += s.error;
      if (frozen_err > std::max(opts.abs_tol, opts.rel_tol * std::abs(total)))
        throw IntegrationFailure("quadrature hit round-off limit near " +
                                   std::to_string(s.a),
                                 sign * total, err + frozen_err);
      continue;
    }
    auto l = quad_detail::gk21(f, s.a, mid);
    auto r = quad_detail::gk21(f, mid, s.b);
    total += l.value + r.value - s.value;
    err += l.error + r.error - s.error;
    heap.push(l);
    heap.push(r);
    ++count;
  }
  // resum to avoid drift from incremental updates
  double sum = 0.0, esum = frozen_err;
  while (!heap.empty()) {
    sum += heap.top().value;
    esum += heap.top().error;
    heap.pop();
  }
  return { sign * sum, esum, count };
}

//! Integral over [a, inf) via x = a + (1 - t)/t with t = u^2, which keeps
//! algebraically decaying tails bounded near u = 0.
template<class F>
QuadratureResult integrate_upper(const F& f,
                                 double a,
                                 const QuadratureOptions& opts = {})
{
  auto g = [&](double u) {
    double t = u * u;
    double x = a + (1.0 - t) / t;
    if (std::isinf(x))
      return 0.0;
    double v = f(x);
    return v == 0.0 ? 0.0 : v * 2.0 * u / (t * t);
  };
  return integrate(g, 0.0, 1.0, opts);
}

//! Integral over (0, b] via x = b u^m, for integrands with a power-law
//! singularity at 0. m = 1/(exponent + 1) removes x^exponent exactly.
template<class F>
QuadratureResult integrate_from_zero(const F& f,
                                     double b,
                                     double m,
                                     const QuadratureOptions& opts = {})
{
  auto g = [&](double u) {
    double x = b * std::pow(u, m);
    if (x == 0.0)
      return 0.0;
    return f(x) * m * x / u;
  };
  return integrate(g, 0.0, 1.0, opts);
}

} // namespace levyest
