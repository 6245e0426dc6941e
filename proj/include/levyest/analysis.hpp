#pragma once

#include "errors.hpp"
#include "intensity.hpp"
#include "levy_models.hpp"
#include "quadrature.hpp"
#include "simulate.hpp"
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace levyest {

struct LossSpec
{
  double p = 2.0;
  TruncationGeometry geometry{ 0.0 };
  std::size_t grid_points = 1024;

  void validate() const
  {
    if (!(p >= 1) || !std::isfinite(p))
      throw DomainError("loss exponent p must be >= 1");
    if (grid_points < 64)
      throw DomainError("loss grid needs at least 64 points per component");
    if (!std::isfinite(geometry.a_bar) || !(geometry.a_bar > geometry.eps) || geometry.eps < 0)
      throw DomainError("loss needs 0 <= eps < a_bar < inf");
  }
};

enum class Verdict
{
  pass,
  fail,
  skipped
};

inline const char* to_string(Verdict v)
{
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    default: return "skipped";
  }
}

struct BoundReport
{
  std::string name;
  std::string config_id;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;     //!< rhs - lhs
  double tolerance = 0.0; //!< declared per bound
  double ci_lo = std::numeric_limits<double>::quiet_NaN();
  double ci_hi = std::numeric_limits<double>::quiet_NaN();
  double ratio = std::numeric_limits<double>::quiet_NaN();
  Verdict verdict = Verdict::skipped;
  std::string note;

  bool passed() const { return verdict == Verdict::pass; }
};

inline BoundReport make_report(std::string name, double lhs, double rhs, double tol)
{
  BoundReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.tolerance = tol;
  r.verdict = lhs <= rhs + tol ? Verdict::pass : Verdict::fail;
  return r;
}

inline BoundReport skipped_report(std::string name, std::string reason)
{
  BoundReport r;
  r.name = std::move(name);
  r.lhs = r.rhs = r.slack = std::numeric_limits<double>::quiet_NaN();
  r.verdict = Verdict::skipped;
  r.note = std::move(reason);
  return r;
}

inline void write_bounds_csv(std::ostream& os, const std::vector<BoundReport>& reports)
{
  os << "schema_version," << csv_schema_version << "\n";
  os << "bound_name,config_id,lhs,rhs,slack,verdict\n";
  for (const auto& r : reports)
    os << r.name << "," << r.config_id << "," << format_double(r.lhs) << ","
       << format_double(r.rhs) << "," << format_double(r.slack) << "," << to_string(r.verdict)
       << "\n";
}

// L_p loss ---------------------------------------------------------------

struct LpResult
{
  double value;
  double richardson_gap; //!< |I_m - I_2m|
  bool flagged;          //!< gap above 1e-6
};

namespace analysis_detail {

// (int |g|^p)^{1/p} over the two closed components of A, each split at the
// given breakpoints; piece endpoints are evaluated one-sidedly
template<class G>
double lp_norm_trapezoid(const G& g, const LossSpec& spec, const std::vector<double>& breaks, std::size_t m)
{
  const auto& geo = spec.geometry;
  double total = 0.0;
  for (int side : { -1, 1 }) {
    std::vector<double> pts = { geo.eps, geo.a_bar };
    for (double b : breaks) {
      double ab = side * b;
      if (ab > geo.eps && ab < geo.a_bar)
        pts.push_back(ab);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    double width = geo.a_bar - geo.eps;
    for (std::size_t piece = 0; piece + 1 < pts.size(); ++piece) {
      double lo = pts[piece], hi = pts[piece + 1];
      std::size_t k = std::max<std::size_t>(16, std::size_t(std::ceil(double(m) * (hi - lo) / width)));
      if (pts.size() == 2)
        k = m;
      double h = (hi - lo) / double(k - 1), s = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        double u = lo + h * double(i);
        if (i == 0)
          u = std::nextafter(lo, hi);
        else if (i + 1 == k)
          u = std::nextafter(hi, lo);
        double x = side * u;
        double v = g(x);
        if (!std::isfinite(v))
          throw DomainError("lp_distance: non-finite value at x = " + format_double(x));
        double w = (i == 0 || i + 1 == k) ? 0.5 : 1.0;
        s += w * std::pow(std::abs(v), spec.p);
      }
      total += s * h;
    }
  }
  return std::pow(total, 1.0 / spec.p);
}

} // namespace analysis_detail

//! (int_A |g1 - g2|^p)^{1/p}, composite trapezoid with m points per
//! component, Richardson-checked against 2m points.
template<class G1, class G2>
LpResult lp_distance_checked(const G1& g1,
                             const G2& g2,
                             const LossSpec& spec,
                             const std::vector<double>& breaks = {})
{
  spec.validate();
  auto diff = [&](double x) { return g1(x) - g2(x); };
  double a = analysis_detail::lp_norm_trapezoid(diff, spec, breaks, spec.grid_points);
  double b = analysis_detail::lp_norm_trapezoid(diff, spec, breaks, 2 * spec.grid_points - 1);
  double gap = std::abs(a - b);
  return { a, gap, gap > 1e-6 };
}

template<class G1, class G2>
double lp_distance(const G1& g1, const G2& g2, const LossSpec& spec, const std::vector<double>& breaks = {})
{
  return lp_distance_checked(g1, g2, spec, breaks).value;
}

//! ||g||_{L_p} over A(eps) by adaptive quadrature, split at supp g.
inline double lp_norm_quadrature(const Density1D& g, const TruncationGeometry& geo, double p)
{
  std::vector<double> cuts = { -geo.a_bar, -geo.eps, geo.eps, geo.a_bar };
  for (const auto& iv : g.support)
    for (double b : { iv.lo, iv.hi })
      if (std::isfinite(b) && std::abs(b) > geo.eps && std::abs(b) < geo.a_bar)
        cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  auto gp = [&](double x) { return std::pow(std::abs(g(x)), p); };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double a = cuts[i], b = cuts[i + 1];
    double mid = std::isfinite(a) && std::isfinite(b) ? 0.5 * (a + b) : (std::isfinite(a) ? a + 1 : b - 1);
    if (!(std::abs(mid) > geo.eps && std::abs(mid) < geo.a_bar))
      continue;
    QuadratureResult r{ 0, 0, 0 };
    if (std::isinf(b))
      r = integrate_upper(gp, a);
    else if (std::isinf(a))
      r = integrate_upper([&](double x) { return gp(-x); }, -b);
    else
      r = integrate(gp, a, b);
    total += r.value;
  }
  return std::pow(total, 1.0 / p);
}

// Mixture density p_{Delta,eps} ----------------------------------------------

//! p = w1 h + R on a uniform grid, R = sum_{k>=2} w_k h^{*k} tabulated.
struct MixtureTable
{
  Density1D h;
  double lambda_delta = 0.0;
  std::vector<double> weights; //!< w_1..w_kmax
  double x0 = 0.0, dx = 0.0;
  std::vector<double> remainder;
  double mass_lost = 0.0; //!< 1 - int p over the grid
  double span = 0.0;      //!< table covers [-span, span]
  std::vector<double> breaks;

  double w1() const { return weights.front(); }
  int kmax() const { return int(weights.size()); }
  double remainder_at(double x) const
  {
    double u = (x - x0) / dx;
    if (!(u >= 0) || u >= double(remainder.size() - 1))
      return 0.0;
    std::size_t i = std::size_t(u);
    double fr = u - double(i);
    return remainder[i] + fr * (remainder[i + 1] - remainder[i]);
  }
  double operator()(double x) const { return w1() * h(x) + remainder_at(x); }
  //! p - h = (w1 - 1) h + R, without cancellation in the first term.
  double minus_h(double x) const
  {
    double l = lambda_delta;
    double w1m1 = (l - std::expm1(l)) / std::expm1(l);
    return w1m1 * h(x) + remainder_at(x);
  }
};

//! Tabulates p_{Delta,eps} on 2^14 + 1 points over [-kmax S, kmax S], with
//! S = min(a_bar, support radius of h_eps) and kmax set where the Poisson
//! tail drops below 1e-10. Convolutions are direct sums over the nonzero
//! range of h.
inline MixtureTable mixture_density(const LevyModel& model,
                                    const TruncationGeometry& geometry,
                                    double delta,
                                    std::size_t grid_points = (1u << 14) + 1)
{
  if (!(delta > 0))
    throw DomainError("mixture_density: delta must be positive");
  if (grid_points < 257 || grid_points % 2 == 0)
    throw DomainError("mixture_density: need an odd grid of at least 257 points");
  MixtureTable t;
  double lam = tail_mass(model, geometry.eps);
  t.lambda_delta = lam * delta;
  if (!(t.lambda_delta < 5.0))
    throw DomainError("mixture_density: lambda_eps Delta must be below 5");
  t.h = big_jump_density(model, geometry.eps);
  for (const auto& iv : t.h.support)
    for (double b : { iv.lo, iv.hi })
      if (std::isfinite(b))
        t.breaks.push_back(std::abs(b));

  // Poisson(l) conditioned on >= 1: w_k = l^k/(k! (e^l - 1))
  double l = t.lambda_delta, em1 = std::expm1(l);
  double term = l / em1, tail = 1.0;
  for (int k = 1; k < 200; ++k) {
    t.weights.push_back(term);
    tail -= term;
    if (tail < 1e-10)
      break;
    term *= l / double(k + 1);
  }
  int kmax = t.kmax();

  double S = std::min(geometry.a_bar, t.h.support_radius());
  if (!std::isfinite(S))
    throw DomainError("mixture_density: needs finite a_bar or bounded jump support");
  t.span = kmax * S;
  std::size_t N = grid_points, c = N / 2;
  t.dx = t.span / double(c);
  t.x0 = -t.span;
  // h on the grid as hat-function averages (1/dx) int h(x) hat_i(x) dx, cut
  // at S: the trapezoid mass of the table is then exact even where h jumps,
  // and discrete convolution conserves it
  std::vector<double> cuts = { -S, S };
  for (double b : t.breaks)
    if (b < S)
      cuts.insert(cuts.end(), { -b, b });
  std::sort(cuts.begin(), cuts.end());
  auto piece = [&](double a, double b, double xi) {
    // 3-point Gauss of h(x) (1 - |x - xi|/dx) on [a, b]
    static const double gx[3] = { -0.77459666924148338, 0.0, 0.77459666924148338 };
    static const double gw[3] = { 5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0 };
    double c = 0.5 * (a + b), r = 0.5 * (b - a), s = 0.0;
    for (int q = 0; q < 3; ++q) {
      double x = c + r * gx[q];
      s += gw[q] * t.h(x) * (1.0 - std::abs(x - xi) / t.dx);
    }
    return s * r;
  };
  std::vector<double> hv(N, 0.0);
  std::size_t lo = N, hi = 0;
  for (std::size_t i = 0; i < N; ++i) {
    double xi = t.x0 + t.dx * double(i);
    if (xi + t.dx <= -S || xi - t.dx >= S)
      continue;
    double acc = 0.0;
    for (double a : { xi - t.dx, xi }) {
      double b = a + t.dx;
      double l = std::max(a, -S), u = std::min(b, S);
      if (!(u > l))
        continue;
      double prev = l;
      for (double ct : cuts) {
        if (ct > l && ct < u) {
          acc += piece(prev, ct, xi);
          prev = ct;
        }
      }
      acc += piece(prev, u, xi);
    }
    hv[i] = acc / t.dx;
    if (hv[i] != 0.0) {
      lo = std::min(lo, i);
      hi = std::max(hi, i);
    }
  }
  if (lo > hi || hi - lo < 16)
    throw DomainError("mixture_density: grid too coarse for the jump support; use more points");

  t.remainder.assign(N, 0.0);
  std::vector<double> cur = hv, next(N);
  double total_mass = 0.0;
  auto mass = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i)
      s += (i == 0 || i + 1 == N ? 0.5 : 1.0) * v[i];
    return s * t.dx;
  };
  total_mass += t.weights[0] * mass(hv);
  for (int k = 2; k <= kmax; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    // next[i] = sum_j h[j] cur[i - j + c] dx
    for (std::size_t j = lo; j <= hi; ++j) {
      double hj = hv[j] * t.dx;
      long long shift = (long long)j - (long long)c;
      std::size_t i0 = shift > 0 ? std::size_t(shift) : 0;
      std::size_t i1 = shift < 0 ? N - std::size_t(-shift) : N;
      for (std::size_t i = i0; i < i1; ++i)
        next[i] += hj * cur[i - shift];
    }
    std::swap(cur, next);
    double w = t.weights[k - 1];
    for (std::size_t i = 0; i < N; ++i)
      t.remainder[i] += w * cur[i];
    total_mass += w * mass(cur);
  }
  t.mass_lost = 1.0 - total_mass;
  return t;
}

//! ||p_{Delta,eps} - h_eps||_{L_p,eps} <= 2 Delta e^{lambda_eps Delta} ||f||_{L_p,eps}.
inline BoundReport check_hpeps_bound(const LevyModel& model,
                                     const TruncationGeometry& geometry,
                                     double delta,
                                     double p,
                                     std::size_t grid_points = 1024)
{
  auto mix = mixture_density(model, geometry, delta);
  TruncationGeometry region = geometry;
  region.a_bar = std::min(geometry.a_bar, mix.span);
  LossSpec spec{ p, region, grid_points };
  std::vector<double> breaks = mix.breaks;
  auto zero = [](double) { return 0.0; };
  auto lhs = lp_distance_checked([&](double x) { return mix.minus_h(x); }, zero, spec, breaks);
  double lam = tail_mass(model, geometry.eps);
  double fnorm = lam * lp_norm_quadrature(mix.h, geometry, p);
  double rhs = 2.0 * delta * std::exp(lam * delta) * fnorm;
  auto r = make_report("hpeps", lhs.value, rhs, lhs.richardson_gap + 1e-10);
  if (lhs.flagged)
    r.note = "richardson gap " + format_double(lhs.richardson_gap);
  return r;
}

// Small-jump tail (sg) -------------------------------------------------------

//! (e sigma^2(eps)/eps^2)^{x/eps} e^{1/e} t^{x/eps}.
inline double small_jump_tail_bound(double sigma2, double eps, double t, double x)
{
  double a = x / eps;
  return std::pow(std::exp(1.0) * sigma2 / (eps * eps), a) * std::exp(std::exp(-1.0)) * std::pow(t, a);
}

inline BoundReport check_small_jump_tail(const LevyModel& model,
                                         const TruncationGeometry& geometry,
                                         double t,
                                         double x,
                                         const ProbabilityEstimate& mc)
{
  if (!(x > 0) || !(t > 0))
    throw DomainError("check_small_jump_tail: need t > 0 and x > 0");
  double s2 = truncated_second_moment(model, geometry.eps);
  double bound = small_jump_tail_bound(s2, geometry.eps, t, x);
  BoundReport r;
  r.name = "small_jump_tail";
  r.lhs = mc.estimate;
  r.rhs = bound;
  r.slack = bound - mc.estimate;
  r.ci_lo = mc.ci_lo;
  r.ci_hi = mc.ci_hi;
  r.verdict = mc.ci_hi <= bound ? Verdict::pass : Verdict::fail;
  r.note = "x=" + format_double(x) + " trials=" + std::to_string(mc.trials);
  // no hits and a bound below the Wilson limit: the run cannot decide
  if (mc.successes == 0 && r.verdict == Verdict::fail) {
    r.verdict = Verdict::skipped;
    r.note += " no hits; bound below Monte Carlo resolution";
  }
  return r;
}

// Exceedance-count moments ---------------------------------------------------

//! (3nF/2)^{-r} <= E[n(eps)^{-r}] <= 2 exp(-3nF/32) + (nF/2)^{-r}, checked
//! with the 95% CI of the Monte Carlo mean over runs with n(eps) >= 1.
inline BoundReport check_count_moment_bounds(const LevyModel& model,
                                             const TruncationGeometry& geometry,
                                             std::size_t n,
                                             double delta,
                                             double r,
                                             std::size_t mc_runs,
                                             uint64_t seed,
                                             int workers = 1)
{
  if (!(r >= 0))
    throw DomainError("check_count_moment_bounds: r must be >= 0");
  double F;
  try {
    F = exact_exceedance_prob(model, delta, geometry.eps);
  } catch (const NotAvailable&) {
    return skipped_report("count_moments", "no closed-form exceedance probability");
  }
  double nF = double(n) * F;
  if (nF < 1.0)
    return skipped_report("count_moments", "n F_Delta(eps) < 1");
  std::vector<std::size_t> counts(mc_runs);
  ExactSampler sampler(model, delta);
  parallel_for(mc_runs, workers, [&](std::size_t i) {
    auto s = sampler.sample(n, { seed, uint32_t(i), 0 });
    counts[i] = count_exceedances(s, geometry.eps);
  });
  std::vector<double> vals;
  for (auto c : counts)
    if (c > 0)
      vals.push_back(std::pow(double(c), -r));
  if (vals.size() < 2)
    return skipped_report("count_moments", "fewer than two runs with n(eps) >= 1");
  double m = 0.0;
  for (double v : vals)
    m += v;
  m /= double(vals.size());
  double ss = 0.0;
  for (double v : vals)
    ss += (v - m) * (v - m);
  double se = std::sqrt(ss / double(vals.size() - 1) / double(vals.size()));
  double lower = std::pow(1.5 * nF, -r);
  double upper = 2.0 * std::exp(-3.0 * nF / 32.0) + std::pow(0.5 * nF, -r);
  const double tol = 1e-6;
  BoundReport rep;
  rep.name = "count_moments";
  rep.lhs = m;
  rep.rhs = upper;
  rep.slack = upper - m;
  rep.tolerance = tol;
  rep.ci_lo = m - 1.96 * se;
  rep.ci_hi = m + 1.96 * se;
  bool inside = rep.ci_lo >= lower - tol && rep.ci_hi <= upper + tol;
  rep.verdict = inside ? Verdict::pass : Verdict::fail;
  rep.note = "r=" + format_double(r) + " lower=" + format_double(lower) +
             " excluded=" + format_double(1.0 - double(vals.size()) / double(mc_runs));
  return rep;
}

// Split counts ------------------------------------------------------------

//! E[(n(eps) - n~(eps))^r] against C{(n q)^{r/2} + (n q)^r}, q = v e^{-lambda Delta}/F,
//! with C = 1 (exact for r = 2 under a binomial model up to the 1 - q
//! factor). All of v, e^{-lambda Delta} and F are estimated from the
//! decomposed samples themselves. Soft pass when the ratio is below 10.
inline BoundReport check_split_count_bounds(const std::vector<IncrementSample>& samples,
                                            const TruncationGeometry& geometry,
                                            double r)
{
  if (samples.empty())
    throw DomainError("check_split_count_bounds: no samples");
  std::size_t total = 0, exceed = 0, no_big = 0, no_big_exceed = 0;
  std::vector<std::pair<double, double>> per_run; // (n, n - n~)
  for (const auto& s : samples) {
    if (!s.decomposition)
      throw DomainError("check_split_count_bounds: decomposed samples required");
    const auto& d = *s.decomposition;
    std::size_t nn = 0, nt = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      bool ex = std::abs(s.values[i]) > geometry.eps;
      bool big = d.jump_count[i] > 0;
      nn += ex;
      nt += ex && big;
      no_big += !big;
      no_big_exceed += ex && !big;
    }
    total += s.size();
    exceed += nn;
    per_run.push_back({ double(nn), double(nn - nt) });
  }
  double F = double(exceed) / double(total);
  double v = no_big ? double(no_big_exceed) / double(no_big) : 0.0;
  double e = double(no_big) / double(total);
  if (F == 0.0)
    return skipped_report("split_counts", "no exceedances observed");
  if (v / F > 1.0 / 3.0)
    return skipped_report("split_counts", "v/F = " + format_double(v / F) + " exceeds 1/3");
  double q = v * e / F;
  double lhs = 0.0, rhs = 0.0;
  for (auto [nn, diff] : per_run) {
    lhs += std::pow(diff, r);
    double a = nn * q;
    rhs += std::pow(a, 0.5 * r) + std::pow(a, r);
  }
  lhs /= double(per_run.size());
  rhs /= double(per_run.size());
  BoundReport rep;
  rep.name = "split_counts";
  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.slack = rhs - lhs;
  rep.tolerance = 0.0;
  rep.ratio = lhs == 0.0 ? 0.0 : lhs / rhs;
  rep.verdict = (std::isfinite(rep.ratio) && rep.ratio < 10.0) ? Verdict::pass : Verdict::fail;
  rep.note = "r=" + format_double(r) + " v/F=" + format_double(v / F) + " ratio=" + format_double(rep.ratio);
  return rep;
}

// Theoretical rates ---------------------------------------------------------

struct RateDescriptor
{
  int case_id = 0; //!< 0 = no case applies
  bool subordinator = false;
  std::string description;
  double base = 0, v1 = 0, v2 = 0, v3 = 0, v4 = 0, v5 = 0;
  double rate = std::numeric_limits<double>::quiet_NaN(); //!< bound on the p-th power of the risk
  std::string dominant;
  bool applies() const { return case_id != 0; }
};

//! Case table for the explicit rate (subordinators use the three-branch
//! version with beta = 2). s = (3 - 2/p)/2 counts as the s >= branch.
//! beta above 3(s+1)/(2s+1) is treated as the first case, since v1 and v2
//! only shrink as beta grows; beta below the interval has no case.
inline RateDescriptor theoretical_rate(double s, double p, double beta, double n, double delta, bool subordinator = false)
{
  if (!(s > 0) || !(p >= 1) || !(n >= 1) || !(delta > 0))
    throw DomainError("theoretical_rate: need s > 0, p >= 1, n >= 1, delta > 0");
  RateDescriptor d;
  d.subordinator = subordinator;
  if (subordinator)
    beta = 2.0;
  double nd = n * delta, g = 2 * s + 5 - 2 / p;
  d.base = std::pow(nd, -s * p / (2 * s + 1));
  d.v1 = std::pow(n * std::pow(delta, 2 - beta), -s * p / (2 * s + 4));
  d.v2 = std::pow(delta, (beta - 1) * s * p / (2 + s));
  d.v3 = std::pow(n, -s * p / g);
  d.v4 = std::pow(std::pow(delta, -1.0) * std::pow(nd, p - 1), -2 * s / g);
  d.v5 = std::pow(delta, 2 * s * p / g);
  double thr = (3 - 2 / p) / 2;
  bool small_delta = n * delta * delta <= 1.0;

  std::vector<std::pair<std::string, double>> terms;
  if (subordinator) {
    if (small_delta && s >= std::max(thr, 1.0)) {
      d.case_id = 1;
      terms = { { "base", d.base } };
    } else if (small_delta) {
      d.case_id = 2;
      terms = { { "base", d.base }, { "v2", d.v2 }, { "v3", d.v3 }, { "v4", d.v4 } };
    } else {
      d.case_id = 3;
      terms = { { "base", d.base }, { "v2", d.v2 }, { "v5", d.v5 } };
    }
  } else if (small_delta) {
    if (s >= thr) {
      if (beta > (2 * s + 4) / (2 * s + 1)) {
        d.case_id = 1;
        terms = { { "base", d.base } };
      }
    } else if (p >= 2) {
      d.case_id = 2;
      terms = { { "base", d.base }, { "v1", d.v1 }, { "v2", d.v2 }, { "v3", d.v3 } };
    } else {
      d.case_id = 3;
      terms = { { "base", d.base }, { "v1", d.v1 }, { "v2", d.v2 }, { "v4", d.v4 } };
    }
  } else if (s >= thr) {
    d.case_id = 4;
    terms = { { "base", d.base }, { "v2", d.v2 }, { "v5", d.v5 } };
  } else {
    d.case_id = 5;
    terms = { { "v2", d.v2 }, { "v5", d.v5 } };
  }
  if (!d.applies()) {
    d.description = "no case applies";
    return d;
  }
  auto it = std::max_element(terms.begin(), terms.end(),
                             [](const auto& a, const auto& b) { return a.second < b.second; });
  d.rate = it->second;
  d.dominant = it->first;
  d.description = std::string(subordinator ? "subordinator case " : "case ") + std::to_string(d.case_id);
  return d;
}

} // namespace levyest
