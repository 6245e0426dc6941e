#pragma once

#include "analysis.hpp"
#include "intensity.hpp"
#include "levy_models.hpp"
#include "parallel.hpp"
#include "simulate.hpp"
#include "wavelet.hpp"
#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace levyest {

// Plan ----------------------------------------------------------------------

struct ModelSpec
{
  std::string family = "compound_poisson"; //!< compound_poisson, gamma, cauchy, stable, inverse_gaussian
  double intensity = 1.0;
  std::string jump_law = "normal"; //!< normal (truncated to [lo, hi]), uniform, point
  double jump_mean = 0.0;
  double jump_sd = 1.0;
  double jump_lo = -5.0;
  double jump_hi = 5.0;
  double jump_value = 1.0;
  double alpha = 1.0;
  double sigma = 0.0;

  LevyModel build() const
  {
    LevyModel m = [&] {
      if (family == "compound_poisson") {
        if (jump_law == "normal")
          return LevyModel::compound_poisson(intensity, truncated_normal_density(jump_mean, jump_sd, jump_lo, jump_hi));
        if (jump_law == "uniform")
          return LevyModel::compound_poisson(intensity, uniform_density(jump_lo, jump_hi));
        if (jump_law == "point")
          return LevyModel::compound_poisson_atom(intensity, jump_value);
        throw DomainError("unknown jump_law '" + jump_law + "'");
      }
      if (family == "gamma")
        return LevyModel::gamma();
      if (family == "cauchy")
        return LevyModel::cauchy();
      if (family == "stable")
        return LevyModel::stable(alpha);
      if (family == "inverse_gaussian")
        return LevyModel::inverse_gaussian();
      throw DomainError("unknown model family '" + family + "'");
    }();
    return m.with_sigma(sigma);
  }

  //! Nondecreasing paths: positive jumps only and no Brownian part.
  bool subordinator() const
  {
    if (sigma > 0.0)
      return false;
    if (family == "gamma" || family == "inverse_gaussian")
      return true;
    if (family == "compound_poisson")
      return jump_law == "point" ? jump_value > 0.0 : jump_lo >= 0.0;
    return false;
  }
};

enum class JRule
{
  count, //!< 2^J ~ n(eps)^{1/(2s+1)} per replicate
  time,  //!< 2^J ~ (n Delta)^{1/(2s+1)}
  fixed
};

inline const char* to_string(JRule r)
{
  switch (r) {
    case JRule::count: return "count";
    case JRule::time: return "time";
    default: return "fixed";
  }
}

inline JRule parse_j_rule(const std::string& s)
{
  if (s == "count")
    return JRule::count;
  if (s == "time")
    return JRule::time;
  if (s == "fixed")
    return JRule::fixed;
  throw DomainError("j_rule must be count, time or fixed");
}

struct EstimatorSettings
{
  double s = 2.0;
  int order = 0; //!< 0: smallest order whose regularity exceeds s
  int depth = 14;
  JRule j_rule = JRule::count;
  int j_fixed = 0;
  int correction_order = 1;
  bool clip = false;

  int resolved_order() const { return order > 0 ? order : order_for_smoothness(s); }
};

enum class SimulationMode
{
  exact,
  decomposed
};

inline const char* to_string(SimulationMode m) { return m == SimulationMode::exact ? "exact" : "decomposed"; }

struct GridCell
{
  std::size_t n;
  double delta;
};

//! Delta = scale * n^exponent for each n.
inline std::vector<GridCell> coupled_grid(const std::vector<std::size_t>& ns, double scale, double exponent)
{
  std::vector<GridCell> g;
  for (auto n : ns)
    g.push_back({ n, scale * std::pow(double(n), exponent) });
  return g;
}

struct BoundSettings
{
  double intensity_limit_delta = 1e-3;
  std::size_t count_n = 200;
  std::size_t count_runs = 2000;
  double count_delta = 0.01;
  std::vector<double> count_r = { 0.0, 0.5, 1.0, 2.0 };
  std::size_t split_n = 2000;
  std::size_t split_runs = 200;
  double split_delta = 0.01;
  std::vector<double> split_r = { 1.0, 2.0 };
  double tail_t = 0.01;
  std::vector<double> tail_x = { 0.5, 1.0, 2.0 };
  std::size_t tail_replicates = 100000;
};

struct DiagnosticsSettings
{
  std::vector<double> h1_deltas = { 1e-2, 1e-3, 1e-4 };
  std::vector<double> h2_deltas = { 0.01, 0.02, 0.04, 0.08 };
  std::size_t h2_replicates = 1000000;
  int stable_k_max = 6;
  std::size_t stable_replicates = 200000;
};

struct ExperimentPlan
{
  std::string config_id = "run";
  ModelSpec model;
  TruncationGeometry geometry{ 0.0, 5.0 };
  std::vector<GridCell> grid;
  EstimatorSettings estimator;
  double p = 2.0;
  std::size_t loss_points = 1024;
  std::size_t replicates = 50;
  uint64_t seed = 1;
  SimulationMode mode = SimulationMode::exact;
  double inner_cutoff_ratio = 1e-3;
  bool gaussian_remainder = true;
  std::optional<double> eps_exponent; //!< eps_n = Delta_n^gamma instead of the fixed eps
  int workers = 1;
  BoundSettings bounds;
  DiagnosticsSettings diagnostics;

  double eps_for(double delta) const { return eps_exponent ? std::pow(delta, *eps_exponent) : geometry.eps; }
  TruncationGeometry geometry_for(double delta) const { return { eps_for(delta), geometry.a_bar }; }
  SmallJumpPolicy policy_for(double eps) const { return { inner_cutoff_ratio * eps, gaussian_remainder }; }

  //! Cells sorted by (n, Delta); every study runs on this order, so the
  //! output does not depend on how the grid was listed.
  std::vector<GridCell> canonical_grid() const
  {
    auto g = grid;
    std::sort(g.begin(), g.end(), [](const GridCell& a, const GridCell& b) {
      return a.n != b.n ? a.n < b.n : a.delta < b.delta;
    });
    return g;
  }

  void validate() const
  {
    if (config_id.empty() ||
        config_id.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-") !=
          std::string::npos)
      throw DomainError("config_id must be a nonempty [A-Za-z0-9_.-] string");
    if (replicates < 2)
      throw DomainError("replicates must be >= 2");
    if (grid.empty())
      throw DomainError("grid is empty");
    if (grid.size() > 60000)
      throw DomainError("grid has too many cells");
    LevyModel m = model.build();
    for (const auto& c : grid) {
      if (!(c.delta > 0) || !std::isfinite(c.delta))
        throw DomainError("grid Delta must be positive");
      if (c.n < 1 || double(c.n) * c.delta < 1.0)
        throw DomainError("grid cell violates n Delta >= 1 (n = " + std::to_string(c.n) +
                          ", Delta = " + format_double(c.delta) + ")");
      geometry_for(c.delta).validate(m);
    }
    geometry.validate(m);
    if (!std::isfinite(geometry.a_bar))
      throw DomainError("the wavelet basis needs a finite a_bar");
    if (!(p >= 1))
      throw DomainError("p must be >= 1");
    if (!(estimator.s > 0))
      throw DomainError("smoothness s must be positive");
    daubechies_filter(estimator.resolved_order());
    if (estimator.depth < 10 || estimator.depth > 20)
      throw DomainError("depth must lie in [10, 20]");
    if (estimator.j_rule == JRule::fixed && (estimator.j_fixed < 0 || estimator.j_fixed > 30))
      throw DomainError("j_fixed must lie in [0, 30]");
    if (estimator.correction_order < 1)
      throw DomainError("correction_order must be >= 1");
    if (!(inner_cutoff_ratio > 0 && inner_cutoff_ratio <= 1))
      throw DomainError("inner_cutoff_ratio must lie in (0, 1]");
    LossSpec{ p, geometry, loss_points }.validate();
  }
};

// Risk report ------------------------------------------------------------------

struct RiskCell
{
  std::size_t n = 0;
  double delta = 0, eps = 0;
  std::string target; //!< f, h or lambda
  double p = 2;
  double mean_risk = 0, se_risk = 0;
  std::size_t replicates = 0;
  std::size_t empty_replicates = 0; //!< n(eps) = 0
  std::size_t flagged = 0;          //!< Richardson gap above 1e-6
  double mean_J = 0;

  bool degenerate() const { return empty_replicates == replicates; }
};

struct SlopeFit
{
  std::string target;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double ci_lo = std::numeric_limits<double>::quiet_NaN();
  double ci_hi = std::numeric_limits<double>::quiet_NaN();
  double theory_slope = std::numeric_limits<double>::quiet_NaN();
  std::size_t points = 0;
  bool dropped_smallest = false;
};

struct RiskReport
{
  std::string config_id;
  double p = 2;
  std::vector<RiskCell> cells; //!< per grid cell: f, h, lambda
  std::vector<SlopeFit> slopes;
  std::vector<RateDescriptor> rates; //!< per grid cell
  std::vector<BoundReport> bounds;   //!< risk decomposition per cell

  const SlopeFit& slope(const std::string& target) const
  {
    for (const auto& s : slopes)
      if (s.target == target)
        return s;
    throw DomainError("no slope for target " + target);
  }
  std::vector<RiskCell> target_cells(const std::string& target) const
  {
    std::vector<RiskCell> out;
    for (const auto& c : cells)
      if (c.target == target)
        out.push_back(c);
    return out;
  }
};

namespace bench_detail {

inline uint64_t mix(uint64_t seed, uint64_t tag)
{
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Line
{
  double slope = 0, se = 0;
  std::size_t k = 0;
};

inline Line ols(const std::vector<double>& x, const std::vector<double>& y)
{
  Line l;
  l.k = x.size();
  if (l.k < 2)
    return { std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), l.k };
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < l.k; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(l.k);
  my /= double(l.k);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < l.k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0))
    throw DomainError("regression needs distinct abscissae");
  l.slope = sxy / sxx;
  if (l.k > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < l.k; ++i) {
      double r = y[i] - my - l.slope * (x[i] - mx);
      rss += r * r;
    }
    l.se = std::sqrt(rss / double(l.k - 2) / sxx);
  } else {
    l.se = std::numeric_limits<double>::quiet_NaN();
  }
  return l;
}

inline double t975(std::size_t df)
{
  boost::math::students_t t{ double(df) };
  return boost::math::quantile(t, 0.975);
}

// per replicate outcome of one cell
struct Outcome
{
  double loss_f = 0, loss_h = 0, loss_lambda = 0;
  double i1 = 0, i2 = 0; //!< decomposition terms
  bool empty = false;
  bool flagged = false;
  int J = 0;
};

struct Truth
{
  double lambda;
  Density1D h;
  std::vector<double> breaks;
  double h_norm_p; //!< ||h||_p^p on A by the loss quadrature
};

//! The plan's sampler for one cell, built once (the jump-law tables are
//! not cheap) and shared read-only across replicates.
class CellSampler
{
public:
  CellSampler(const ExperimentPlan& plan, const LevyModel& model, const GridCell& cell)
    : n_(cell.n)
  {
    if (plan.mode == SimulationMode::exact) {
      exact_.emplace(model, cell.delta);
    } else {
      auto geo = plan.geometry_for(cell.delta);
      decomposed_.emplace(model, geo, plan.policy_for(geo.eps), cell.delta);
    }
  }
  IncrementSample operator()(const SeedProvenance& prov) const
  {
    return exact_ ? exact_->sample(n_, prov) : decomposed_->sample(n_, prov);
  }

private:
  std::size_t n_;
  std::optional<ExactSampler> exact_;
  std::optional<DecomposedSampler> decomposed_;
};

inline Outcome run_replicate(const ExperimentPlan& plan,
                             const CellSampler& sampler,
                             const GridCell& cell,
                             const TruncationGeometry& geo,
                             const Truth& truth,
                             uint16_t cell_index,
                             uint32_t rep)
{
  IncrementSample x = sampler({ plan.seed, rep, cell_index });
  auto lam = corrected_lambda(x, geo.eps, plan.estimator.correction_order);
  const double p = plan.p;
  Outcome o;
  o.loss_lambda = std::pow(std::abs(lam.lambda_hat - truth.lambda), p);
  o.i1 = o.loss_lambda * truth.h_norm_p;
  LossSpec spec{ p, geo, plan.loss_points };
  if (lam.empty()) {
    // both estimators are identically 0
    o.empty = true;
    o.loss_h = truth.h_norm_p;
    o.loss_f = std::pow(truth.lambda, p) * truth.h_norm_p;
    o.i2 = 0.0;
    return o;
  }
  const auto& est = plan.estimator;
  int J = est.j_rule == JRule::fixed  ? est.j_fixed
          : est.j_rule == JRule::time ? choose_J(double(cell.n) * cell.delta, est.s)
                                      : choose_J(double(lam.exceed_count), est.s);
  o.J = J;
  auto basis = build_basis(est.resolved_order(), J, est.depth, geo);
  auto h_hat = estimate_h(x, geo, basis);
  h_hat.set_clip(est.clip);
  auto dh = lp_distance_checked(h_hat, truth.h, spec, truth.breaks);
  double lh = lam.lambda_hat, l = truth.lambda;
  auto df = lp_distance_checked([&](double y) { return lh * h_hat(y); },
                                [&](double y) { return l * truth.h(y); }, spec, truth.breaks);
  o.loss_h = std::pow(dh.value, p);
  o.loss_f = std::pow(df.value, p);
  o.i2 = std::pow(lh, p) * o.loss_h;
  o.flagged = dh.flagged || df.flagged;
  return o;
}

inline void mean_se(const std::vector<double>& v, double& mean, double& se)
{
  mean = 0;
  for (double x : v)
    mean += x;
  mean /= double(v.size());
  double ss = 0;
  for (double x : v)
    ss += (x - mean) * (x - mean);
  se = v.size() > 1 ? std::sqrt(ss / double(v.size() - 1) / double(v.size())) : 0.0;
}

} // namespace bench_detail

//! OLS of log mean risk on log(n Delta) over the non-degenerate cells of one
//! target. The cell with the smallest n Delta is dropped when its relative
//! standard error exceeds 25%; the 95% t interval needs >= 4 points.
inline SlopeFit fit_slope(const std::vector<RiskCell>& cells, const std::string& target, double theory)
{
  std::vector<const RiskCell*> use;
  for (const auto& c : cells)
    if (c.target == target && !c.degenerate() && c.mean_risk > 0)
      use.push_back(&c);
  std::sort(use.begin(), use.end(), [](const RiskCell* a, const RiskCell* b) {
    double ta = double(a->n) * a->delta, tb = double(b->n) * b->delta;
    if (ta != tb)
      return ta < tb;
    return a->n < b->n;
  });
  SlopeFit s;
  s.target = target;
  s.theory_slope = theory;
  if (use.size() > 2 && use.front()->se_risk > 0.25 * use.front()->mean_risk) {
    use.erase(use.begin());
    s.dropped_smallest = true;
  }
  s.points = use.size();
  if (use.size() < 2)
    return s;
  std::vector<double> x, y;
  for (auto c : use) {
    x.push_back(std::log(double(c->n) * c->delta));
    y.push_back(std::log(c->mean_risk));
  }
  auto l = bench_detail::ols(x, y);
  s.slope = l.slope;
  if (use.size() >= 4) {
    double half = bench_detail::t975(use.size() - 2) * l.se;
    s.ci_lo = s.slope - half;
    s.ci_hi = s.slope + half;
  }
  return s;
}

//! R replicates per cell -> simulate -> lambda_hat, h_hat, f_hat -> L_p
//! losses against the truth on A(eps); cells with n(eps) = 0 in every
//! replicate are kept and marked degenerate.
inline RiskReport run_convergence_study(const ExperimentPlan& plan, double beta = 2.0)
{
  plan.validate();
  const LevyModel model = plan.model.build();
  const auto grid = plan.canonical_grid();
  const std::size_t R = plan.replicates;
  const double p = plan.p;

  std::vector<bench_detail::Truth> truths;
  std::vector<TruncationGeometry> geos;
  for (const auto& c : grid) {
    auto geo = plan.geometry_for(c.delta);
    bench_detail::Truth t{ tail_mass(model, geo.eps), big_jump_density(model, geo.eps), {}, 0.0 };
    for (const auto& iv : t.h.support) {
      t.breaks.push_back(std::abs(iv.lo));
      t.breaks.push_back(std::abs(iv.hi));
    }
    auto zero = [](double) { return 0.0; };
    t.h_norm_p = std::pow(lp_distance(t.h, zero, LossSpec{ p, geo, plan.loss_points }, t.breaks), p);
    truths.push_back(std::move(t));
    geos.push_back(geo);
  }

  std::vector<bench_detail::CellSampler> samplers;
  for (const auto& c : grid)
    samplers.emplace_back(plan, model, c);
  std::vector<bench_detail::Outcome> out(grid.size() * R);
  parallel_for(out.size(), plan.workers, [&](std::size_t i) {
    std::size_t c = i / R, r = i % R;
    out[i] = bench_detail::run_replicate(plan, samplers[c], grid[c], geos[c], truths[c], uint16_t(c), uint32_t(r));
  });

  RiskReport rep;
  rep.config_id = plan.config_id;
  rep.p = p;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    std::vector<double> lf(R), lh(R), ll(R);
    double i1 = 0, i2 = 0, J = 0;
    std::size_t empty = 0, flagged = 0;
    for (std::size_t r = 0; r < R; ++r) {
      const auto& o = out[c * R + r];
      lf[r] = o.loss_f;
      lh[r] = o.loss_h;
      ll[r] = o.loss_lambda;
      i1 += o.i1;
      i2 += o.i2;
      J += o.J;
      empty += o.empty;
      flagged += o.flagged;
    }
    std::size_t nonempty = R - empty;
    for (auto [target, v] : { std::pair{ "f", &lf }, std::pair{ "h", &lh }, std::pair{ "lambda", &ll } }) {
      RiskCell rc;
      rc.n = grid[c].n;
      rc.delta = grid[c].delta;
      rc.eps = geos[c].eps;
      rc.target = target;
      rc.p = p;
      bench_detail::mean_se(*v, rc.mean_risk, rc.se_risk);
      rc.replicates = R;
      rc.empty_replicates = empty;
      rc.flagged = flagged;
      rc.mean_J = nonempty ? J / double(nonempty) : 0.0;
      rep.cells.push_back(rc);
    }
    // pointwise convexity makes this hold replicate by replicate; the
    // tolerance only absorbs rounding
    double mf = 0;
    for (double v : lf)
      mf += v;
    mf /= double(R);
    double rhs = std::pow(2.0, p - 1) * (i1 + i2) / double(R);
    auto b = make_report("risk_decomposition@n=" + std::to_string(grid[c].n) + ";delta=" + format_double(grid[c].delta),
                         mf, rhs, 1e-9 * rhs + 1e-300);
    b.config_id = plan.config_id;
    rep.bounds.push_back(b);
    try {
      rep.rates.push_back(theoretical_rate(plan.estimator.s, p, beta, double(grid[c].n), grid[c].delta,
                                           plan.model.subordinator()));
    } catch (const DomainError&) {
      rep.rates.push_back(RateDescriptor{});
    }
  }
  double s = plan.estimator.s;
  double curve = -s * p / (2 * s + 1);
  rep.slopes.push_back(fit_slope(rep.cells, "f", curve));
  rep.slopes.push_back(fit_slope(rep.cells, "h", curve));
  rep.slopes.push_back(fit_slope(rep.cells, "lambda", -p / 2));
  return rep;
}

// Brownian robustness ------------------------------------------------------------

struct RobustnessReport
{
  RiskReport with_sigma;
  RiskReport without_sigma;
  std::vector<double> f_risk_ratio; //!< per cell, sigma over no sigma
};

//! Same plan and seeds at sigma and at sigma = 0. The Brownian normals have
//! their own stream, so the jump parts of the two studies coincide.
inline RobustnessReport run_brownian_robustness(const ExperimentPlan& plan)
{
  if (!(plan.model.sigma >= 0))
    throw DomainError("sigma must be nonnegative");
  RobustnessReport r;
  r.with_sigma = run_convergence_study(plan);
  ExperimentPlan base = plan;
  base.model.sigma = 0.0;
  r.without_sigma = run_convergence_study(base);
  auto a = r.with_sigma.target_cells("f"), b = r.without_sigma.target_cells("f");
  for (std::size_t i = 0; i < a.size(); ++i)
    r.f_risk_ratio.push_back(b[i].mean_risk > 0 ? a[i].mean_risk / b[i].mean_risk
                                                : std::numeric_limits<double>::quiet_NaN());
  return r;
}

// Bound suite -------------------------------------------------------------------

//! Every applicable bound check for the plan's model and geometry;
//! inapplicable ones come back as skipped rows with the reason.
inline std::vector<BoundReport> run_bound_suite(const ExperimentPlan& plan)
{
  plan.validate();
  const LevyModel model = plan.model.build();
  const auto& B = plan.bounds;
  const auto geo = plan.geometry;
  std::vector<BoundReport> out;
  auto push = [&](BoundReport r, const std::string& tag) {
    r.name += "@" + tag;
    r.config_id = plan.config_id;
    out.push_back(std::move(r));
  };

  // (1/Delta) F_Delta(eps) -> lambda_eps
  {
    std::string tag = "delta=" + format_double(B.intensity_limit_delta);
    try {
      double F = exact_exceedance_prob(model, B.intensity_limit_delta, geo.eps);
      double lam = tail_mass(model, geo.eps);
      if (!(lam > 0))
        push(skipped_report("intensity_limit", "lambda_eps = 0"), tag);
      else
        push(make_report("intensity_limit", std::abs(F / B.intensity_limit_delta - lam) / lam, 0.02, 0.0), tag);
    } catch (const NotAvailable& e) {
      push(skipped_report("intensity_limit", e.what()), tag);
    }
  }

  // ||p_{Delta,eps} - h_eps|| over the distinct grid steps
  {
    std::vector<double> deltas;
    for (const auto& c : plan.canonical_grid())
      deltas.push_back(c.delta);
    std::sort(deltas.begin(), deltas.end());
    deltas.erase(std::unique(deltas.begin(), deltas.end()), deltas.end());
    for (double d : deltas) {
      auto g = plan.geometry_for(d);
      std::string tag = "delta=" + format_double(d) + ";eps=" + format_double(g.eps);
      try {
        if (model.sigma() > 0.0)
          push(skipped_report("hpeps", "mixture density excludes the Brownian part"), tag);
        else
          push(check_hpeps_bound(model, g, d, plan.p), tag);
      } catch (const std::exception& e) {
        push(skipped_report("hpeps", e.what()), tag);
      }
    }
  }

  // E[n(eps)^{-r}]
  for (std::size_t i = 0; i < B.count_r.size(); ++i) {
    double r = B.count_r[i];
    std::string tag = "r=" + format_double(r);
    try {
      if (model.sigma() > 0.0)
        push(skipped_report("count_moments", "no closed-form exceedance probability with sigma > 0"), tag);
      else
        push(check_count_moment_bounds(model, geo, B.count_n, B.count_delta, r, B.count_runs,
                                       bench_detail::mix(plan.seed, 100 + i), plan.workers),
             tag);
    } catch (const DomainError& e) {
      push(skipped_report("count_moments", e.what()), tag);
    }
  }

  // P(M_t(eps) > x)
  for (std::size_t i = 0; i < B.tail_x.size(); ++i) {
    double x = B.tail_x[i];
    std::string tag = "x=" + format_double(x);
    if (geo.eps == 0.0) {
      push(skipped_report("small_jump_tail", "eps = 0: no small-jump martingale"), tag);
      continue;
    }
    auto mc = estimate_small_jump_tail(model.with_sigma(0.0), geo, plan.policy_for(geo.eps), B.tail_t, x,
                                       B.tail_replicates, bench_detail::mix(plan.seed, 200 + i), plan.workers);
    push(check_small_jump_tail(model, geo, B.tail_t, x, mc), tag);
  }

  // n(eps) - n~(eps) from decomposed samples
  {
    std::vector<IncrementSample> samples(B.split_runs);
    uint64_t s = bench_detail::mix(plan.seed, 300);
    DecomposedSampler sampler(model, geo, plan.policy_for(geo.eps), B.split_delta);
    parallel_for(B.split_runs, plan.workers, [&](std::size_t i) {
      samples[i] = sampler.sample(B.split_n, { s, uint32_t(i), 0 });
    });
    for (double r : B.split_r)
      push(check_split_count_bounds(samples, geo, r), "r=" + format_double(r));
  }
  return out;
}

// H1 / H2 diagnostics --------------------------------------------------------------

struct DiagnosticRow
{
  std::string config_id;
  std::string kind; //!< h1_ratio, h1_exponent, h2_v, h2_beta, stable_ratio
  double delta = std::numeric_limits<double>::quiet_NaN();
  double eps = std::numeric_limits<double>::quiet_NaN();
  int k = 0;
  double value = std::numeric_limits<double>::quiet_NaN();
  double ci_lo = std::numeric_limits<double>::quiet_NaN();
  double ci_hi = std::numeric_limits<double>::quiet_NaN();
  double reference = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok"; //!< ok, censored, skipped, within, above
  std::string note;
};

//! H1: |F_Delta/Delta - lambda_eps|/(Delta lambda_eps^2) per Delta plus the
//! fitted exponent of the bias in Delta. H2: v_hat_Delta(eps) by Monte
//! Carlo and the fitted exponent beta. Stable models additionally get
//! v_hat/(lambda_eps Delta) against alpha/(2k - alpha) on the plan grid.
inline std::vector<DiagnosticRow> run_h1_h2_diagnostics(const ExperimentPlan& plan)
{
  plan.validate();
  const LevyModel model = plan.model.build();
  const auto& D = plan.diagnostics;
  const auto geo = plan.geometry;
  std::vector<DiagnosticRow> rows;
  auto row = [&](std::string kind) {
    DiagnosticRow r;
    r.config_id = plan.config_id;
    r.kind = std::move(kind);
    r.eps = geo.eps;
    return r;
  };

  // H1
  {
    std::vector<double> x, y;
    double lam = tail_mass(model, geo.eps);
    for (double d : D.h1_deltas) {
      auto r = row("h1_ratio");
      r.delta = d;
      try {
        double bias = std::abs(exact_exceedance_prob(model, d, geo.eps) / d - lam);
        r.value = bias / (d * lam * lam);
        if (bias > 0) {
          x.push_back(std::log(d));
          y.push_back(std::log(bias));
        }
      } catch (const std::exception& e) {
        r.status = "skipped";
        r.note = e.what();
      }
      rows.push_back(r);
    }
    auto r = row("h1_exponent");
    r.reference = 1.0;
    if (x.size() >= 2) {
      r.value = bench_detail::ols(x, y).slope;
    } else {
      r.status = "skipped";
      r.note = "fewer than two Delta with a nonzero closed-form bias";
    }
    rows.push_back(r);
  }

  // H2
  {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < D.h2_deltas.size(); ++i) {
      double d = D.h2_deltas[i];
      auto r = row("h2_v");
      r.delta = d;
      if (geo.eps == 0.0 && model.finite_measure()) {
        r.status = "skipped";
        r.note = "eps = 0";
        rows.push_back(r);
        continue;
      }
      auto mc = estimate_v_delta(model, geo, plan.policy_for(geo.eps), d, D.h2_replicates,
                                 bench_detail::mix(plan.seed, 400 + i), plan.workers);
      r.value = mc.estimate;
      r.ci_lo = mc.ci_lo;
      r.ci_hi = mc.ci_hi;
      r.note = "hits=" + std::to_string(mc.successes);
      if (mc.successes == 0) {
        r.status = "censored";
      } else {
        x.push_back(std::log(d));
        y.push_back(std::log(mc.estimate));
      }
      rows.push_back(r);
    }
    auto r = row("h2_beta");
    r.reference = 2.0;
    if (x.size() >= 2) {
      auto l = bench_detail::ols(x, y);
      r.value = l.slope;
      if (x.size() >= 3) {
        double half = bench_detail::t975(x.size() - 2) * l.se;
        r.ci_lo = l.slope - half;
        r.ci_hi = l.slope + half;
      }
    } else {
      r.status = "censored";
      r.note = "fewer than two uncensored Delta";
    }
    rows.push_back(r);
  }

  // stable: v/(lambda Delta) against alpha/(2k - alpha)
  if (plan.model.family == "stable") {
    double alpha = plan.model.alpha;
    std::vector<double> deltas;
    for (const auto& c : plan.canonical_grid())
      deltas.push_back(c.delta);
    std::sort(deltas.begin(), deltas.end());
    deltas.erase(std::unique(deltas.begin(), deltas.end()), deltas.end());
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      double d = deltas[i];
      auto g = plan.geometry_for(d);
      auto mc = estimate_v_delta(model, g, plan.policy_for(g.eps), d, D.stable_replicates,
                                 bench_detail::mix(plan.seed, 500 + i), plan.workers);
      double scale = tail_mass(model, g.eps) * d;
      for (int k = 2; k <= D.stable_k_max; ++k) {
        auto r = row("stable_ratio");
        r.delta = d;
        r.eps = g.eps;
        r.k = k;
        r.value = mc.estimate / scale;
        r.ci_lo = mc.ci_lo / scale;
        r.ci_hi = mc.ci_hi / scale;
        r.reference = alpha / (2.0 * k - alpha);
        r.status = mc.successes == 0 ? "censored" : (r.ci_lo <= r.reference ? "within" : "above");
        rows.push_back(r);
      }
    }
  }
  return rows;
}

// CSV -------------------------------------------------------------------------------

inline void write_risk_csv(std::ostream& os, const RiskReport& rep)
{
  os << "schema_version," << csv_schema_version << "\n";
  os << "config_id,n,delta,eps,target,p,mean_risk,se_risk,replicates\n";
  for (const auto& c : rep.cells)
    os << rep.config_id << "," << c.n << "," << format_double(c.delta) << "," << format_double(c.eps) << ","
       << c.target << "," << format_double(c.p) << "," << format_double(c.mean_risk) << ","
       << format_double(c.se_risk) << "," << c.replicates << "\n";
}

inline void write_slopes_csv(std::ostream& os, const RiskReport& rep)
{
  os << "schema_version," << csv_schema_version << "\n";
  os << "config_id,target,slope,slope_ci_lo,slope_ci_hi,theory_slope\n";
  for (const auto& s : rep.slopes)
    os << rep.config_id << "," << s.target << "," << format_double(s.slope) << "," << format_double(s.ci_lo)
       << "," << format_double(s.ci_hi) << "," << format_double(s.theory_slope) << "\n";
}

inline void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticRow>& rows)
{
  os << "schema_version," << csv_schema_version << "\n";
  os << "config_id,kind,delta,eps,k,value,ci_lo,ci_hi,reference,status\n";
  for (const auto& r : rows)
    os << r.config_id << "," << r.kind << "," << format_double(r.delta) << "," << format_double(r.eps) << ","
       << r.k << "," << format_double(r.value) << "," << format_double(r.ci_lo) << ","
       << format_double(r.ci_hi) << "," << format_double(r.reference) << "," << r.status << "\n";
}

} // namespace levyest
