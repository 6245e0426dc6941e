#pragma once

#include "levy_models.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace levyest {

struct SeedProvenance
{
  uint64_t master_seed = 0;
  uint32_t replicate = 0;
  uint16_t cell = 0;
};

//! Ground truth of a decomposed draw. Jump sizes of increment i are
//! jump_sizes[jump_offsets[i] .. jump_offsets[i+1]).
struct Decomposition
{
  std::vector<double> small_part;
  std::vector<double> big_part;
  std::vector<uint32_t> jump_count;
  std::vector<double> jump_sizes;
  std::vector<std::size_t> jump_offsets;
};

struct IncrementSample
{
  double delta = 0.0;
  std::vector<double> values;
  std::optional<Decomposition> decomposition;
  SeedProvenance seed;
  bool no_big_jumps = false;  //!< lambda_eps = 0, big_part identically 0

  std::size_t size() const { return values.size(); }
};

struct SmallJumpPolicy
{
  double inner_cutoff;            //!< eps'' in (0, eps]
  bool gaussian_remainder = true;

  static SmallJumpPolicy defaults(double eps) { return { eps * 1e-3, true }; }
  void validate(double eps) const
  {
    if (!(inner_cutoff > 0.0 && inner_cutoff <= eps))
      throw DomainError("inner cutoff must satisfy 0 < eps'' <= eps");
  }
};

//! Tabulated inverse CDF of an unnormalized density on a union of
//! intervals. Each interval gets `points` nodes, log-spaced when it starts
//! away from 0 and spans a wide range (where power-law densities live),
//! linear otherwise. Unbounded intervals are cut where the remaining mass
//! drops below 1e-12 of the interval mass (or at 1e30).
class InverseCdfTable
{
public:
  InverseCdfTable(const std::function<double(double)>& f,
                  const std::vector<Interval>& region,
                  int points = 1 << 14)
  {
    if (points < 16)
      throw DomainError("inverse CDF table needs at least 16 points");
    std::vector<Interval> pieces;
    for (auto iv : region) {
      if (!(iv.hi > iv.lo))
        continue;
      if (iv.lo < 0.0 && iv.hi > 0.0) {
        pieces.push_back({ iv.lo, 0.0 });
        pieces.push_back({ 0.0, iv.hi });
      } else {
        pieces.push_back(iv);
      }
    }
    std::sort(pieces.begin(), pieces.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    for (const auto& iv : pieces) {
      Segment s;
      s.sign = iv.lo >= 0.0 ? 1.0 : -1.0;
      double a = s.sign > 0 ? iv.lo : -iv.hi;
      double b = s.sign > 0 ? iv.hi : -iv.lo;
      auto g = [&f, sign = s.sign](double r) { return f(sign * r); };
      build_segment(s, g, a, b, points);
      if (s.mass > 0.0)
        segs_.push_back(std::move(s));
    }
    total_ = 0.0;
    for (const auto& s : segs_) {
      seg_start_.push_back(total_);
      total_ += s.mass;
    }
    if (!(total_ > 0.0) || !std::isfinite(total_))
      throw IntegrationFailure("inverse CDF table has no finite positive mass", total_, 0.0);
  }

  double total_mass() const { return total_; }

  double sample(RandomStream& rng) const { return quantile(rng.uniform()); }

  //! Inverse of the tabulated CDF for u in (0, 1).
  double quantile(double u) const
  {
    double target = u * total_;
    std::size_t k = std::upper_bound(seg_start_.begin(), seg_start_.end(), target) -
                    seg_start_.begin() - 1;
    const auto& s = segs_[k];
    double local = std::min(target - seg_start_[k], s.mass);
    auto it = std::upper_bound(s.cum.begin(), s.cum.end(), local);
    std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - s.cum.begin() - 1, 0),
                                          s.r.size() - 2);
    double w = s.cum[i + 1] - s.cum[i];
    double t = w > 0.0 ? (local - s.cum[i]) / w : 0.0;
    double r = s.r[i] + std::clamp(t, 0.0, 1.0) * (s.r[i + 1] - s.r[i]);
    return s.sign * r;
  }

  //! Tabulated CDF (piecewise linear between nodes).
  double cdf(double x) const
  {
    double acc = 0.0;
    for (std::size_t k = 0; k < segs_.size(); ++k) {
      const auto& s = segs_[k];
      double lo = s.sign > 0 ? s.r.front() : -s.r.back();
      double hi = s.sign > 0 ? s.r.back() : -s.r.front();
      if (x >= hi) {
        acc += s.mass;
        continue;
      }
      if (x <= lo)
        break;
      // partial segment: mass of the part below x
      double r = s.sign * x;
      auto it = std::upper_bound(s.r.begin(), s.r.end(), r);
      std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - s.r.begin() - 1, 0),
                                            s.r.size() - 2);
      double t = (r - s.r[i]) / (s.r[i + 1] - s.r[i]);
      double below_r = s.cum[i] + t * (s.cum[i + 1] - s.cum[i]);
      acc += s.sign > 0 ? below_r : s.mass - below_r;
      break;
    }
    return acc / total_;
  }

private:
  struct Segment
  {
    double sign;
    std::vector<double> r;    // nodes in |x|, ascending
    std::vector<double> cum;  // mass below each node, from the inner end
    double mass = 0.0;
  };

  template<class G>
  static void build_segment(Segment& s, const G& g, double a, double b, int points)
  {
    if (std::isinf(b)) {
      double whole = integrate_upper(g, a, { 1e-14, 1e-10, 4000 }).value;
      double cut = std::max(2.0 * a, 1.0);
      while (cut < 1e30 &&
             integrate_upper(g, cut, { 1e-300, 1e-6, 4000 }).value > 1e-12 * whole)
        cut *= 4.0;
      b = std::min(cut, 1e30);
    }
    bool log_spaced = a > 0.0 && b / a > 4.0;
    s.r.resize(points + 1);
    for (int i = 0; i <= points; ++i) {
      double t = double(i) / points;
      s.r[i] = log_spaced ? a * std::exp(t * std::log(b / a)) : a + t * (b - a);
    }
    s.r.front() = a;
    s.r.back() = b;
    s.cum.assign(points + 1, 0.0);
    for (int i = 0; i < points; ++i) {
      double m = quad_detail::gk21(g, s.r[i], s.r[i + 1]).value;
      s.cum[i + 1] = s.cum[i] + std::max(m, 0.0);
    }
    s.mass = s.cum.back();
  }

  std::vector<Segment> segs_;
  std::vector<double> seg_start_;
  double total_ = 0.0;
};

namespace sim_detail {

inline void add_brownian(std::vector<double>& v, double sigma, double delta, const SeedProvenance& p)
{
  if (sigma <= 0.0)
    return;
  RandomStream bm(p.master_seed, p.replicate, p.cell, StreamPurpose::brownian);
  double scale = sigma * std::sqrt(delta);
  for (auto& x : v)
    x += scale * sampling::normal(bm);
}

// scale of X_Delta / S for the unit-constant stable Levy density
inline double stable_scale(double alpha, double delta)
{
  double c = alpha == 1.0 ? pi
                          : 2.0 * std::tgamma(1.0 - alpha) * std::cos(pi * alpha / 2.0) / alpha;
  return std::pow(delta * c, 1.0 / alpha);
}

} // namespace sim_detail

//! Draws i.i.d. increments from the exact marginal law of X_Delta.
class ExactSampler
{
public:
  ExactSampler(const LevyModel& model, double delta)
    : model_(model)
    , delta_(delta)
  {
    if (!(delta > 0) || !std::isfinite(delta))
      throw DomainError("delta must be positive and finite");
    if (model.is<CustomDensity>())
      throw NotAvailable("no exact marginal sampler for custom densities; use sample_decomposed");
    if (auto c = std::get_if<CompoundPoisson>(&model.family()); c && !c->atom)
      jumps_ = std::make_shared<InverseCdfTable>(c->jumps.eval, c->jumps.support);
  }

  IncrementSample sample(std::size_t n, const SeedProvenance& prov) const
  {
    if (n == 0)
      throw DomainError("sample size must be positive");
    IncrementSample out;
    out.delta = delta_;
    out.seed = prov;
    out.values.resize(n);
    RandomStream rng(prov.master_seed, prov.replicate, prov.cell, StreamPurpose::jumps);
    const auto& fam = model_.family();
    if (auto c = std::get_if<CompoundPoisson>(&fam)) {
      double mean = c->intensity * delta_;
      for (auto& x : out.values) {
        uint64_t k = sampling::poisson(rng, mean);
        double s = 0.0;
        for (uint64_t j = 0; j < k; ++j)
          s += c->atom ? *c->atom : jumps_->sample(rng);
        x = s;
      }
    } else if (model_.is<GammaProcess>()) {
      for (auto& x : out.values)
        x = sampling::gamma(rng, delta_);
    } else if (model_.is<CauchyProcess>()) {
      for (auto& x : out.values)
        x = delta_ * sampling::cauchy(rng);
    } else if (auto s = std::get_if<SymmetricStable>(&fam)) {
      double scale = sim_detail::stable_scale(s->alpha, delta_);
      for (auto& x : out.values)
        x = scale * sampling::symmetric_stable(rng, s->alpha);
    } else if (model_.is<InverseGaussian>()) {
      double mu = std::sqrt(pi) * delta_, lam = 2.0 * pi * delta_ * delta_;
      for (auto& x : out.values)
        x = sampling::inverse_gaussian(rng, mu, lam);
    }
    sim_detail::add_brownian(out.values, model_.sigma(), delta_, prov);
    return out;
  }

private:
  LevyModel model_;
  double delta_;
  std::shared_ptr<const InverseCdfTable> jumps_;
};

//! Levy-Ito sampler: big jumps (|x| > eps) as a compound Poisson process,
//! small jumps in (eps'', eps] as a compensated compound Poisson process,
//! jumps below eps'' as a centered Gaussian. Finite-measure models simulate
//! all small jumps exactly (eps'' = 0, no Gaussian).
class DecomposedSampler
{
public:
  DecomposedSampler(const LevyModel& model,
                    const TruncationGeometry& geometry,
                    const SmallJumpPolicy& policy,
                    double delta)
    : model_(model)
    , geometry_(geometry)
    , delta_(delta)
  {
    geometry.validate(model);
    if (!(delta > 0) || !std::isfinite(delta))
      throw DomainError("delta must be positive and finite");
    double eps = geometry.eps;
    auto c = std::get_if<CompoundPoisson>(&model.family());
    atom_ = c ? c->atom : std::nullopt;
    bool finite = model.finite_measure();
    if (!finite)
      policy.validate(eps);
    double eps2 = finite ? 0.0 : policy.inner_cutoff;

    lambda_ = tail_mass(model, eps);
    if (lambda_ > 0.0 && !atom_) {
      auto h = big_jump_density(model, eps);
      big_ = std::make_shared<InverseCdfTable>(model.levy_density().eval, h.support);
    }
    if (eps > 0.0) {
      drift_ = drift_b(model, eps);
      if (atom_) {
        if (std::abs(*atom_) <= eps) {
          inner_rate_ = c->intensity;
          inner_mean_ = c->intensity * *atom_;
        }
      } else {
        auto f = model.levy_density();
        std::vector<Interval> band;
        for (const auto& iv : f.support) {
          Interval pos{ std::max(iv.lo, eps2), std::min(iv.hi, eps) };
          Interval neg{ std::max(iv.lo, -eps), std::min(iv.hi, -eps2) };
          if (pos.hi > pos.lo)
            band.push_back(pos);
          if (neg.hi > neg.lo)
            band.push_back(neg);
        }
        if (!band.empty()) {
          inner_ = std::make_shared<InverseCdfTable>(f.eval, band);
          inner_rate_ = inner_->total_mass();
          inner_mean_ = band_first_moment(model, eps2, eps);
        }
      }
      if (!finite && policy.gaussian_remainder)
        gauss_var_ = truncated_second_moment(model, eps2);
    }
  }

  double lambda_eps() const { return lambda_; }
  double drift() const { return drift_; }
  double inner_rate() const { return inner_rate_; }
  double delta() const { return delta_; }

  IncrementSample sample(std::size_t n, const SeedProvenance& prov) const
  {
    if (n == 0)
      throw DomainError("sample size must be positive");
    IncrementSample out;
    out.delta = delta_;
    out.seed = prov;
    out.no_big_jumps = !(lambda_ > 0.0);
    Decomposition d;
    d.small_part.resize(n);
    d.big_part.resize(n);
    d.jump_count.resize(n);
    d.jump_offsets.resize(n + 1, 0);
    RandomStream rng(prov.master_seed, prov.replicate, prov.cell, StreamPurpose::jumps);
    for (std::size_t i = 0; i < n; ++i) {
      uint64_t k = lambda_ > 0.0 ? sampling::poisson(rng, lambda_ * delta_) : 0;
      double big = 0.0;
      for (uint64_t j = 0; j < k; ++j) {
        double y = atom_ ? *atom_ : big_->sample(rng);
        d.jump_sizes.push_back(y);
        big += y;
      }
      d.big_part[i] = big;
      d.jump_count[i] = uint32_t(k);
      d.jump_offsets[i + 1] = d.jump_sizes.size();
      d.small_part[i] = draw_small(rng);
    }
    if (model_.sigma() > 0.0)
      sim_detail::add_brownian(d.small_part, model_.sigma(), delta_, prov);
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      out.values[i] = d.small_part[i] + d.big_part[i];
    out.decomposition = std::move(d);
    return out;
  }

  //! Delta b + compensated jumps in (eps'', eps] + Gaussian remainder.
  double draw_small(RandomStream& rng) const
  {
    double s = delta_ * (drift_ - inner_mean_);
    if (inner_rate_ > 0.0) {
      uint64_t m = sampling::poisson(rng, inner_rate_ * delta_);
      for (uint64_t j = 0; j < m; ++j)
        s += atom_ ? *atom_ : inner_->sample(rng);
    }
    if (gauss_var_ > 0.0)
      s += std::sqrt(delta_ * gauss_var_) * sampling::normal(rng);
    return s;
  }

  //! M_Delta(eps) alone, i.e. the small part without the drift.
  double draw_martingale(RandomStream& rng) const { return draw_small(rng) - delta_ * drift_; }

  const InverseCdfTable* big_jump_table() const { return big_.get(); }

private:
  LevyModel model_;
  TruncationGeometry geometry_;
  double delta_;
  std::optional<double> atom_;
  double lambda_ = 0.0;
  double drift_ = 0.0;
  double inner_rate_ = 0.0;
  double inner_mean_ = 0.0;
  double gauss_var_ = 0.0;
  std::shared_ptr<const InverseCdfTable> big_, inner_;
};

inline IncrementSample sample_exact(const LevyModel& model,
                                    std::size_t n,
                                    double delta,
                                    const SeedProvenance& seed)
{
  return ExactSampler(model, delta).sample(n, seed);
}

inline IncrementSample sample_decomposed(const LevyModel& model,
                                         const TruncationGeometry& geometry,
                                         const SmallJumpPolicy& policy,
                                         std::size_t n,
                                         double delta,
                                         const SeedProvenance& seed)
{
  return DecomposedSampler(model, geometry, policy, delta).sample(n, seed);
}

//! Binomial proportion with a 95% Wilson score interval.
struct ProbabilityEstimate
{
  double estimate;
  double ci_lo;
  double ci_hi;
  uint64_t successes;
  uint64_t trials;

  static ProbabilityEstimate from_counts(uint64_t k, uint64_t n)
  {
    const double z = 1.959963984540054;
    double p = double(k) / double(n);
    double z2n = z * z / n;
    double centre = (p + z2n / 2) / (1 + z2n);
    double half = z * std::sqrt(p * (1 - p) / n + z2n / (4.0 * n)) / (1 + z2n);
    return { p, std::max(0.0, centre - half), std::min(1.0, centre + half), k, n };
  }
};

namespace sim_detail {

// replicates split into fixed blocks, each with its own stream, so the
// count does not depend on the worker count
template<class Hit>
ProbabilityEstimate count_hits(std::size_t replicates, uint64_t seed, int workers, Hit hit)
{
  const std::size_t block = 1 << 16;
  std::size_t nblocks = (replicates + block - 1) / block;
  std::vector<uint64_t> hits(nblocks, 0);
  parallel_for(nblocks, workers, [&](std::size_t b) {
    RandomStream rng(seed, uint32_t(b), 0, StreamPurpose::auxiliary);
    std::size_t lo = b * block, hi = std::min(replicates, lo + block);
    uint64_t h = 0;
    for (std::size_t i = lo; i < hi; ++i)
      h += hit(rng) ? 1 : 0;
    hits[b] = h;
  });
  uint64_t total = 0;
  for (auto h : hits)
    total += h;
  return ProbabilityEstimate::from_counts(total, replicates);
}

} // namespace sim_detail

//! Monte Carlo v_Delta(eps) = P(|M_Delta(eps) + Delta b| > eps).
inline ProbabilityEstimate estimate_v_delta(const LevyModel& model,
                                            const TruncationGeometry& geometry,
                                            const SmallJumpPolicy& policy,
                                            double delta,
                                            std::size_t replicates,
                                            uint64_t seed,
                                            int workers = 1)
{
  if (replicates < 1000)
    throw DomainError("estimate_v_delta needs at least 1000 replicates");
  if (geometry.eps == 0.0) {
    geometry.validate(model);
    if (model.sigma() == 0.0)
      return ProbabilityEstimate::from_counts(0, replicates);
  }
  DecomposedSampler s(model, geometry, policy, delta);
  double eps = geometry.eps, sigma = model.sigma();
  return sim_detail::count_hits(replicates, seed, workers, [&](RandomStream& rng) {
    double x = s.draw_small(rng);
    if (sigma > 0.0)
      x += sigma * std::sqrt(delta) * sampling::normal(rng);
    return std::abs(x) > eps;
  });
}

//! Monte Carlo P(M_t(eps) > x) for the compensated small-jump martingale.
inline ProbabilityEstimate estimate_small_jump_tail(const LevyModel& model,
                                                    const TruncationGeometry& geometry,
                                                    const SmallJumpPolicy& policy,
                                                    double t,
                                                    double x,
                                                    std::size_t replicates,
                                                    uint64_t seed,
                                                    int workers = 1)
{
  DecomposedSampler s(model, geometry, policy, t);
  return sim_detail::count_hits(replicates, seed, workers,
                                [&](RandomStream& rng) { return s.draw_martingale(rng) > x; });
}

// sample CSV --------------------------------------------------------------

inline std::string format_double(double x)
{
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

constexpr int csv_schema_version = 1;

//! `replicate,index,value[,small_part,big_part,jump_count]`, one row per
//! increment, after a schema_version row.
inline void write_samples_csv(std::ostream& os, const std::vector<IncrementSample>& samples)
{
  bool decomposed = !samples.empty() && samples.front().decomposition.has_value();
  os << "schema_version," << csv_schema_version << "\n";
  os << "replicate,index,value";
  if (decomposed)
    os << ",small_part,big_part,jump_count";
  os << "\n";
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      os << s.seed.replicate << "," << i << "," << format_double(s.values[i]);
      if (decomposed) {
        const auto& d = *s.decomposition;
        os << "," << format_double(d.small_part[i]) << "," << format_double(d.big_part[i])
           << "," << d.jump_count[i];
      }
      os << "\n";
    }
  }
}

//! Reads a sample CSV back; delta is not stored in the file.
inline std::vector<IncrementSample> read_samples_csv(std::istream& is, double delta)
{
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& m) { throw ConfigError("samples CSV: " + m, lineno); };
  if (!std::getline(is, line) || line.rfind("schema_version,", 0) != 0)
    fail("missing schema_version row");
  ++lineno;
  if (std::stoi(line.substr(15)) != csv_schema_version)
    fail("unsupported schema_version " + line.substr(15));
  if (!std::getline(is, line))
    fail("missing header");
  ++lineno;
  if (line.rfind("replicate,index,value", 0) != 0)
    fail("unexpected header '" + line + "'");
  std::vector<IncrementSample> out;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::istringstream ls(line);
    std::string rep, idx, val;
    if (!std::getline(ls, rep, ',') || !std::getline(ls, idx, ',') || !std::getline(ls, val, ','))
      fail("expected at least three fields");
    uint32_t r = uint32_t(std::stoul(rep));
    if (out.empty() || out.back().seed.replicate != r) {
      out.emplace_back();
      out.back().delta = delta;
      out.back().seed.replicate = r;
    }
    out.back().values.push_back(std::stod(val));
  }
  return out;
}

} // namespace levyest
