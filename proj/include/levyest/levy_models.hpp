#pragma once

#include "errors.hpp"
#include "quadrature.hpp"
#include "special_functions.hpp"
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace levyest {

constexpr double pi = 3.14159265358979323846;
constexpr double inf = std::numeric_limits<double>::infinity();

struct Interval
{
  double lo, hi;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

//! A nonnegative function on the line with known support.
struct Density1D
{
  std::function<double(double)> eval;
  std::vector<Interval> support;      //!< one or two intervals
  std::function<double(double)> cdf;  //!< optional closed form
  bool symmetric = false;
  //! f(x) ~ |x|^{-1-a} near the origin; -1 means bounded there.
  double origin_exponent = -1.0;

  double operator()(double x) const
  {
    for (const auto& iv : support)
      if (iv.contains(x))
        return eval(x);
    return 0.0;
  }
  double support_radius() const
  {
    double r = 0.0;
    for (const auto& iv : support)
      r = std::max({ r, std::abs(iv.lo), std::abs(iv.hi) });
    return r;
  }
  bool has_closed_form_cdf() const { return static_cast<bool>(cdf); }
};

//! Uniform density on [lo, hi].
inline Density1D uniform_density(double lo, double hi)
{
  if (!(hi > lo))
    throw DomainError("uniform_density: need lo < hi");
  Density1D d;
  double v = 1.0 / (hi - lo);
  d.eval = [v](double) { return v; };
  d.support = { { lo, hi } };
  d.cdf = [lo, hi](double x) { return std::clamp((x - lo) / (hi - lo), 0.0, 1.0); };
  d.symmetric = (lo == -hi);
  return d;
}

//! Normal(mean, sd) restricted to [lo, hi] and renormalized.
inline Density1D truncated_normal_density(double mean, double sd, double lo, double hi)
{
  if (!(sd > 0) || !(hi > lo))
    throw DomainError("truncated_normal_density: need sd > 0 and lo < hi");
  auto Phi = special::normal_cdf;
  double za = (lo - mean) / sd, zb = (hi - mean) / sd;
  double mass = Phi(zb) - Phi(za);
  Density1D d;
  d.eval = [=](double x) {
    double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * pi) * mass);
  };
  d.support = { { lo, hi } };
  d.cdf = [=](double x) {
    if (x <= lo)
      return 0.0;
    if (x >= hi)
      return 1.0;
    return (Phi((x - mean) / sd) - Phi(za)) / mass;
  };
  d.symmetric = (mean == 0.0 && lo == -hi);
  return d;
}

// model families ---------------------------------------------------------

struct CompoundPoisson
{
  double intensity;
  Density1D jumps;
  std::optional<double> atom;  //!< jumps identically equal to this value
};
struct GammaProcess
{};
struct SymmetricStable
{
  double alpha;
};
struct CauchyProcess
{};
struct InverseGaussian
{};
struct CustomDensity
{
  Density1D f;
  bool finite_variation;
  bool finite_measure;
};

using Family = std::variant<CompoundPoisson,
                            GammaProcess,
                            SymmetricStable,
                            CauchyProcess,
                            InverseGaussian,
                            CustomDensity>;

enum class Variation
{
  finite,
  infinite
};

namespace model_detail {
inline QuadratureOptions tight() { return { 1e-13, 1e-11, 4000 }; }
inline double integrate_piece(const std::function<double(double)>& g,
                              double a,
                              double b,
                              double origin_power,
                              const QuadratureOptions& opts);
} // namespace model_detail

//! Levy triplet with zero drift parameter: jumps from nu, optional
//! Brownian coefficient sigma.
class LevyModel
{
public:
  static LevyModel compound_poisson(double intensity, Density1D jumps)
  {
    if (!(intensity > 0) || !std::isfinite(intensity))
      throw DomainError("compound Poisson intensity must be positive and finite");
    return LevyModel(CompoundPoisson{ intensity, std::move(jumps), std::nullopt });
  }
  static LevyModel compound_poisson_atom(double intensity, double value)
  {
    if (!(intensity > 0) || value == 0.0)
      throw DomainError("compound Poisson atom needs intensity > 0, value != 0");
    Density1D d;
    d.eval = [](double) -> double {
      throw NotAvailable("jump law is a point mass and has no density");
    };
    d.support = { { value, value } };
    return LevyModel(CompoundPoisson{ intensity, d, value });
  }
  static LevyModel gamma() { return LevyModel(GammaProcess{}); }
  static LevyModel cauchy() { return LevyModel(CauchyProcess{}); }
  static LevyModel inverse_gaussian() { return LevyModel(InverseGaussian{}); }
  static LevyModel stable(double alpha)
  {
    if (!(alpha > 0.0 && alpha < 2.0))
      throw DomainError("stable exponent alpha must lie in (0, 2)");
    return LevyModel(SymmetricStable{ alpha });
  }
  //! Checks int (y^2 ^ 1) f(y) dy < inf numerically.
  static LevyModel custom(Density1D f, bool finite_variation, bool finite_measure)
  {
    LevyModel m(CustomDensity{ std::move(f), finite_variation, finite_measure });
    const auto& d = std::get<CustomDensity>(m.family_).f;
    try {
      double total = 0.0;
      auto sq = [&](double x) { return x * x * d(x); };
      auto one = [&](double x) { return d(x); };
      total += model_detail::integrate_piece(sq, -1.0, 1.0, 1.0 - d.origin_exponent, {});
      total += model_detail::integrate_piece(one, 1.0, inf, 0.0, {});
      total += model_detail::integrate_piece(one, -inf, -1.0, 0.0, {});
      if (!std::isfinite(total))
        throw DomainError("custom Levy density is not integrable against y^2 ^ 1");
    } catch (const IntegrationFailure& e) {
      throw DomainError(std::string("custom Levy density fails int(y^2 ^ 1) f < inf: ") +
                        e.what());
    }
    return m;
  }

  LevyModel with_sigma(double sigma) const
  {
    if (!(sigma >= 0) || !std::isfinite(sigma))
      throw DomainError("sigma must be finite and nonnegative");
    LevyModel m = *this;
    m.sigma_ = sigma;
    return m;
  }

  const Family& family() const { return family_; }
  double sigma() const { return sigma_; }

  template<class T>
  bool is() const
  {
    return std::holds_alternative<T>(family_);
  }

  Variation variation() const
  {
    if (auto s = std::get_if<SymmetricStable>(&family_))
      return s->alpha < 1.0 ? Variation::finite : Variation::infinite;
    if (is<CauchyProcess>())
      return Variation::infinite;
    if (auto c = std::get_if<CustomDensity>(&family_))
      return c->finite_variation ? Variation::finite : Variation::infinite;
    return Variation::finite;
  }

  bool finite_measure() const
  {
    if (is<CompoundPoisson>())
      return true;
    if (auto c = std::get_if<CustomDensity>(&family_))
      return c->finite_measure;
    return false;
  }

  bool symmetric() const
  {
    if (is<SymmetricStable>() || is<CauchyProcess>())
      return true;
    if (auto c = std::get_if<CompoundPoisson>(&family_))
      return !c->atom && c->jumps.symmetric;
    if (auto c = std::get_if<CustomDensity>(&family_))
      return c->f.symmetric;
    return false;
  }

  std::string name() const
  {
    struct V
    {
      std::string operator()(const CompoundPoisson&) const { return "compound_poisson"; }
      std::string operator()(const GammaProcess&) const { return "gamma"; }
      std::string operator()(const SymmetricStable&) const { return "stable"; }
      std::string operator()(const CauchyProcess&) const { return "cauchy"; }
      std::string operator()(const InverseGaussian&) const { return "inverse_gaussian"; }
      std::string operator()(const CustomDensity&) const { return "custom"; }
    };
    return std::visit(V{}, family_);
  }

  //! The Levy density f as a Density1D (compound Poisson: lambda0 times the
  //! jump density).
  Density1D levy_density() const
  {
    Density1D d;
    if (auto c = std::get_if<CompoundPoisson>(&family_)) {
      if (c->atom)
        throw NotAvailable("point-mass jump law has no Levy density");
      d = c->jumps;
      double lam = c->intensity;
      auto base = c->jumps.eval;
      d.eval = [lam, base](double x) { return lam * base(x); };
      d.cdf = nullptr;
    } else if (is<GammaProcess>()) {
      d.eval = [](double x) { return std::exp(-x) / x; };
      d.support = { { 0.0, inf } };
      d.origin_exponent = 0.0;
    } else if (auto s = std::get_if<SymmetricStable>(&family_)) {
      double a = s->alpha;
      d.eval = [a](double x) { return std::pow(std::abs(x), -1.0 - a); };
      d.support = { { -inf, 0.0 }, { 0.0, inf } };
      d.symmetric = true;
      d.origin_exponent = a;
    } else if (is<CauchyProcess>()) {
      d.eval = [](double x) { return 1.0 / (pi * x * x); };
      d.support = { { -inf, 0.0 }, { 0.0, inf } };
      d.symmetric = true;
      d.origin_exponent = 1.0;
    } else if (is<InverseGaussian>()) {
      d.eval = [](double x) { return std::exp(-x) * std::pow(x, -1.5); };
      d.support = { { 0.0, inf } };
      d.origin_exponent = 0.5;
    } else {
      d = std::get<CustomDensity>(family_).f;
    }
    // the origin itself is never charged
    auto inner = d.eval;
    d.eval = [inner](double x) { return x == 0.0 ? 0.0 : inner(x); };
    return d;
  }

private:
  explicit LevyModel(Family f)
    : family_(std::move(f))
  {}
  Family family_;
  double sigma_ = 0.0;
};

//! A(eps) = (-a_bar, -eps] U [eps, a_bar).
struct TruncationGeometry
{
  double eps;
  double a_bar = 10.0;

  void validate(const LevyModel& model) const
  {
    if (!(eps >= 0) || !std::isfinite(eps))
      throw DomainError("eps must be finite and nonnegative");
    if (!(a_bar > eps))
      throw DomainError("a_bar must exceed eps");
    if (eps == 0.0 && !model.finite_measure())
      throw DomainError("eps=0 requires finite Levy measure");
    if (std::isinf(a_bar) && !model.finite_measure())
      throw DomainError("a_bar = inf is only permitted for compound Poisson models");
  }
  bool in_set(double x) const
  {
    double ax = std::abs(x);
    if (ax < eps || ax >= a_bar)
      return false;
    return eps > 0.0 || x != 0.0;
  }
};

namespace model_detail {

// Integral of g over [a, b]; origin_power is the exponent e with
// g(x) ~ |x|^e at 0, used to pick a smoothing substitution.
inline double integrate_piece(const std::function<double(double)>& g,
                              double a,
                              double b,
                              double origin_power,
                              const QuadratureOptions& opts)
{
  if (!(b > a))
    return 0.0;
  if (b <= 0.0) {
    auto r = [&](double x) { return g(-x); };
    return integrate_piece(r, -b, -a, origin_power, opts);
  }
  if (a < 0.0)
    return integrate_piece(g, a, 0.0, origin_power, opts) +
           integrate_piece(g, 0.0, b, origin_power, opts);
  if (std::isinf(b)) {
    if (a == 0.0)
      return integrate_piece(g, 0.0, 1.0, origin_power, opts) +
             integrate_upper(g, 1.0, opts).value;
    return integrate_upper(g, a, opts).value;
  }
  if (a == 0.0 && origin_power < 0.0) {
    if (origin_power <= -1.0)
      throw IntegrationFailure("integrand not integrable at the origin", inf, inf);
    return integrate_from_zero(g, b, 1.0 / (origin_power + 1.0), opts).value;
  }
  return integrate(g, a, b, opts).value;
}

// Integral of w(x) f(x) over {lo < |x| <= hi} restricted to supp f.
// power is the exponent of |w| near 0.
inline double integrate_band(const Density1D& f,
                             const std::function<double(double)>& w,
                             double lo,
                             double hi,
                             double power,
                             const QuadratureOptions& opts = {})
{
  auto g = [&](double x) { return w(x) * f.eval(x); };
  double e = power - 1.0 - f.origin_exponent;
  double total = 0.0;
  for (const auto& iv : f.support) {
    if (iv.lo == iv.hi)
      continue;
    // positive side (lo, hi]
    total += integrate_piece(g, std::max(iv.lo, lo), std::min(iv.hi, hi), e, opts);
    // negative side [-hi, -lo)
    total += integrate_piece(g, std::max(iv.lo, -hi), std::min(iv.hi, -lo), e, opts);
  }
  return total;
}

} // namespace model_detail

//! Levy density f(x); compound Poisson includes the intensity factor.
inline double levy_density(const LevyModel& model, double x)
{
  return model.levy_density()(x);
}

//! lambda_eps = nu({|x| > eps}).
inline double tail_mass(const LevyModel& model, double eps)
{
  if (!(eps >= 0) || std::isnan(eps))
    throw DomainError("tail_mass: eps must be nonnegative");
  if (eps == 0.0 && !model.finite_measure())
    throw DomainError("tail_mass: eps=0 requires finite Levy measure");
  if (std::isinf(eps))
    return 0.0;
  if (auto c = std::get_if<CompoundPoisson>(&model.family())) {
    if (c->atom)
      return std::abs(*c->atom) > eps ? c->intensity : 0.0;
    if (eps == 0.0)
      return c->intensity;
  }
  if (model.is<CauchyProcess>())
    return 2.0 / (pi * eps);
  if (auto s = std::get_if<SymmetricStable>(&model.family()))
    return 2.0 * std::pow(eps, -s->alpha) / s->alpha;
  if (model.is<GammaProcess>())
    return special::expint_e1(eps);
  auto f = model.levy_density();
  auto one = [](double) { return 1.0; };
  if (eps == 0.0)
    return model_detail::integrate_band(f, one, 0.0, inf, 0.0);
  return model_detail::integrate_band(f, one, eps, inf, 0.0);
}

//! mu_p(eps) = int_{|x| <= eps} |x|^p nu(dx).
inline double truncated_p_moment(const LevyModel& model, double eps, double p)
{
  if (!(eps > 0))
    throw DomainError("truncated_p_moment: eps must be positive");
  if (!(p >= 1.0))
    throw DomainError("truncated_p_moment: p must be >= 1");
  if (auto s = std::get_if<SymmetricStable>(&model.family())) {
    if (p <= s->alpha)
      throw DomainError("truncated_p_moment: p must exceed alpha");
    return 2.0 * std::pow(eps, p - s->alpha) / (p - s->alpha);
  }
  if (model.is<CauchyProcess>())
    return 2.0 * std::pow(eps, p - 1.0) / (pi * (p - 1.0));
  if (auto c = std::get_if<CompoundPoisson>(&model.family()); c && c->atom) {
    double a = std::abs(*c->atom);
    return a <= eps ? c->intensity * std::pow(a, p) : 0.0;
  }
  auto f = model.levy_density();
  auto w = [p](double x) { return std::pow(std::abs(x), p); };
  if (f.origin_exponent >= p)
    throw DomainError("truncated_p_moment diverges at the origin");
  return model_detail::integrate_band(f, w, 0.0, eps, p);
}

//! sigma^2(eps) = int_{|x| <= eps} x^2 nu(dx).
inline double truncated_second_moment(const LevyModel& model, double eps)
{
  return truncated_p_moment(model, eps, 2.0);
}

//! Signed first moment int_{lo < |x| <= hi} x nu(dx).
inline double band_first_moment(const LevyModel& model, double lo, double hi)
{
  if (!(hi > lo))
    return 0.0;
  if (model.symmetric())
    return 0.0;
  if (auto c = std::get_if<CompoundPoisson>(&model.family()); c && c->atom) {
    double a = std::abs(*c->atom);
    return (a > lo && a <= hi) ? c->intensity * *c->atom : 0.0;
  }
  auto f = model.levy_density();
  auto w = [](double x) { return x; };
  if (lo == 0.0 && f.origin_exponent >= 1.0)
    throw DomainError("first moment diverges at the origin (infinite variation)");
  return model_detail::integrate_band(f, w, lo, hi, 1.0);
}

//! Drift b_nu(eps) of the Levy-Ito split X = t b + M(eps) + Z(eps).
inline double drift_b(const LevyModel& model, double eps)
{
  if (!(eps > 0))
    throw DomainError("drift_b: eps must be positive");
  if (model.symmetric())
    return 0.0;
  if (model.variation() == Variation::finite)
    return band_first_moment(model, 0.0, eps);
  return -band_first_moment(model, std::min(eps, 1.0), std::max(eps, 1.0));
}

//! h_eps = f 1_{|x| > eps} / lambda_eps.
inline Density1D big_jump_density(const LevyModel& model, double eps)
{
  double lam = tail_mass(model, eps);
  if (!(lam > 0))
    throw DomainError("no jumps above eps: lambda_eps = 0");
  auto f = model.levy_density();
  Density1D h;
  auto base = f.eval;
  h.eval = [base, lam, eps](double x) {
    return (std::abs(x) > eps && x != 0.0) ? base(x) / lam : 0.0;
  };
  for (const auto& iv : f.support) {
    if (iv.hi > eps)
      h.support.push_back({ std::max(iv.lo, eps), iv.hi });
    if (iv.lo < -eps)
      h.support.push_back({ iv.lo, std::min(iv.hi, -eps) });
  }
  std::sort(h.support.begin(), h.support.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  h.symmetric = f.symmetric;
  return h;
}

//! F_Delta(eps) = P(|X_Delta| > eps) from the exact marginal law.
inline double exact_exceedance_prob(const LevyModel& model, double delta, double eps)
{
  if (!(delta > 0) || !(eps >= 0))
    throw DomainError("exact_exceedance_prob: need delta > 0, eps >= 0");
  if (model.sigma() > 0.0)
    throw NotAvailable("no closed-form marginal with a Brownian component");
  if (std::isinf(eps))
    return 0.0;
  if (model.is<CauchyProcess>())
    return eps == 0.0 ? 1.0 : (2.0 / pi) * std::atan(delta / eps);
  if (auto s = std::get_if<SymmetricStable>(&model.family()); s && s->alpha == 1.0)
    return eps == 0.0 ? 1.0 : (2.0 / pi) * std::atan(pi * delta / eps);
  if (model.is<GammaProcess>())
    return eps == 0.0 ? 1.0 : special::gamma_q(delta, eps);
  if (model.is<InverseGaussian>()) {
    if (eps == 0.0)
      return 1.0;
    double c = delta * std::exp(2.0 * delta * std::sqrt(pi));
    double pd2 = pi * delta * delta;
    auto dens = [=](double x) { return c * std::pow(x, -1.5) * std::exp(-x - pd2 / x); };
    return integrate_upper(dens, eps, model_detail::tight()).value;
  }
  if (auto c = std::get_if<CompoundPoisson>(&model.family())) {
    double p_jump = -std::expm1(-c->intensity * delta);
    if (eps == 0.0)
      return c->atom && *c->atom == 0.0 ? 0.0 : p_jump;
    bool all_pos = true, all_neg = true;
    for (const auto& iv : c->jumps.support) {
      all_pos = all_pos && iv.lo > eps;
      all_neg = all_neg && iv.hi < -eps;
    }
    if (all_pos || all_neg)
      return p_jump;
    throw NotAvailable("compound Poisson exceedance with eps > 0 needs one-signed "
                       "jumps beyond eps; use simulation");
  }
  throw NotAvailable("no closed-form marginal for family " + model.name() +
                     "; use Monte Carlo via simulate");
}

} // namespace levyest
