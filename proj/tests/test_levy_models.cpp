#include <boost/math/distributions/inverse_gaussian.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <gtest/gtest.h>
#include <levyest/levy_models.hpp>

using namespace levyest;

namespace {

// forces the generic quadrature path with the Cauchy Levy density
LevyModel cauchy_by_quadrature()
{
  Density1D f;
  f.eval = [](double x) { return 1.0 / (pi * x * x); };
  f.support = { { -inf, 0.0 }, { 0.0, inf } };
  f.origin_exponent = 1.0;
  return LevyModel::custom(f, false, false);
}

double ig_tail_closed_form(double eps)
{
  return 2.0 * std::exp(-eps) / std::sqrt(eps) -
         2.0 * std::sqrt(pi) * std::erfc(std::sqrt(eps));
}

std::vector<LevyModel> all_families()
{
  return { LevyModel::compound_poisson(2.0, truncated_normal_density(0.5, 1.0, -5, 5)),
           LevyModel::gamma(),
           LevyModel::stable(0.5),
           LevyModel::stable(1.5),
           LevyModel::cauchy(),
           LevyModel::inverse_gaussian() };
}

} // namespace

TEST(TailMass, SpecExamples)
{
  EXPECT_NEAR(tail_mass(LevyModel::cauchy(), 0.5), 4.0 / pi, 1e-15);
  EXPECT_EQ(tail_mass(LevyModel::compound_poisson(3.0, uniform_density(1, 2)), 0.0), 3.0);
  EXPECT_NEAR(tail_mass(LevyModel::gamma(), 1.0), boost::math::expint(1, 1.0), 1e-13);
  EXPECT_NEAR(tail_mass(LevyModel::gamma(), 1.0), 0.219384, 1e-6);
}

TEST(TailMass, QuadratureAgreesWithCauchyClosedForm)
{
  auto q = cauchy_by_quadrature();
  for (double eps : { 0.1, 0.5, 1.0, 5.0 }) {
    double exact = 2.0 / (pi * eps);
    EXPECT_NEAR(tail_mass(q, eps), exact, 1e-8 * exact) << eps;
  }
}

TEST(TailMass, InverseGaussianAgainstIncompleteGammaForm)
{
  // int_eps^inf e^{-x} x^{-3/2} dx = Gamma(-1/2, eps)
  for (double eps : { 1e-3, 0.1, 0.5, 1.0, 4.0 }) {
    double exact = ig_tail_closed_form(eps);
    EXPECT_NEAR(tail_mass(LevyModel::inverse_gaussian(), eps), exact, 1e-8 * exact) << eps;
  }
}

TEST(TailMass, StableClosedForm)
{
  EXPECT_NEAR(tail_mass(LevyModel::stable(0.5), 1.0), 4.0, 1e-15);
  EXPECT_NEAR(tail_mass(LevyModel::stable(1.5), 0.25), 2.0 * std::pow(0.25, -1.5) / 1.5,
              1e-12);
}

TEST(TailMass, CompoundPoissonPartialTail)
{
  auto m = LevyModel::compound_poisson(2.0, uniform_density(-1.0, 3.0));
  // mass of {|x| > 0.5} under uniform(-1,3) = (0.5 + 2.5)/4
  EXPECT_NEAR(tail_mass(m, 0.5), 2.0 * 0.75, 1e-10);
}

TEST(TailMass, StrictlyDecreasingInEps)
{
  for (const auto& m : all_families()) {
    double prev = inf;
    for (int i = 0; i < 20; ++i) {
      double eps = 0.05 + 0.2 * i;
      if (m.is<CompoundPoisson>() && eps >= 5.0)
        break;
      double t = tail_mass(m, eps);
      EXPECT_LT(t, prev) << m.name() << " eps=" << eps;
      prev = t;
    }
  }
}

TEST(TailMass, Errors)
{
  EXPECT_THROW(tail_mass(LevyModel::gamma(), 0.0), DomainError);
  EXPECT_THROW(tail_mass(LevyModel::cauchy(), -1.0), DomainError);
}

TEST(Moments, SpecExamples)
{
  EXPECT_NEAR(truncated_second_moment(LevyModel::stable(1.0), 1.0), 2.0, 1e-15);
  EXPECT_NEAR(truncated_p_moment(LevyModel::stable(1.0), 1.0, 4.0), 2.0 / 3.0, 1e-15);
  // Gamma: int_0^eps x^{p-1} e^{-x} dx = lower incomplete gamma(p, eps)
  double s2 = boost::math::tgamma_lower(2.0, 0.1);
  EXPECT_NEAR(truncated_second_moment(LevyModel::gamma(), 0.1), s2, 1e-12);
  EXPECT_NEAR(s2, 0.0046788, 1e-7);
  double m3 = boost::math::tgamma_lower(3.0, 1.0);
  EXPECT_NEAR(truncated_p_moment(LevyModel::gamma(), 1.0, 3.0), m3, 1e-11);
  EXPECT_NEAR(m3, 2.0 - 5.0 / std::exp(1.0), 1e-15);
}

TEST(Moments, InverseGaussianAndFractionalPower)
{
  // int_0^eps x^{p-3/2} e^{-x} dx
  for (double p : { 1.0, 1.5, 2.0, 3.0 }) {
    double ref = boost::math::tgamma_lower(p - 0.5, 0.7);
    EXPECT_NEAR(truncated_p_moment(LevyModel::inverse_gaussian(), 0.7, p), ref, 1e-9 * ref)
      << p;
  }
}

TEST(Moments, CauchyByQuadratureMatchesClosedForm)
{
  auto q = cauchy_by_quadrature();
  EXPECT_NEAR(truncated_second_moment(q, 0.5), truncated_second_moment(LevyModel::cauchy(), 0.5),
              1e-10);
}

TEST(Moments, PEqualsTwoCoincides)
{
  for (const auto& m : all_families())
    EXPECT_EQ(truncated_p_moment(m, 0.3, 2.0), truncated_second_moment(m, 0.3)) << m.name();
}

TEST(Moments, MonotoneAndPowerInequality)
{
  for (const auto& m : all_families()) {
    double prev = 0.0;
    for (int i = 1; i <= 20; ++i) {
      double eps = 0.05 * i;
      double s2 = truncated_second_moment(m, eps);
      EXPECT_GE(s2, prev) << m.name();
      prev = s2;
      for (double p : { 2.5, 3.0, 4.0 })
        EXPECT_LE(truncated_p_moment(m, eps, p), std::pow(eps, p - 2.0) * s2 * (1 + 1e-9))
          << m.name() << " p=" << p;
    }
  }
}

TEST(Moments, SymmetricSecondMomentVanishesAtZero)
{
  for (auto m : { LevyModel::stable(1.5), LevyModel::cauchy() }) {
    double prev = inf, first = truncated_second_moment(m, 1.0);
    for (double eps : { 1.0, 0.1, 0.01, 1e-3, 1e-4, 1e-6 }) {
      double s = truncated_second_moment(m, eps);
      EXPECT_LT(s, prev);
      prev = s;
    }
    EXPECT_LT(prev, 1e-2 * first);
  }
}

TEST(Drift, Examples)
{
  EXPECT_EQ(drift_b(LevyModel::cauchy(), 1.0), 0.0);
  for (double eps : { 0.1, 1.0, 3.0 })
    EXPECT_EQ(drift_b(LevyModel::stable(1.5), eps), 0.0);
  EXPECT_NEAR(drift_b(LevyModel::gamma(), 1.0), 1.0 - std::exp(-1.0), 1e-12);
  // inverse Gaussian: int_0^eps x^{-1/2} e^{-x} dx
  EXPECT_NEAR(drift_b(LevyModel::inverse_gaussian(), 0.5),
              boost::math::tgamma_lower(0.5, 0.5), 1e-11);
}

TEST(Drift, CompoundPoissonSmallJumpsMean)
{
  // lambda * int_{|x|<=eps} x h(x) dx for uniform(0, 2), eps = 1: 1.5 * 0.25
  auto m = LevyModel::compound_poisson(1.5, uniform_density(0.0, 2.0));
  EXPECT_NEAR(drift_b(m, 1.0), 1.5 * 0.25, 1e-12);
}

TEST(Drift, InfiniteVariationUsesUnitBand)
{
  // asymmetric infinite-variation custom density x^{-2.5} on (0, inf)
  Density1D f;
  f.eval = [](double x) { return std::pow(x, -2.5); };
  f.support = { { 0.0, inf } };
  f.origin_exponent = 1.5;
  auto m = LevyModel::custom(f, false, false);
  EXPECT_EQ(drift_b(m, 1.0), 0.0);
  // -int_{0.25}^{1} x^{-1.5} dx = -(2/sqrt(0.25) - 2)
  EXPECT_NEAR(drift_b(m, 0.25), -2.0, 1e-10);
  EXPECT_NEAR(drift_b(m, 4.0), -(2.0 - 1.0), 1e-10);
}

TEST(Exceedance, SpecExamples)
{
  EXPECT_NEAR(exact_exceedance_prob(LevyModel::cauchy(), 0.01, 1.0),
              (2.0 / pi) * std::atan(0.01), 1e-16);
  // the quoted 6.36620e-3 is the first-order value (2/pi) Delta/eps
  EXPECT_NEAR(exact_exceedance_prob(LevyModel::cauchy(), 0.01, 1.0), 6.36599e-3, 1e-8);
  auto cp = LevyModel::compound_poisson(2.0, uniform_density(1, 2));
  EXPECT_NEAR(exact_exceedance_prob(cp, 0.1, 0.0), 1.0 - std::exp(-0.2), 1e-16);
  EXPECT_NEAR(exact_exceedance_prob(cp, 0.1, 0.0), 0.181269, 1e-6);
  // jumps all above eps
  EXPECT_NEAR(exact_exceedance_prob(cp, 0.1, 0.5), 1.0 - std::exp(-0.2), 1e-16);
}

TEST(Exceedance, GammaMatchesBoost)
{
  for (double d : { 1e-4, 1e-2, 0.5 })
    for (double eps : { 0.1, 0.5, 1.0, 3.0 }) {
      double ref = boost::math::gamma_q(d, eps);
      EXPECT_NEAR(exact_exceedance_prob(LevyModel::gamma(), d, eps), ref, 1e-11 * ref);
    }
}

TEST(Exceedance, InverseGaussianMatchesIgCdf)
{
  // X_Delta ~ IG(mean sqrt(pi) Delta, shape 2 pi Delta^2)
  for (double d : { 1e-3, 1e-2, 0.3 })
    for (double eps : { 0.1, 0.5, 1.0 }) {
      boost::math::inverse_gaussian_distribution<double> ig(std::sqrt(pi) * d,
                                                              2.0 * pi * d * d);
      double ref = cdf(complement(ig, eps));
      EXPECT_NEAR(exact_exceedance_prob(LevyModel::inverse_gaussian(), d, eps), ref,
                  1e-10 + 1e-8 * ref)
        << d << " " << eps;
    }
}

TEST(Exceedance, LargeEpsTendsToZero)
{
  for (const auto& m : { LevyModel::cauchy(), LevyModel::gamma(), LevyModel::inverse_gaussian() }) {
    EXPECT_LT(exact_exceedance_prob(m, 0.1, 1e3), 1e-4) << m.name();
    EXPECT_EQ(exact_exceedance_prob(m, 0.1, inf), 0.0);
  }
}

TEST(Exceedance, SmallDeltaLimit)
{
  // F_Delta(eps)/Delta -> lambda_eps, relative gap < 2% at Delta = 1e-3, eps = 1
  for (const auto& m : { LevyModel::cauchy(), LevyModel::gamma(), LevyModel::inverse_gaussian() }) {
    double ratio = exact_exceedance_prob(m, 1e-3, 1.0) / 1e-3 / tail_mass(m, 1.0);
    EXPECT_NEAR(ratio, 1.0, 0.02) << m.name();
  }
}

TEST(Exceedance, UnsupportedFamilies)
{
  EXPECT_THROW(exact_exceedance_prob(LevyModel::stable(0.5), 0.1, 1.0), NotAvailable);
  auto cp = LevyModel::compound_poisson(1.0, truncated_normal_density(0, 1, -5, 5));
  EXPECT_THROW(exact_exceedance_prob(cp, 0.1, 0.5), NotAvailable);
  EXPECT_THROW(exact_exceedance_prob(LevyModel::gamma().with_sigma(0.1), 0.1, 0.5),
               NotAvailable);
  // alpha = 1 stable is Cauchy with scale pi
  EXPECT_NEAR(exact_exceedance_prob(LevyModel::stable(1.0), 0.01, 1.0),
              (2.0 / pi) * std::atan(pi * 0.01), 1e-16);
}

TEST(Models, Invariants)
{
  EXPECT_THROW(LevyModel::stable(0.0), DomainError);
  EXPECT_THROW(LevyModel::stable(2.0), DomainError);
  for (auto m : { LevyModel::stable(0.7), LevyModel::cauchy() }) {
    auto f = m.levy_density();
    for (double x : { 1e-3, 0.3, 1.0, 7.5, 100.0 })
      EXPECT_EQ(f(x), f(-x));
  }
  EXPECT_EQ(LevyModel::stable(0.5).variation(), Variation::finite);
  EXPECT_EQ(LevyModel::stable(1.5).variation(), Variation::infinite);
  EXPECT_EQ(LevyModel::cauchy().variation(), Variation::infinite);
  EXPECT_EQ(LevyModel::gamma().variation(), Variation::finite);
}

TEST(Models, CustomNonIntegrableRejected)
{
  Density1D f;
  f.eval = [](double x) { return std::pow(std::abs(x), -3.5); };
  f.support = { { -inf, 0.0 }, { 0.0, inf } };
  f.origin_exponent = 2.5;
  EXPECT_THROW(LevyModel::custom(f, false, false), DomainError);
}

TEST(Geometry, Validation)
{
  auto g = LevyModel::gamma();
  TruncationGeometry bad{ 0.0, 10.0 };
  try {
    bad.validate(g);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_STREQ(e.what(), "eps=0 requires finite Levy measure");
  }
  EXPECT_THROW((TruncationGeometry{ 0.5, inf }.validate(g)), DomainError);
  EXPECT_THROW((TruncationGeometry{ 2.0, 1.0 }.validate(g)), DomainError);
  EXPECT_NO_THROW((TruncationGeometry{ 0.0, inf }.validate(
    LevyModel::compound_poisson(1.0, uniform_density(1, 2)))));
}

TEST(BigJumpDensity, NormalizedAndRestricted)
{
  auto m = LevyModel::gamma();
  auto h = big_jump_density(m, 0.5);
  EXPECT_EQ(h(0.3), 0.0);
  EXPECT_EQ(h(-1.0), 0.0);
  auto r = integrate_upper([&](double x) { return h(x); }, 0.5);
  EXPECT_NEAR(r.value, 1.0, 1e-9);
}
