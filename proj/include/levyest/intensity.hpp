#pragma once

#include "levy_models.hpp"
#include "simulate.hpp"
#include <cmath>
#include <cstddef>

namespace levyest {

struct IntensityEstimate
{
  double lambda_hat = 0.0;
  std::size_t exceed_count = 0;
  std::size_t sample_size = 0;
  double delta = 0.0;
  double eps = 0.0;
  int corrected_order = 1;

  //! F_hat = n(eps)/n.
  double exceedance_fraction() const
  {
    return sample_size ? double(exceed_count) / double(sample_size) : 0.0;
  }
  //! No exceedances: lambda_hat = 0 and the density estimators are 0.
  bool empty() const { return exceed_count == 0; }
};

//! n(eps) = #{i : |X_i| > eps}, strict inequality.
inline std::size_t count_exceedances(const IncrementSample& sample, double eps)
{
  if (!(eps >= 0))
    throw DomainError("count_exceedances: eps must be nonnegative");
  std::size_t k = 0;
  for (double v : sample.values)
    k += std::abs(v) > eps ? 1 : 0;
  return k;
}

//! lambda_hat = n(eps)/(n Delta).
inline IntensityEstimate lambda_hat(const IncrementSample& sample, double eps)
{
  if (sample.size() == 0 || !(sample.delta > 0))
    throw DomainError("lambda_hat: need n >= 1 and delta > 0");
  IntensityEstimate e;
  e.exceed_count = count_exceedances(sample, eps);
  e.sample_size = sample.size();
  e.delta = sample.delta;
  e.eps = eps;
  e.lambda_hat = double(e.exceed_count) / (double(e.sample_size) * e.delta);
  return e;
}

//! lambda~^K = (1/Delta) sum_{k=1}^K F_hat^k / k; K = 1 is lambda_hat.
inline IntensityEstimate corrected_lambda(const IncrementSample& sample, double eps, int K)
{
  if (K < 1)
    throw DomainError("corrected_lambda: K must be >= 1");
  IntensityEstimate e = lambda_hat(sample, eps);
  if (K == 1)
    return e;
  double F = e.exceedance_fraction(), pw = 1.0, sum = 0.0;
  for (int k = 1; k <= K; ++k) {
    pw *= F;
    sum += pw / k;
  }
  e.lambda_hat = sum / e.delta;
  e.corrected_order = K;
  return e;
}

//! |lambda_eps - F_Delta(eps)/Delta|, deterministic.
inline double bias_term(const LevyModel& model, double delta, double eps)
{
  return std::abs(tail_mass(model, eps) - exact_exceedance_prob(model, delta, eps) / delta);
}

} // namespace levyest
