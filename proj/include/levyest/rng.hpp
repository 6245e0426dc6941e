#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace levyest {

//! Philox4x32-10 block function (Salmon et al., Random123).
inline std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                          std::array<uint32_t, 2> key)
{
  constexpr uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    uint64_t p0 = uint64_t(M0) * ctr[0];
    uint64_t p1 = uint64_t(M1) * ctr[2];
    uint32_t hi0 = uint32_t(p0 >> 32), lo0 = uint32_t(p0);
    uint32_t hi1 = uint32_t(p1 >> 32), lo1 = uint32_t(p1);
    ctr = { hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0 };
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

//! What a stream is used for. Brownian terms get their own stream so that
//! adding sigma > 0 leaves the jump draws untouched.
enum class StreamPurpose : uint16_t
{
  jumps = 0,
  brownian = 1,
  auxiliary = 2,
};

//! Counter-based stream. The master seed is the key; the upper counter half
//! identifies (replicate, cell, purpose) and the lower half counts blocks,
//! so any stream can be created anywhere without coordination.
class RandomStream
{
public:
  RandomStream(uint64_t seed,
               uint32_t replicate,
               uint16_t cell = 0,
               StreamPurpose purpose = StreamPurpose::jumps)
    : key_{ uint32_t(seed), uint32_t(seed >> 32) }
    , id_hi_(replicate)
    , id_lo_((uint32_t(cell) << 16) | uint32_t(purpose))
  {}

  uint32_t next_u32()
  {
    if (pos_ == 4) {
      buf_ = philox4x32({ uint32_t(block_), uint32_t(block_ >> 32), id_lo_, id_hi_ },
                        key_);
      ++block_;
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  uint64_t next_u64()
  {
    uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  //! Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform()
  {
    return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  uint64_t blocks_used() const { return block_; }

private:
  std::array<uint32_t, 2> key_;
  uint32_t id_hi_;
  uint32_t id_lo_;
  uint64_t block_ = 0;
  std::array<uint32_t, 4> buf_{};
  int pos_ = 4;
};

namespace sampling {

constexpr double pi = 3.14159265358979323846;

//! Box-Muller, one normal per pair of uniforms (no cached state).
inline double normal(RandomStream& rng)
{
  double u1 = rng.uniform(), u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
}

inline double exponential(RandomStream& rng)
{
  return -std::log(rng.uniform());
}

//! Standard Cauchy by inversion.
inline double cauchy(RandomStream& rng)
{
  return std::tan(pi * (rng.uniform() - 0.5));
}

//! log of a Gamma(shape, 1) draw; Marsaglia-Tsang with the U^{1/a} boost
//! kept in log space so tiny shapes do not underflow.
inline double log_gamma_variate(RandomStream& rng, double shape)
{
  double boost = 0.0;
  if (shape < 1.0) {
    boost = std::log(rng.uniform()) / shape;
    shape += 1.0;
  }
  double d = shape - 1.0 / 3.0, c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x ||
        std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return std::log(d * v) + boost;
  }
}

inline double gamma(RandomStream& rng, double shape)
{
  return std::exp(log_gamma_variate(rng, shape));
}

//! Poisson: inversion for small means, PTRS (Hormann 1993) otherwise.
inline uint64_t poisson(RandomStream& rng, double mean)
{
  if (mean <= 0.0)
    return 0;
  if (mean < 10.0) {
    double u = rng.uniform();
    double p = std::exp(-mean), cdf = p;
    uint64_t k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      p *= mean / double(k);
      cdf += p;
      if (p == 0.0)
        break;
    }
    return k;
  }
  double slam = std::sqrt(mean), loglam = std::log(mean);
  double b = 0.931 + 2.53 * slam;
  double a = -0.059 + 0.02483 * b;
  double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    double U = rng.uniform() - 0.5;
    double V = rng.uniform();
    double us = 0.5 - std::abs(U);
    double k = std::floor((2.0 * a / us + b) * U + mean + 0.43);
    if (us >= 0.07 && V <= vr)
      return uint64_t(k);
    if (k < 0.0 || (us < 0.013 && V > us))
      continue;
    if (std::log(V) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0))
      return uint64_t(k);
  }
}

//! Symmetric alpha-stable with characteristic function exp(-|u|^alpha),
//! Chambers-Mallows-Stuck.
inline double symmetric_stable(RandomStream& rng, double alpha)
{
  double v = pi * (rng.uniform() - 0.5);
  if (alpha == 1.0)
    return std::tan(v);
  double w = exponential(rng);
  return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
}

//! Inverse Gaussian IG(mean mu, shape lam), Michael-Schucany-Haas.
inline double inverse_gaussian(RandomStream& rng, double mu, double lam)
{
  double z = normal(rng);
  double y = z * z;
  double muy = mu * y;
  // smaller root via the product of roots (= mu^2), avoids cancellation
  double big = mu + mu * muy / (2.0 * lam) +
               mu / (2.0 * lam) * std::sqrt(4.0 * mu * lam * y + muy * muy);
  double x = mu * mu / big;
  if (rng.uniform() <= mu / (mu + x))
    return x;
  return mu * mu / x;
}

} // namespace sampling
} // namespace levyest
