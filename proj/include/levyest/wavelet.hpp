#pragma once

#include "errors.hpp"
#include "intensity.hpp"
#include "levy_models.hpp"
#include "simulate.hpp"
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

namespace levyest {

//! Daubechies reconstruction low-pass filters (sum = sqrt 2), N = 1..10.
inline const std::vector<double>& daubechies_filter(int order)
{
  static const std::vector<std::vector<double>> filters = {
    { 0.70710678118654757, 0.70710678118654757 },
    { 0.48296291314453416, 0.83651630373780794, 0.22414386804201339, -0.12940952255126037 },
    { 0.33267055295008263, 0.80689150931109255, 0.45987750211849154, -0.13501102001025458,
      -0.085441273882026658, 0.035226291885709533 },
    { 0.23037781330889651, 0.71484657055291567, 0.63088076792985892, -0.027983769416859854,
      -0.18703481171909309, 0.030841381835560764, 0.032883011666885197, -0.010597401785069032 },
    { 0.16010239797419293, 0.60382926979718965, 0.72430852843777294, 0.13842814590132074,
      -0.24229488706638203, -0.032244869584638375, 0.077571493840045719,
      -0.0062414902127982744, -0.012580751999081999, 0.0033357252854737712 },
    { 0.11154074335010947, 0.49462389039845306, 0.75113390802109536, 0.31525035170919763,
      -0.22626469396543983, -0.12976686756726194, 0.097501605587323043, 0.027522865530305727,
      -0.03158203931748603, 0.00055384220116149613, 0.0047772575109455108,
      -0.0010773010853084796 },
    { 0.077852054085009184, 0.39653931948191729, 0.72913209084623509, 0.46978228740519312,
      -0.14390600392856498, -0.22403618499387498, 0.071309219266830259, 0.080612609151083078,
      -0.038029936935014413, -0.016574541630666881, 0.01255099855609984,
      0.00042957797292136651, -0.0018016407040474908, 0.00035371379997452024 },
    { 0.054415842243104008, 0.31287159091429995, 0.67563073629728976, 0.58535468365420673,
      -0.015829105256349306, -0.28401554296154691, 0.00047248457391328279,
      0.12874742662047847, -0.017369301001807547, -0.044088253930794755,
      0.013981027917398282, 0.0087460940474057766, -0.0048703529934515741,
      -0.00039174037337694705, 0.00067544940645056933, -0.00011747678412476953 },
    { 0.038077947363878345, 0.24383467461259034, 0.60482312369011115, 0.65728807805130052,
      0.13319738582500756, -0.29327378327917492, -0.096840783222976456,
      0.14854074933810638, 0.03072568147933338, -0.067632829061329974,
      0.00025094711483145197, 0.022361662123679096, -0.0047232047577513972,
      -0.0042815036824634303, 0.0018476468830562265, 0.00023038576352319597,
      -0.00025196318894271012, 3.9347320316271603e-05 },
    { 0.026670057900555554, 0.1881768000776915, 0.52720118893172563, 0.68845903945360354,
      0.28117234366057747, -0.24984642432731538, -0.19594627437737705,
      0.12736934033579325, 0.093057364603572348, -0.071394147166397082,
      -0.029457536821875813, 0.033212674059341002, 0.0036065535669561697,
      -0.010733175483330575, 0.0013953517470529011, 0.0019924052951850561,
      -0.00068585669495971162, -0.00011646685512928545, 9.3588670320069592e-05,
      -1.3264202894521244e-05 },
  };
  if (order < 1 || order > 10)
    throw DomainError("wavelet order must be in 1..10");
  return filters[order - 1];
}

//! Hoelder exponent of the order-N Daubechies scaling function (N >= 2,
//! Rioul's estimates; Haar is discontinuous).
inline double daubechies_regularity(int order)
{
  static const double r[] = { 0.0, 0.55, 1.08, 1.62, 1.97, 2.19, 2.46, 2.76, 3.07, 3.36 };
  daubechies_filter(order);
  return r[order - 1];
}

//! Smallest order whose regularity exceeds s (capped at 10).
inline int order_for_smoothness(double s)
{
  for (int n = 2; n <= 10; ++n)
    if (daubechies_regularity(n) > s)
      return n;
  return 10;
}

//! Phi and Psi sampled on the dyadic grid i 2^{-D} over [0, 2N-1].
class ScalingTable
{
public:
  ScalingTable(int order, int depth)
    : order_(order)
    , depth_(depth)
  {
    if (depth < 10 || depth > 20)
      throw DomainError("table depth must be in 10..20");
    const auto& h = daubechies_filter(order);
    len_ = 2 * order - 1;
    if (order == 1)
      return; // Haar is evaluated exactly
    std::size_t scale = std::size_t(1) << depth;
    std::size_t size = std::size_t(len_) * scale + 1;
    phi_.assign(size, 0.0);
    psi_.assign(size, 0.0);
    const double r2 = std::sqrt(2.0);

    // values at the interior integers: eigenvector of M_ij = sqrt2 h_{2i-j}
    // for eigenvalue 1, normalized to sum 1
    int m = len_ - 1;
    std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0.0));
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        int idx = 2 * (i + 1) - (j + 1);
        a[i][j] = (idx >= 0 && idx <= len_ ? r2 * h[idx] : 0.0) - (i == j ? 1.0 : 0.0);
      }
    }
    for (int j = 0; j < m; ++j)
      a[m - 1][j] = 1.0;
    a[m - 1][m] = 1.0;
    for (int c = 0; c < m; ++c) {
      int piv = c;
      for (int r = c + 1; r < m; ++r)
        if (std::abs(a[r][c]) > std::abs(a[piv][c]))
          piv = r;
      std::swap(a[c], a[piv]);
      for (int r = 0; r < m; ++r) {
        if (r == c)
          continue;
        double f = a[r][c] / a[c][c];
        for (int j = c; j <= m; ++j)
          a[r][j] -= f * a[c][j];
      }
    }
    for (int i = 0; i < m; ++i)
      phi_[std::size_t(i + 1) * scale] = a[i][m] / a[i][i];

    // two-scale refinement, one dyadic level at a time
    for (int level = 1; level <= depth; ++level) {
      std::size_t step = std::size_t(1) << (depth - level);
      for (std::size_t i = step; i < size; i += 2 * step)
        phi_[i] = refine(h, i, scale, false);
    }
    for (std::size_t i = 0; i < size; ++i)
      psi_[i] = refine(h, i, scale, true);
  }

  int order() const { return order_; }
  int depth() const { return depth_; }
  //! Support length 2N - 1.
  int length() const { return len_; }

  double phi(double y) const
  {
    if (order_ == 1)
      return (y >= 0.0 && y < 1.0) ? 1.0 : 0.0;
    return interp(phi_, y);
  }
  double psi(double y) const
  {
    if (order_ == 1) {
      if (y >= 0.0 && y < 0.5)
        return 1.0;
      return (y >= 0.5 && y < 1.0) ? -1.0 : 0.0;
    }
    return interp(psi_, y);
  }
  //! Raw node values (empty for Haar).
  const std::vector<double>& phi_nodes() const { return phi_; }
  const std::vector<double>& psi_nodes() const { return psi_; }

private:
  double refine(const std::vector<double>& h, std::size_t i, std::size_t scale, bool wavelet) const
  {
    // f(x) = sqrt2 sum_k c_k Phi(2x - k), 2x - k at index 2i - k 2^D
    double s = 0.0;
    for (int k = 0; k <= len_; ++k) {
      long long idx = 2 * (long long)i - (long long)k * (long long)scale;
      if (idx < 0 || idx >= (long long)phi_.size())
        continue;
      double c = wavelet ? ((k % 2 ? -1.0 : 1.0) * h[len_ - k]) : h[k];
      s += c * phi_[std::size_t(idx)];
    }
    return std::sqrt(2.0) * s;
  }
  double interp(const std::vector<double>& t, double y) const
  {
    if (!(y > 0.0) || !(y < len_))
      return 0.0;
    double u = std::ldexp(y, depth_);
    std::size_t i = std::size_t(u);
    double fr = u - double(i);
    if (i + 1 >= t.size())
      return t.back();
    return t[i] + fr * (t[i + 1] - t[i]);
  }

  int order_, depth_, len_ = 1;
  std::vector<double> phi_, psi_;
};

namespace wavelet_detail {

inline std::shared_ptr<const ScalingTable> shared_table(int order, int depth)
{
  static std::mutex mtx;
  static std::map<std::pair<int, int>, std::shared_ptr<const ScalingTable>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto& slot = cache[{ order, depth }];
  if (!slot)
    slot = std::make_shared<const ScalingTable>(order, depth);
  return slot;
}

// closed estimation region eps <= |x| <= a_bar; differs from A(eps) only on
// a null set, which keeps trapezoid endpoints consistent
inline bool in_region(const TruncationGeometry& g, double x)
{
  double ax = std::abs(x);
  return ax >= g.eps && ax <= g.a_bar;
}

// support [k, k + len] 2^{-j} meets A(eps)
inline bool support_meets(const TruncationGeometry& g, int j, long long k, int len)
{
  double a = std::ldexp(double(k), -j);
  double b = std::ldexp(double(k + len), -j);
  bool pos = b > g.eps && a < g.a_bar;
  bool neg = a < -g.eps && b > -g.a_bar;
  return pos || neg;
}

inline std::vector<long long> index_set(const TruncationGeometry& g, int j, int len)
{
  long long lo = (long long)std::floor(-std::ldexp(g.a_bar, j)) - len;
  long long hi = (long long)std::ceil(std::ldexp(g.a_bar, j));
  std::vector<long long> ks;
  for (long long k = lo; k <= hi; ++k)
    if (support_meets(g, j, k, len))
      ks.push_back(k);
  return ks;
}

} // namespace wavelet_detail

//! Scaling functions Phi_Jk = 2^{J/2} Phi(2^J x - k) for k in Lambda_J.
struct WaveletBasis
{
  int order = 0;
  int J = 0;
  std::shared_ptr<const ScalingTable> table;
  TruncationGeometry geometry{ 0.0 };
  std::vector<long long> lambda; //!< Lambda_J, ascending

  int support_length() const { return table->length(); }
  std::size_t size() const { return lambda.size(); }
  //! Position of k in lambda, or -1.
  long long position(long long k) const
  {
    if (lambda.empty() || k < lambda.front() || k > lambda.back())
      return -1;
    auto it = std::lower_bound(lambda.begin(), lambda.end(), k);
    return (it != lambda.end() && *it == k) ? it - lambda.begin() : -1;
  }
};

inline WaveletBasis build_basis(int order, int J, int depth, const TruncationGeometry& geometry)
{
  if (J < 0 || J > 30)
    throw DomainError("resolution J must be in 0..30");
  if (!(geometry.eps >= 0) || !(geometry.a_bar > geometry.eps))
    throw DomainError("invalid truncation geometry");
  if (std::isinf(geometry.a_bar))
    throw DomainError("the wavelet basis needs a finite a_bar; set it to the support bound");
  WaveletBasis b;
  b.order = order;
  b.J = J;
  b.table = wavelet_detail::shared_table(order, depth);
  b.geometry = geometry;
  b.lambda = wavelet_detail::index_set(geometry, J, b.table->length());
  return b;
}

//! 2^{J/2} Phi(2^J x - k); 0 outside the support.
inline double scaling_eval(const WaveletBasis& basis, int J, long long k, double x)
{
  return std::exp2(0.5 * J) * basis.table->phi(std::ldexp(x, J) - double(k));
}

//! 2^{j/2} Psi(2^j x - k).
inline double wavelet_eval(const WaveletBasis& basis, int j, long long k, double x)
{
  return std::exp2(0.5 * j) * basis.table->psi(std::ldexp(x, j) - double(k));
}

//! Linear estimator sum_k alpha_k Phi_Jk on A(eps), optionally scaled by
//! lambda_hat. Coefficients are stored without the 2^{J/2} factor so the
//! Haar case reproduces the histogram bit for bit.
class DensityEstimate
{
public:
  DensityEstimate() = default;
  DensityEstimate(WaveletBasis basis, std::vector<double> unnormalized)
    : basis_(std::move(basis))
    , c_(std::move(unnormalized))
  {
    if (c_.size() != basis_.size())
      throw DomainError("coefficient vector does not match Lambda_J");
  }

  static DensityEstimate from_alpha(const WaveletBasis& basis, const std::vector<double>& alpha)
  {
    std::vector<double> c(alpha.size());
    double s = std::exp2(-0.5 * basis.J);
    for (std::size_t i = 0; i < alpha.size(); ++i)
      c[i] = alpha[i] * s;
    return DensityEstimate(basis, std::move(c));
  }
  static DensityEstimate zero(const WaveletBasis& basis)
  {
    return DensityEstimate(basis, std::vector<double>(basis.size(), 0.0));
  }

  const WaveletBasis& basis() const { return basis_; }
  std::vector<double> alpha_hat() const
  {
    std::vector<double> a(c_);
    double s = std::exp2(0.5 * basis_.J);
    for (auto& v : a)
      v *= s;
    return a;
  }
  const std::vector<double>& unnormalized() const { return c_; }
  const std::optional<double>& lambda_scale() const { return lambda_; }
  void set_lambda_scale(double l) { lambda_ = l; }
  bool clipped() const { return clip_; }
  void set_clip(bool c) { clip_ = c; }

  double operator()(double x) const
  {
    if (!wavelet_detail::in_region(basis_.geometry, x))
      return 0.0;
    const auto& t = *basis_.table;
    double y = std::ldexp(x, basis_.J);
    long long top = (long long)std::floor(y);
    double s = 0.0;
    for (long long k = top - t.length() + 1; k <= top; ++k) {
      long long p = basis_.position(k);
      if (p >= 0 && c_[p] != 0.0)
        s += c_[p] * t.phi(y - double(k));
    }
    double v = std::ldexp(s, basis_.J);
    if (lambda_)
      v = *lambda_ * v;
    return clip_ ? std::max(v, 0.0) : v;
  }
  std::vector<double> evaluate(const std::vector<double>& xs) const
  {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      out[i] = (*this)(xs[i]);
    return out;
  }

private:
  WaveletBasis basis_;
  std::vector<double> c_;
  std::optional<double> lambda_;
  bool clip_ = false;
};

//! h_hat on A(eps) from the increments with |X_i| > eps.
inline DensityEstimate estimate_h(const IncrementSample& sample,
                                  const TruncationGeometry& geometry,
                                  const WaveletBasis& basis)
{
  if (geometry.eps != basis.geometry.eps || geometry.a_bar != basis.geometry.a_bar)
    throw DomainError("estimate_h: geometry differs from the basis geometry");
  const auto& t = *basis.table;
  std::vector<double> c(basis.size(), 0.0);
  std::size_t count = 0;
  for (double v : sample.values) {
    if (!(std::abs(v) > geometry.eps))
      continue;
    ++count;
    double y = std::ldexp(v, basis.J);
    long long top = (long long)std::floor(y);
    for (long long k = top - t.length() + 1; k <= top; ++k) {
      long long p = basis.position(k);
      if (p >= 0)
        c[p] += t.phi(y - double(k));
    }
  }
  if (count == 0)
    throw EmptySample("no increment exceeds eps; the estimator is 0");
  for (auto& v : c)
    v /= double(count);
  return DensityEstimate(basis, std::move(c));
}

//! f_hat = lambda_hat h_hat on A(eps).
inline DensityEstimate estimate_f(const IncrementSample& sample,
                                  const TruncationGeometry& geometry,
                                  const WaveletBasis& basis,
                                  const IntensityEstimate& intensity)
{
  DensityEstimate e = estimate_h(sample, geometry, basis);
  if (intensity.lambda_hat == 0.0)
    e = DensityEstimate::zero(basis);
  e.set_lambda_scale(intensity.lambda_hat);
  return e;
}

//! J = round(log2(n_eff)/(2s + 1)) clamped to [0, j_max].
inline int choose_J(double n_eff, double s, int j_max = 20)
{
  if (!(n_eff >= 1) || !(s > 0))
    throw DomainError("choose_J: need n_eff >= 1 and s > 0");
  long j = std::lround(std::log2(n_eff) / (2.0 * s + 1.0));
  return int(std::clamp<long>(j, 0, j_max));
}

namespace wavelet_detail {

// Coefficients int_{A(eps)} 2^{j/2} w(2^j x - k) g(x) dx of the tabulated
// (piecewise linear) w. Each unit cell [m, m+1] of the scaled axis is cut
// into the 2^D table cells; on a table cell w is linear, so the coefficient
// is sum_i w_i^+ I0_i + w_{i+1}^- I1_i with I0, I1 the integrals of g against
// the two hat pieces. These are computed once per unit cell (2-point Gauss,
// split at the edges of A and of supp g) and shared by every k using it.
class LevelProjector
{
public:
  LevelProjector(const Density1D& g, const WaveletBasis& basis, int j, bool wavelet)
    : g_(g)
    , basis_(basis)
    , j_(j)
    , wavelet_(wavelet)
  {
    const auto& geo = basis.geometry;
    for (double b : { -geo.a_bar, -geo.eps, geo.eps, geo.a_bar })
      cuts_.push_back(b);
    for (const auto& iv : g.support)
      for (double b : { iv.lo, iv.hi })
        if (std::isfinite(b))
          cuts_.push_back(b);
    std::sort(cuts_.begin(), cuts_.end());
    cuts_.erase(std::unique(cuts_.begin(), cuts_.end()), cuts_.end());
  }

  //! Call with ascending k.
  double coefficient(long long k)
  {
    const auto& t = *basis_.table;
    int len = t.length();
    std::size_t scale = std::size_t(1) << t.depth();
    const auto& nodes = wavelet_ ? t.psi_nodes() : t.phi_nodes();
    bool haar = t.order() == 1;
    while (!cells_.empty() && cells_.begin()->first < k)
      cells_.erase(cells_.begin());
    double s = 0.0;
    for (int c = 0; c < len; ++c) {
      const auto& cell = unit_cell(k + c);
      if (cell.i0.empty())
        continue;
      for (std::size_t i = 0; i < scale; ++i) {
        double lv, rv;
        if (haar) {
          lv = rv = (wavelet_ && 2 * i >= scale) ? -1.0 : 1.0;
        } else {
          lv = nodes[c * scale + i];
          rv = nodes[c * scale + i + 1];
        }
        s += lv * cell.i0[i] + rv * cell.i1[i];
      }
    }
    return std::exp2(0.5 * j_) * s;
  }

private:
  struct Cell
  {
    std::vector<double> i0, i1;
  };

  bool in_a(double x) const
  {
    double ax = std::abs(x);
    return ax > basis_.geometry.eps && ax < basis_.geometry.a_bar;
  }

  const Cell& unit_cell(long long m)
  {
    auto it = cells_.find(m);
    if (it != cells_.end())
      return it->second;
    Cell& cell = cells_[m];
    int depth = basis_.table->depth();
    std::size_t scale = std::size_t(1) << depth;
    double x0 = std::ldexp(double(m), -j_), x1 = std::ldexp(double(m + 1), -j_);
    // skip cells that miss A or supp g
    bool meets = false;
    for (const auto& iv : g_.support)
      meets |= iv.hi > x0 && iv.lo < x1;
    double xa = std::max(x0, -basis_.geometry.a_bar), xb = std::min(x1, basis_.geometry.a_bar);
    if (!meets || !(xb > xa) || (x0 >= -basis_.geometry.eps && x1 <= basis_.geometry.eps))
      return cell;
    cell.i0.assign(scale, 0.0);
    cell.i1.assign(scale, 0.0);
    const double gn = 0.5 / std::sqrt(3.0);
    double hx = std::ldexp(1.0, -(j_ + depth));
    auto cut = std::upper_bound(cuts_.begin(), cuts_.end(), x0);
    for (std::size_t i = 0; i < scale; ++i) {
      double a = x0 + double(i) * hx, b = a + hx;
      // pieces of [a, b] between breakpoints, in local coordinate u
      double ua = 0.0;
      for (;;) {
        double ub = 1.0;
        bool split = cut != cuts_.end() && *cut < b;
        if (split)
          ub = std::clamp((*cut - a) / hx, ua, 1.0);
        double um = 0.5 * (ua + ub), w = ub - ua;
        if (w > 0 && in_a(a + um * hx)) {
          for (double sgn : { -1.0, 1.0 }) {
            double u = um + sgn * gn * w;
            double gv = g_(a + u * hx) * 0.5 * w * hx;
            cell.i0[i] += (1.0 - u) * gv;
            cell.i1[i] += u * gv;
          }
        }
        if (!split)
          break;
        ua = ub;
        ++cut;
      }
    }
    return cell;
  }

  const Density1D& g_;
  const WaveletBasis& basis_;
  int j_;
  bool wavelet_;
  std::vector<double> cuts_;
  std::map<long long, Cell> cells_;
};

} // namespace wavelet_detail

//! alpha_Jk(g) = int_{A(eps)} Phi_Jk g, one per k in Lambda_J.
inline std::vector<double> exact_coefficients(const Density1D& g, const WaveletBasis& basis)
{
  std::vector<double> alpha(basis.size());
  wavelet_detail::LevelProjector proj(g, basis, basis.J, false);
  for (std::size_t i = 0; i < basis.size(); ++i)
    alpha[i] = proj.coefficient(basis.lambda[i]);
  return alpha;
}

//! Detail coefficients beta_jk(g) over the level-j index set.
inline std::vector<double> detail_coefficients(const Density1D& g, const WaveletBasis& basis, int j)
{
  auto ks = wavelet_detail::index_set(basis.geometry, j, basis.table->length());
  std::vector<double> beta(ks.size());
  wavelet_detail::LevelProjector proj(g, basis, j, true);
  for (std::size_t i = 0; i < ks.size(); ++i)
    beta[i] = proj.coefficient(ks[i]);
  return beta;
}

//! Besov norm with the detail sum stopped at j_max; q = inf allowed.
inline double besov_norm_truncated(const Density1D& g,
                                   const WaveletBasis& basis,
                                   double s,
                                   double p,
                                   double q,
                                   int j_max)
{
  if (!(p >= 1) || !(q >= 1) || !(s > 0))
    throw DomainError("besov_norm_truncated: need s > 0, p >= 1, q >= 1");
  auto lp = [p](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v)
      acc += std::pow(std::abs(x), p);
    return std::pow(acc, 1.0 / p);
  };
  double head = lp(exact_coefficients(g, basis));
  double tail = 0.0;
  for (int j = basis.J; j <= j_max; ++j) {
    double term = std::exp2(j * (s + 0.5 - 1.0 / p)) * lp(detail_coefficients(g, basis, j));
    if (std::isinf(q))
      tail = std::max(tail, term);
    else
      tail += std::pow(term, q);
  }
  if (!std::isinf(q))
    tail = std::pow(tail, 1.0 / q);
  return head + tail;
}

//! m midpoints split across the two components of A(eps), ascending.
inline std::vector<double> estimation_grid(const TruncationGeometry& geometry, std::size_t m)
{
  if (m < 2 || std::isinf(geometry.a_bar))
    throw DomainError("estimation_grid: need m >= 2 and finite a_bar");
  std::size_t pos = (m + 1) / 2, neg = m / 2;
  double w = geometry.a_bar - geometry.eps;
  std::vector<double> xs;
  xs.reserve(m);
  for (std::size_t i = neg; i-- > 0;)
    xs.push_back(-geometry.eps - w * (double(i) + 0.5) / double(neg));
  for (std::size_t i = 0; i < pos; ++i)
    xs.push_back(geometry.eps + w * (double(i) + 0.5) / double(pos));
  return xs;
}

//! CSV `x,value` at the given abscissae.
inline void write_density_csv(std::ostream& os, const DensityEstimate& est, const std::vector<double>& xs)
{
  os << "schema_version," << csv_schema_version << "\n";
  os << "x,value\n";
  for (double x : xs)
    os << format_double(x) << "," << format_double(est(x)) << "\n";
}

} // namespace levyest
