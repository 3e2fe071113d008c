#ifndef SEIARD_POSTERIOR_HPP
#define SEIARD_POSTERIOR_HPP

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "seiard/errors.hpp"

namespace seiard {

struct Hpdi {
  double alpha = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double mass_check = 0.0;  // fraction of samples inside [lo, hi]

  double width() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

namespace detail {

// ceil(alpha * n) that does not overshoot when alpha * n is an integer up to rounding
inline std::size_t window_count(double alpha, std::size_t n) {
  const double k = std::ceil(alpha * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, n);
}

}  // namespace detail

/// Shortest interval holding ceil(alpha * n) of the sorted samples; the
/// leftmost window wins ties.
inline Hpdi hpdi(std::span<const double> samples, double alpha) {
  if (samples.size() < 100) throw ContractError("hpdi needs at least 100 samples");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ContractError("hpdi alpha must lie in (0, 1)");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const std::size_t k = detail::window_count(alpha, x.size());

  std::size_t best = 0;
  double best_width = x[k - 1] - x[0];
  for (std::size_t i = 1; i + k <= x.size(); ++i) {
    const double w = x[i + k - 1] - x[i];
    if (w < best_width) {
      best_width = w;
      best = i;
    }
  }
  return {alpha, x[best], x[best + k - 1], static_cast<double>(k) / static_cast<double>(x.size())};
}

/// Empirical alpha-quantile with linear interpolation between order statistics
/// (position (n - 1) * alpha).
inline double loss_quantile(std::span<const double> values, double alpha) {
  if (values.empty()) throw ContractError("loss_quantile needs at least one value");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("quantile level must lie in [0, 1]");
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double h = static_cast<double>(x.size() - 1) * alpha;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

struct CorrelationMatrix {
  Eigen::MatrixXd rho;
  std::vector<bool> degenerate;  // zero-variance columns; their correlations are reported as 0
};

/// Pearson correlations between columns. `columns[j]` holds every draw of quantity j.
inline CorrelationMatrix correlation_matrix(const std::vector<std::vector<double>>& columns) {
  const std::size_t m = columns.size();
  if (m == 0) throw ContractError("correlation_matrix needs at least one column");
  const std::size_t n = columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != n) throw ContractError("correlation_matrix: ragged columns");
  }
  if (n < 100) throw ContractError("correlation_matrix needs at least 100 draws");

  std::vector<std::vector<double>> centered(m, std::vector<double>(n));
  std::vector<double> norm(m);
  CorrelationMatrix out{Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)),
                        std::vector<bool>(m, false)};
  for (std::size_t j = 0; j < m; ++j) {
    const double mu = std::accumulate(columns[j].begin(), columns[j].end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      centered[j][i] = columns[j][i] - mu;
      ss += centered[j][i] * centered[j][i];
    }
    norm[j] = std::sqrt(ss);
    out.degenerate[j] = !(norm[j] > 0.0);
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      double r = 0.0;
      if (!out.degenerate[a] && !out.degenerate[b]) {
        for (std::size_t i = 0; i < n; ++i) r += centered[a][i] * centered[b][i];
        r = std::clamp(r / (norm[a] * norm[b]), -1.0, 1.0);
      }
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      out.rho(ia, ib) = r;
      out.rho(ib, ia) = r;
    }
  }
  return out;
}

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> values;
  double bandwidth = 0.0;
};

/// Silverman's rule of thumb: 0.9 * min(sd, IQR / 1.34) * n^(-1/5).
inline double silverman_bandwidth(std::span<const double> x) {
  const auto n = static_cast<double>(x.size());
  const double mu = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mu) * (v - mu);
  const double sd = std::sqrt(ss / std::max(n - 1.0, 1.0));
  const double iqr = loss_quantile(x, 0.75) - loss_quantile(x, 0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  if (!(spread > 0.0)) spread = 1e-12 * std::max(1.0, std::abs(mu));
  return 0.9 * spread * std::pow(n, -0.2);
}

inline constexpr std::size_t kDensityGridPoints = 256;

/// Gaussian KDE on a 256-point grid spanning the samples +- 3 bandwidths.
/// A non-positive bandwidth selects Silverman's rule.
inline DensityCurve marginal_density(std::span<const double> draws, double bandwidth = 0.0) {
  if (draws.size() < 100) throw ContractError("marginal_density needs at least 100 draws");
  DensityCurve out;
  out.bandwidth = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(draws);
  const auto [mn, mx] = std::minmax_element(draws.begin(), draws.end());
  const double lo = *mn - 3.0 * out.bandwidth;
  const double hi = *mx + 3.0 * out.bandwidth;
  out.grid.resize(kDensityGridPoints);
  out.values.assign(kDensityGridPoints, 0.0);
  const double norm =
      1.0 / (static_cast<double>(draws.size()) * out.bandwidth * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t g = 0; g < kDensityGridPoints; ++g) {
    const double x = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(kDensityGridPoints - 1);
    out.grid[g] = x;
    double acc = 0.0;
    for (double d : draws) {
      const double z = (x - d) / out.bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    out.values[g] = acc * norm;
  }
  return out;
}

/// -log(density) pointwise, floored at 1e-12 of the peak density.
inline DensityCurve neg_log_density(const DensityCurve& curve) {
  DensityCurve out = curve;
  const double peak = curve.values.empty() ? 0.0 : *std::max_element(curve.values.begin(), curve.values.end());
  const double floor = std::max(peak * 1e-12, std::numeric_limits<double>::min());
  for (double& v : out.values) v = -std::log(std::max(v, floor));
  return out;
}

/// Piecewise-linear interpolation of (xs, ys) at x; clamps outside the range.
inline double interpolate(std::span<const double> xs, std::span<const double> ys, double x) {
  if (xs.empty()) throw ContractError("interpolate: empty curve");
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto j = static_cast<std::size_t>(it - xs.begin());
  const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return ys[j - 1] + t * (ys[j] - ys[j - 1]);
}

inline std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ContractError("pearson: need equal lengths >= 2");
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(std::span<const double> a, std::span<const double> b) {
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  return pearson(ra, rb);
}

/// Jaccard index |A n B| / |A u B| of two closed intervals.
inline double jaccard(double a_lo, double a_hi, double b_lo, double b_hi) {
  const double inter = std::max(0.0, std::min(a_hi, b_hi) - std::max(a_lo, b_lo));
  const double uni = std::max(a_hi, b_hi) - std::min(a_lo, b_lo);
  return uni > 0.0 ? inter / uni : 1.0;
}

}  // namespace seiard

#endif  // SEIARD_POSTERIOR_HPP
