#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/QR>

#include "seiard/posterior.hpp"
#include "seiard/random.hpp"

using namespace seiard;

namespace {

// Shortest closed interval [x_i, x_j] of the sorted draws holding at least
// ceil(alpha n) of them, leftmost on ties, by checking every pair.
std::pair<double, double> brute_force_hpdi(std::vector<double> x, double alpha) {
  std::sort(x.begin(), x.end());
  const auto need = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(x.size()) - 1e-9));
  double best_w = std::numeric_limits<double>::infinity();
  std::pair<double, double> best{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i; j < x.size(); ++j) {
      if (j - i + 1 < need) continue;
      if (x[j] - x[i] < best_w) {
        best_w = x[j] - x[i];
        best = {x[i], x[j]};
      }
      break;  // wider j only grows the width
    }
  }
  return best;
}

std::vector<double> normal_draws(std::size_t n, std::uint64_t seed, double mu = 0.0, double sd = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> z(mu, sd);
  std::vector<double> x(n);
  for (double& v : x) v = z(rng);
  return x;
}

}  // namespace

TEST(Hpdi, MatchesBruteForceOracle) {
  std::size_t cases = 0;
  for (std::size_t n : {100u, 101u, 257u, 999u, 2000u}) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      Rng rng(seed * 31 + n);
      std::gamma_distribution<double> g(2.0, 1.0);
      std::vector<double> x(n);
      for (double& v : x) v = std::round(g(rng) * 50.0) / 50.0;  // rounding forces ties
      for (double alpha : {0.5, 0.8, 0.95, 0.99}) {
        const Hpdi h = hpdi(x, alpha);
        const auto [lo, hi] = brute_force_hpdi(x, alpha);
        EXPECT_EQ(h.lo, lo) << n << " " << seed << " " << alpha;
        EXPECT_EQ(h.hi, hi) << n << " " << seed << " " << alpha;
        ++cases;
      }
    }
  }
  EXPECT_EQ(cases, 80u);
}

TEST(Hpdi, UniformGridLeftmostTie) {
  std::vector<double> x(1000);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = static_cast<double>(k);
  const Hpdi h = hpdi(x, 0.95);
  // 950 samples span 949 grid steps
  EXPECT_EQ(h.lo, 0.0);
  EXPECT_EQ(h.hi, 949.0);
  EXPECT_DOUBLE_EQ(h.mass_check, 0.95);
}

TEST(Hpdi, StandardNormal) {
  const Hpdi h = hpdi(normal_draws(100000, 4), 0.95);
  EXPECT_NEAR(h.lo, -1.96, 0.05);
  EXPECT_NEAR(h.hi, 1.96, 0.05);
  EXPECT_NEAR(h.mass_check, 0.95, 1.0 / std::sqrt(100000.0));
}

TEST(Hpdi, AllEqualIsZeroWidth) {
  const Hpdi h = hpdi(std::vector<double>(200, 3.5), 0.9);
  EXPECT_EQ(h.lo, 3.5);
  EXPECT_EQ(h.width(), 0.0);
}

TEST(Hpdi, WidthNonDecreasingInAlphaAndInsideRange) {
  const auto x = normal_draws(3000, 12, 1.0, 2.0);
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  double last = 0.0;
  for (double alpha = 0.05; alpha < 0.999; alpha += 0.05) {
    const Hpdi h = hpdi(x, alpha);
    EXPECT_GE(h.width(), last);
    EXPECT_GE(h.lo, *mn);
    EXPECT_LE(h.hi, *mx);
    last = h.width();
  }
}

TEST(Hpdi, ContractErrors) {
  EXPECT_THROW(hpdi(std::vector<double>(99, 1.0), 0.9), ContractError);
  EXPECT_THROW(hpdi(std::vector<double>(200, 1.0), 1.0), ContractError);
  EXPECT_THROW(hpdi(std::vector<double>(200, 1.0), 0.0), ContractError);
}

TEST(LossQuantile, LinearInterpolation) {
  std::vector<double> x(100);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = static_cast<double>(100 - k);  // unsorted input
  EXPECT_DOUBLE_EQ(loss_quantile(x, 0.95), 95.05);
  EXPECT_DOUBLE_EQ(loss_quantile(x, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(loss_quantile(x, 1.0), 100.0);
  EXPECT_EQ(loss_quantile(std::vector<double>(7, 2.5), 0.3), 2.5);
  EXPECT_EQ(loss_quantile(std::vector<double>{4.0}, 0.95), 4.0);
  EXPECT_THROW(loss_quantile(std::vector<double>{}, 0.5), ContractError);
}

TEST(Correlation, IndependentAndDuplicatedColumns) {
  const std::size_t n = 5000;
  const auto a = normal_draws(n, 1);
  const auto b = normal_draws(n, 2);
  const CorrelationMatrix c = correlation_matrix({a, b, a});
  EXPECT_LT(std::abs(c.rho(0, 1)), 3.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_DOUBLE_EQ(c.rho(0, 2), 1.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(c.rho(i, i), 1.0);
    for (int j = 0; j < 3; ++j) EXPECT_EQ(c.rho(i, j), c.rho(j, i));
  }
  for (bool d : c.degenerate) EXPECT_FALSE(d);
}

TEST(Correlation, ConstantColumnIsFlagged) {
  const auto a = normal_draws(200, 3);
  const CorrelationMatrix c = correlation_matrix({a, std::vector<double>(200, 1.0)});
  EXPECT_TRUE(c.degenerate[1]);
  EXPECT_FALSE(c.degenerate[0]);
  EXPECT_EQ(c.rho(0, 1), 0.0);
  EXPECT_THROW(correlation_matrix({std::vector<double>(50, 1.0)}), ContractError);
}

TEST(Density, IntegratesToOneAndSpansThreeBandwidths) {
  const auto x = normal_draws(2000, 5);
  const DensityCurve d = marginal_density(x);
  ASSERT_EQ(d.grid.size(), kDensityGridPoints);
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  EXPECT_DOUBLE_EQ(d.grid.front(), *mn - 3.0 * d.bandwidth);
  EXPECT_NEAR(d.grid.back(), *mx + 3.0 * d.bandwidth, 1e-12);
  double area = 0.0;
  for (std::size_t k = 1; k < d.grid.size(); ++k)
    area += 0.5 * (d.values[k] + d.values[k - 1]) * (d.grid[k] - d.grid[k - 1]);
  EXPECT_NEAR(area, 1.0, 2e-3);
}

TEST(Density, BimodalHasTwoPeaks) {
  auto x = normal_draws(1000, 6, -3.0, 0.5);
  const auto y = normal_draws(1000, 7, 3.0, 0.5);
  x.insert(x.end(), y.begin(), y.end());
  const DensityCurve d = marginal_density(x);
  std::size_t peaks = 0;
  for (std::size_t k = 1; k + 1 < d.values.size(); ++k) {
    if (d.values[k] > d.values[k - 1] && d.values[k] >= d.values[k + 1]) ++peaks;
  }
  EXPECT_EQ(peaks, 2u);
}

TEST(Density, NormalNegLogIsQuadratic) {
  const auto x = normal_draws(20000, 8);
  const DensityCurve nl = neg_log_density(marginal_density(x));
  // least-squares parabola over the central part of the grid, then R^2
  std::vector<double> gx, gy;
  for (std::size_t k = 0; k < nl.grid.size(); ++k) {
    if (std::abs(nl.grid[k]) <= 2.5) {
      gx.push_back(nl.grid[k]);
      gy.push_back(nl.values[k]);
    }
  }
  Eigen::MatrixXd a(static_cast<Eigen::Index>(gx.size()), 3);
  Eigen::VectorXd b(static_cast<Eigen::Index>(gx.size()));
  for (std::size_t k = 0; k < gx.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    a(r, 0) = 1.0;
    a(r, 1) = gx[k];
    a(r, 2) = gx[k] * gx[k];
    b(r) = gy[k];
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd resid = b - a * coef;
  const double ss_tot = (b.array() - b.mean()).square().sum();
  EXPECT_GT(1.0 - resid.squaredNorm() / ss_tot, 0.99);
  EXPECT_NEAR(coef(2), 0.5, 0.1);
}

TEST(Density, NegLogFloorKeepsValuesFinite) {
  std::vector<double> x(100, 0.0);
  x.back() = 1000.0;
  const DensityCurve nl = neg_log_density(marginal_density(x, 0.01));
  for (double v : nl.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(RankStats, SpearmanWithTies) {
  EXPECT_EQ(ranks(std::vector<double>{3, 1, 3, 2}), (std::vector<double>{3.5, 1, 3.5, 2}));
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{10, 20, 30, 1000}), 1.0);
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -1.0);
  EXPECT_EQ(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{3, 2, 1}), 0.0);
}

TEST(Jaccard, Intervals) {
  EXPECT_DOUBLE_EQ(jaccard(0, 1, 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(jaccard(0, 2, 1, 3), 1.0 / 3.0);
  EXPECT_EQ(jaccard(0, 1, 2, 3), 0.0);
  EXPECT_DOUBLE_EQ(jaccard(0, 4, 1, 2), 0.25);
}

TEST(Interpolate, ClampsAndInterpolates) {
  const std::vector<double> xs{0, 1, 2}, ys{0, 10, 30};
  EXPECT_EQ(interpolate(xs, ys, -1.0), 0.0);
  EXPECT_EQ(interpolate(xs, ys, 5.0), 30.0);
  EXPECT_DOUBLE_EQ(interpolate(xs, ys, 1.5), 20.0);
}
