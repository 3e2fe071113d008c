#ifndef SEIARD_TRUNCATED_NORMAL_HPP
#define SEIARD_TRUNCATED_NORMAL_HPP

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace seiard::truncnorm {

inline double std_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double std_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// log P(lo <= X <= hi) for X ~ N(mu, sd^2). Stable in both tails.
inline double log_mass(double mu, double sd, double lo, double hi) noexcept {
  double a = (lo - mu) / sd;
  double b = (hi - mu) / sd;
  if (a > 0.0) {
    // mirror into the lower tail where the CDF has full relative precision
    const double t = a;
    a = -b;
    b = -t;
  }
  const double mass = std_cdf(b) - std_cdf(a);
  if (mass > 0.0) return std::log(mass);
  return -std::numeric_limits<double>::infinity();
}

/// Density of N(mu, sd^2) truncated to [lo, hi], evaluated at x.
inline double pdf(double x, double mu, double sd, double lo, double hi) noexcept {
  if (x < lo || x > hi) return 0.0;
  const double z = (x - mu) / sd;
  const double log_phi = -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(sd);
  return std::exp(log_phi - log_mass(mu, sd, lo, hi));
}

/// Inverse-CDF draw from N(mu, sd^2) truncated to [lo, hi]; sd == 0 returns mu.
template <class Urbg>
double sample(double mu, double sd, double lo, double hi, Urbg& rng) {
  if (!(sd > 0.0)) return std::clamp(mu, lo, hi);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double a = (lo - mu) / sd;
  double b = (hi - mu) / sd;
  const bool mirrored = a > 0.0;
  if (mirrored) {
    const double t = a;
    a = -b;
    b = -t;
  }
  const double pa = std_cdf(a);
  const double pb = std_cdf(b);
  double p = pa + u * (pb - pa);
  p = std::clamp(p, std::numeric_limits<double>::min(), 1.0 - std::numeric_limits<double>::epsilon());
  double z = std_quantile(p);
  z = std::clamp(z, a, b);
  if (mirrored) z = -z;
  return std::clamp(mu + sd * z, lo, hi);
}

}  // namespace seiard::truncnorm

#endif  // SEIARD_TRUNCATED_NORMAL_HPP
