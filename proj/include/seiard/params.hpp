#ifndef SEIARD_PARAMS_HPP
#define SEIARD_PARAMS_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "seiard/errors.hpp"

namespace seiard {

/// Index of a fitted quantity inside a ParamVector.
enum class Param : std::size_t { beta = 0, t_inc, t_inf, t_recov, t_fatal, p_fatal, e0, i0 };

inline constexpr std::size_t kNumParams = 8;

inline constexpr std::array<Param, kNumParams> kAllParams = {
    Param::beta,    Param::t_inc,   Param::t_inf, Param::t_recov,
    Param::t_fatal, Param::p_fatal, Param::e0,    Param::i0};

inline constexpr std::array<std::string_view, kNumParams> kParamNames = {
    "beta", "t_inc", "t_inf", "t_recov", "t_fatal", "p_fatal", "e0", "i0"};

using ParamVector = std::array<double, kNumParams>;

constexpr std::size_t index_of(Param p) noexcept { return static_cast<std::size_t>(p); }

constexpr std::string_view name_of(Param p) noexcept { return kParamNames[index_of(p)]; }

inline std::optional<Param> param_from_name(std::string_view name) {
  for (Param p : kAllParams) {
    if (name_of(p) == name) return p;
  }
  return std::nullopt;
}

/// The eight fitted quantities of the SEIARD model: six rates/probabilities
/// and the two unobserved initial compartment counts.
struct ModelParams {
  double beta = 0.0;     // transmission rate, 1/day
  double t_inc = 1.0;    // incubation period, days
  double t_inf = 1.0;    // infectious period, days
  double t_recov = 1.0;  // time spent in A_recov, days
  double t_fatal = 1.0;  // time spent in A_fatal, days
  double p_fatal = 0.0;  // probability of the fatal branch
  double e0 = 0.0;       // exposed at day 0, persons
  double i0 = 0.0;       // infectious at day 0, persons

  double sigma() const noexcept { return 1.0 / t_inc; }
  double gamma() const noexcept { return 1.0 / t_inf; }

  double get(Param p) const noexcept { return to_array()[index_of(p)]; }

  void set(Param p, double value) noexcept {
    auto values = to_array();
    values[index_of(p)] = value;
    *this = from_array(values);
  }

  ParamVector to_array() const noexcept {
    return {beta, t_inc, t_inf, t_recov, t_fatal, p_fatal, e0, i0};
  }

  static ModelParams from_array(const ParamVector& v) noexcept {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
  }

  /// Throws ParameterDomainError when any invariant is violated.
  void validate() const {
    auto fail = [](std::string_view field, double value) {
      throw ParameterDomainError("parameter '" + std::string(field) +
                                 "' out of domain: " + std::to_string(value));
    };
    for (Param p : kAllParams) {
      if (!std::isfinite(get(p))) fail(name_of(p), get(p));
    }
    if (beta < 0.0) fail("beta", beta);
    if (t_inc <= 0.0) fail("t_inc", t_inc);
    if (t_inf <= 0.0) fail("t_inf", t_inf);
    if (t_recov <= 0.0) fail("t_recov", t_recov);
    if (t_fatal <= 0.0) fail("t_fatal", t_fatal);
    if (p_fatal < 0.0 || p_fatal > 1.0) fail("p_fatal", p_fatal);
    if (e0 < 0.0) fail("e0", e0);
    if (i0 < 0.0) fail("i0", i0);
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Ground-truth values used to simulate the synthetic dataset.
inline ModelParams reference_params() {
  return {.beta = 0.25,
          .t_inc = 5.10,
          .t_inf = 6.60,
          .t_recov = 14.00,
          .t_fatal = 10.00,
          .p_fatal = 0.03,
          .e0 = 1.00,
          .i0 = 1.00};
}

struct Bound {
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  double clamp(double x) const noexcept { return x < lo ? lo : (x > hi ? hi : x); }

  friend bool operator==(const Bound&, const Bound&) = default;
};

using BoundVector = std::array<Bound, kNumParams>;

/// Fitting box for every quantity.
inline BoundVector reference_bounds() {
  return {{{0.0, 1.0},
           {1.0, 100.0},
           {1.0, 100.0},
           {1.0, 100.0},
           {1.0, 100.0},
           {0.0, 1.0},
           {0.0, 5.0},
           {0.0, 5.0}}};
}

/// Diagonal of the random-walk proposal covariance.
inline ParamVector reference_proposal_variances() {
  return {0.10, 4.00, 4.00, 4.00, 4.00, 0.01, 0.50, 0.50};
}

}  // namespace seiard

#endif  // SEIARD_PARAMS_HPP
