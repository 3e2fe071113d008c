#ifndef SEIARD_DYNAMICS_HPP
#define SEIARD_DYNAMICS_HPP

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "seiard/errors.hpp"
#include "seiard/params.hpp"

namespace seiard {

/// Compartment populations (persons). Also used for rates (persons/day).
struct State {
  double s = 0.0;
  double e = 0.0;
  double i = 0.0;
  double a_recov = 0.0;
  double a_fatal = 0.0;
  double r = 0.0;
  double d = 0.0;

  static constexpr std::size_t size() { return 7; }

  double total() const noexcept { return s + e + i + a_recov + a_fatal + r + d; }

  std::array<double, 7> to_array() const noexcept { return {s, e, i, a_recov, a_fatal, r, d}; }

  static State from_array(const std::array<double, 7>& v) noexcept {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
  }

  friend State operator+(const State& a, const State& b) noexcept {
    return {a.s + b.s, a.e + b.e, a.i + b.i, a.a_recov + b.a_recov,
            a.a_fatal + b.a_fatal, a.r + b.r, a.d + b.d};
  }

  friend State operator*(double k, const State& a) noexcept {
    return {k * a.s, k * a.e, k * a.i, k * a.a_recov, k * a.a_fatal, k * a.r, k * a.d};
  }

  friend bool operator==(const State&, const State&) = default;
};

inline constexpr std::array<const char*, 7> kCompartmentNames = {"S", "E", "I", "A_recov",
                                                                 "A_fatal", "R", "D"};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  double population_n = 0.0;

  std::size_t size() const noexcept { return states.size(); }
};

enum class Series : std::size_t { active = 0, recovered, deceased, total };

inline constexpr std::array<Series, 4> kAllSeries = {Series::active, Series::recovered,
                                                     Series::deceased, Series::total};
inline constexpr std::array<const char*, 4> kSeriesNames = {"active", "recovered", "deceased",
                                                            "total"};

/// The observable projection of a trajectory.
struct ObservedSeries {
  std::vector<double> times;
  std::vector<double> active;
  std::vector<double> recovered;
  std::vector<double> deceased;
  std::vector<double> total;

  std::size_t size() const noexcept { return times.size(); }

  const std::vector<double>& series(Series which) const noexcept {
    switch (which) {
      case Series::active: return active;
      case Series::recovered: return recovered;
      case Series::deceased: return deceased;
      case Series::total: break;
    }
    return total;
  }

  std::vector<double>& series(Series which) noexcept {
    return const_cast<std::vector<double>&>(std::as_const(*this).series(which));
  }

  friend bool operator==(const ObservedSeries&, const ObservedSeries&) = default;
};

/// Observed counts at day 0.
struct InitialCounts {
  double active = 5.0;
  double recovered = 0.0;
  double deceased = 0.0;

  friend bool operator==(const InitialCounts&, const InitialCounts&) = default;
};

/// Builds the day-0 state. The aggregate active count is split between the
/// two active compartments with `a0_fatal_fraction`, defaulting to p_fatal.
inline State initial_state(const ModelParams& params, double population_n, const InitialCounts& counts,
                           std::optional<double> a0_fatal_fraction = std::nullopt) {
  const double fatal_share = a0_fatal_fraction.value_or(params.p_fatal);
  State x;
  x.e = params.e0;
  x.i = params.i0;
  x.a_fatal = fatal_share * counts.active;
  x.a_recov = counts.active - x.a_fatal;
  x.r = counts.recovered;
  x.d = counts.deceased;
  x.s = population_n - (x.e + x.i + counts.active + x.r + x.d);
  if (x.s < 0.0) throw ContractError("initial counts exceed the population");
  return x;
}

namespace detail {

inline State rhs(const State& x, const ModelParams& p, double population_n) noexcept {
  const double infection = p.beta * x.i * x.s / population_n;
  const double incubation = x.e / p.t_inc;
  const double removal = x.i / p.t_inf;
  const double recovery = x.a_recov / p.t_recov;
  const double death = x.a_fatal / p.t_fatal;
  return {-infection,
          infection - incubation,
          incubation - removal,
          (1.0 - p.p_fatal) * removal - recovery,
          p.p_fatal * removal - death,
          recovery,
          death};
}

}  // namespace detail

/// Right-hand side of the seven SEIARD equations.
inline State derivative(const State& state, const ModelParams& params, double population_n) {
  params.validate();
  if (!(population_n > 0.0)) throw ContractError("population_n must be positive");
  return detail::rhs(state, params, population_n);
}

inline constexpr double kClampTolerance = 1e-9;

/// Fixed-step classical RK4 from `init`, sampled at integer days 0..horizon.
/// `dt` must divide one day.
inline Trajectory integrate(const ModelParams& params, const State& init, int horizon, double dt = 0.1) {
  params.validate();
  if (horizon <= 0) throw ContractError("horizon must be positive");
  if (!(dt > 0.0) || dt > 1.0) throw ContractError("dt must lie in (0, 1]");
  const long steps_per_day = std::lround(1.0 / dt);
  if (std::abs(static_cast<double>(steps_per_day) * dt - 1.0) > 1e-9)
    throw ContractError("dt must divide one day");
  for (double v : init.to_array()) {
    if (!(v >= 0.0)) throw ContractError("initial state has a negative compartment");
  }

  const double n = init.total();
  if (!(n > 0.0)) throw ContractError("population must be positive");

  Trajectory traj;
  traj.population_n = n;
  traj.times.reserve(static_cast<std::size_t>(horizon) + 1);
  traj.states.reserve(static_cast<std::size_t>(horizon) + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(init);

  State x = init;
  long step = 0;
  for (int day = 1; day <= horizon; ++day) {
    for (long k = 0; k < steps_per_day; ++k, ++step) {
      const State k1 = detail::rhs(x, params, n);
      const State k2 = detail::rhs(x + (0.5 * dt) * k1, params, n);
      const State k3 = detail::rhs(x + (0.5 * dt) * k2, params, n);
      const State k4 = detail::rhs(x + dt * k3, params, n);
      x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

      auto values = x.to_array();
      for (std::size_t c = 0; c < values.size(); ++c) {
        if (!std::isfinite(values[c]))
          throw DivergenceError(std::string("non-finite ") + kCompartmentNames[c], step);
        if (values[c] < 0.0) {
          if (values[c] < -kClampTolerance)
            throw DivergenceError(std::string("negative ") + kCompartmentNames[c], step);
          values[c] = 0.0;
        }
      }
      x = State::from_array(values);
    }
    traj.times.push_back(static_cast<double>(day));
    traj.states.push_back(x);
  }
  return traj;
}

inline ObservedSeries observe(const Trajectory& traj) {
  ObservedSeries out;
  const std::size_t n = traj.size();
  out.times = traj.times;
  out.active.resize(n);
  out.recovered.resize(n);
  out.deceased.resize(n);
  out.total.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const State& x = traj.states[t];
    out.active[t] = x.a_recov + x.a_fatal;
    out.recovered[t] = x.r;
    out.deceased[t] = x.d;
    out.total[t] = out.active[t] + out.recovered[t] + out.deceased[t];
  }
  return out;
}

/// Early-epidemic linearization (S close to N): dx/dt = B x, y = C x.
struct LtiSystem {
  Eigen::Matrix<double, 7, 7> b_matrix;
  Eigen::Matrix<double, 3, 7> c_matrix;
};

/// The I-row diagonal is -1/t_inf so that every column of B sums to zero.
inline LtiSystem lti_matrices(const ModelParams& p) {
  p.validate();
  LtiSystem sys;
  auto& b = sys.b_matrix;
  b.setZero();
  b(0, 2) = -p.beta;
  b(1, 1) = -1.0 / p.t_inc;
  b(1, 2) = p.beta;
  b(2, 1) = 1.0 / p.t_inc;
  b(2, 2) = -1.0 / p.t_inf;
  b(3, 2) = (1.0 - p.p_fatal) / p.t_inf;
  b(3, 3) = -1.0 / p.t_recov;
  b(4, 2) = p.p_fatal / p.t_inf;
  b(4, 4) = -1.0 / p.t_fatal;
  b(5, 3) = 1.0 / p.t_recov;
  b(6, 4) = 1.0 / p.t_fatal;

  auto& c = sys.c_matrix;
  c.setZero();
  c(0, 3) = 1.0;
  c(0, 4) = 1.0;
  c(1, 5) = 1.0;
  c(2, 6) = 1.0;
  return sys;
}

}  // namespace seiard

#endif  // SEIARD_DYNAMICS_HPP
