#ifndef SEIARD_LOSS_HPP
#define SEIARD_LOSS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "seiard/dynamics.hpp"
#include "seiard/errors.hpp"
#include "seiard/synthdata.hpp"

namespace seiard {

/// Floor (persons) applied to denominators and logarithms of count series.
inline constexpr double kCountFloor = 1.0;

/// Inclusive day range [t_begin, t_end] of the dataset used for fitting.
struct FitWindow {
  int t_begin = 0;
  int t_end = 28;

  int length() const noexcept { return t_end - t_begin; }

  void validate(int horizon) const {
    if (t_begin < 0 || t_begin >= t_end || t_end > horizon)
      throw ContractError("fit window [" + std::to_string(t_begin) + ", " + std::to_string(t_end) +
                          "] outside dataset horizon " + std::to_string(horizon));
  }

  friend bool operator==(const FitWindow&, const FitWindow&) = default;
};

/// Mean absolute percentage error, in percent.
inline double mape(std::span<const double> truth, std::span<const double> pred) {
  if (truth.size() != pred.size()) throw ContractError("mape: length mismatch");
  if (truth.empty()) throw ContractError("mape: empty series");
  double acc = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k)
    acc += std::abs(truth[k] - pred[k]) / std::max(truth[k], kCountFloor);
  return 100.0 * acc / static_cast<double>(truth.size());
}

/// Simulates `params` from day 0 up to `t_end` on the dataset's grid.
inline ObservedSeries simulate_observed(const Dataset& data, const ModelParams& params, int t_end) {
  return observe(integrate(params, data.config.initial_state_for(params), t_end, data.config.dt));
}

namespace detail {

inline double window_mape(const ObservedSeries& truth, const ObservedSeries& pred, Series s,
                          const FitWindow& w) {
  const auto b = static_cast<std::size_t>(w.t_begin);
  const auto n = static_cast<std::size_t>(w.t_end - w.t_begin + 1);
  return mape(std::span(truth.series(s)).subspan(b, n), std::span(pred.series(s)).subspan(b, n));
}

}  // namespace detail

/// Unweighted mean of the active/recovered/deceased/total MAPEs over the
/// window. Divergent simulations score +inf.
inline double fit_loss(const Dataset& data, const ModelParams& params, const FitWindow& window) {
  window.validate(data.horizon());
  ObservedSeries pred;
  try {
    pred = simulate_observed(data, params, window.t_end);
  } catch (const DivergenceError&) {
    return std::numeric_limits<double>::infinity();
  }
  double acc = 0.0;
  for (Series s : kAllSeries) acc += detail::window_mape(data.observed, pred, s, window);
  return acc / static_cast<double>(kAllSeries.size());
}

}  // namespace seiard

#endif  // SEIARD_LOSS_HPP
