#ifndef SEIARD_SYNTHDATA_HPP
#define SEIARD_SYNTHDATA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

#include "seiard/dynamics.hpp"
#include "seiard/errors.hpp"
#include "seiard/params.hpp"
#include "seiard/random.hpp"

namespace seiard {

/// Multiplicative log-normal observation noise; sigma == 0 disables it.
struct NoiseSpec {
  double sigma = 0.0;

  bool enabled() const noexcept { return sigma > 0.0; }
  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct DatasetConfig {
  ModelParams true_params = reference_params();
  double population_n = 1e7;
  int horizon = 400;
  InitialCounts init_observed{};
  NoiseSpec noise{};
  std::uint64_t seed = 0;
  double dt = 0.1;
  // Share of the initial active count placed in A_fatal; p_fatal when unset.
  std::optional<double> a0_fatal_fraction;

  void validate() const {
    true_params.validate();
    if (horizon < 1) throw ContractError("dataset horizon must be >= 1");
    if (!(population_n > 0.0)) throw ContractError("population_n must be positive");
    if (!(noise.sigma >= 0.0)) throw ContractError("noise sigma must be >= 0");
    if (a0_fatal_fraction && (*a0_fatal_fraction < 0.0 || *a0_fatal_fraction > 1.0))
      throw ContractError("a0_fatal_fraction must lie in [0, 1]");
  }

  /// Day-0 state for an arbitrary candidate parameter set.
  State initial_state_for(const ModelParams& params) const {
    return initial_state(params, population_n, init_observed, a0_fatal_fraction);
  }

  friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct Dataset {
  ObservedSeries observed;
  DatasetConfig config;

  int horizon() const noexcept { return config.horizon; }
};

/// Simulates the ground truth and applies optional noise. Each (series, day)
/// cell draws from its own RNG stream so results do not depend on visit order.
inline Dataset generate(const DatasetConfig& config) {
  config.validate();
  const State init = config.initial_state_for(config.true_params);
  Dataset out{observe(integrate(config.true_params, init, config.horizon, config.dt)), config};

  if (config.noise.enabled()) {
    auto& obs = out.observed;
    for (Series s : {Series::active, Series::recovered, Series::deceased}) {
      auto& values = obs.series(s);
      for (std::size_t t = 0; t < values.size(); ++t) {
        Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(s), t}));
        std::normal_distribution<double> eps(0.0, config.noise.sigma);
        values[t] *= std::exp(eps(rng));
      }
    }
    for (Series s : {Series::recovered, Series::deceased}) {
      auto& values = obs.series(s);
      for (std::size_t t = 1; t < values.size(); ++t) values[t] = std::max(values[t], values[t - 1]);
    }
    for (std::size_t t = 0; t < obs.size(); ++t)
      obs.total[t] = obs.active[t] + obs.recovered[t] + obs.deceased[t];
  }
  return out;
}

}  // namespace seiard

#endif  // SEIARD_SYNTHDATA_HPP
