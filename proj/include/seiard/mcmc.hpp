#ifndef SEIARD_MCMC_HPP
#define SEIARD_MCMC_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "seiard/errors.hpp"
#include "seiard/loss.hpp"
#include "seiard/optimize.hpp"
#include "seiard/params.hpp"
#include "seiard/random.hpp"
#include "seiard/synthdata.hpp"
#include "seiard/truncated_normal.hpp"

namespace seiard {

struct McmcConfig {
  SearchSpace space{};  // bounds, plus pinned quantities that are never proposed
  ParamVector proposal_variances = reference_proposal_variances();
  double u = 40.0;        // InvGamma prior shape on the likelihood variance
  double v = 2.0 / 700.0;  // InvGamma prior scale
  FitWindow window{};
  std::size_t n_samples = 20000;  // iterations per chain, burn-in included
  std::size_t n_burn = 5000;
  std::size_t n_chains = 4;
  std::size_t thin = 5;
  std::uint64_t seed = 0;
  bool include_total = false;        // add the derived total to the likelihood
  bool adapt_during_burn_in = true;  // tune the proposal during burn-in, frozen afterwards
  bool adapt_shape = true;           // also rescale each coordinate to the chain's recent spread
  std::size_t shape_window = 500;    // memory of that spread estimate, in iterations
  double shape_factor = 1.0;
  bool hastings_correction = true;
  double target_accept = 0.234;
  std::optional<ModelParams> start;  // chains start scattered around this point; uniform over the box when unset
  double start_spread = 0.1;         // relative sd of that scatter

  void validate() const {
    space.validate();
    for (Param p : space.free_params()) {
      if (!(proposal_variances[index_of(p)] >= 0.0))
        throw ContractError("proposal variance of '" + std::string(name_of(p)) + "' must be >= 0");
    }
    if (!(u > 0.0) || !(v > 0.0)) throw ContractError("InvGamma hyperparameters must be positive");
    if (n_burn >= n_samples) throw ContractError("n_burn must be smaller than n_samples");
    if (n_chains < 1 || thin < 1) throw ContractError("n_chains and thin must be >= 1");
    if (start && !space.contains(*start)) throw ContractError("mcmc start lies outside the search space");
    if (!(start_spread > 0.0)) throw ContractError("start_spread must be positive");
  }
};

struct Draw {
  ModelParams theta;
  double s = 0.0;
  double log_post = 0.0;
};

struct ChainSamples {
  std::vector<Draw> draws;
  double accept_rate = 0.0;          // after burn-in
  double burn_in_accept_rate = 0.0;
  double proposal_scale = 1.0;       // global multiplier after adaptation
  ParamVector proposal_sd{};         // proposal sd per coordinate after burn-in
  std::size_t chain_id = 0;

  std::vector<double> values(Param p) const {
    std::vector<double> out;
    out.reserve(draws.size());
    for (const auto& d : draws) out.push_back(d.theta.get(p));
    return out;
  }
};

/// Day-over-day log growth z[t] = log x[t] - log x[t-1], floored at one person.
inline std::vector<double> log_diff(std::span<const double> series) {
  std::vector<double> out;
  if (series.size() < 2) return out;
  out.reserve(series.size() - 1);
  for (std::size_t t = 1; t < series.size(); ++t)
    out.push_back(std::log(std::max(series[t], kCountFloor)) - std::log(std::max(series[t - 1], kCountFloor)));
  return out;
}

/// Sum of squared log-growth residuals and the number of terms.
struct Residuals {
  double ssr = std::numeric_limits<double>::infinity();
  std::size_t count = 0;

  bool feasible() const noexcept { return std::isfinite(ssr); }
};

inline double normal_log_likelihood(const Residuals& r, double s) noexcept {
  if (!r.feasible()) return -std::numeric_limits<double>::infinity();
  return -0.5 * static_cast<double>(r.count) * std::log(2.0 * std::numbers::pi * s) - r.ssr / (2.0 * s);
}

/// Shape and scale of the conditional InvGamma for the likelihood variance.
struct VarianceConditional {
  double shape = 0.0;
  double scale = 0.0;
};

inline VarianceConditional variance_conditional(double u, double v, const FitWindow& w, const Residuals& r) {
  return {u + 2.0 * static_cast<double>(w.t_end - w.t_begin - 1), v + r.ssr / 2.0};
}

inline double draw_inverse_gamma(const VarianceConditional& c, Rng& rng) {
  std::gamma_distribution<double> g(c.shape, 1.0 / c.scale);
  return 1.0 / g(rng);
}

/// What the sampler needs from a posterior: residuals for a parameter set,
/// the log-likelihood given the variance, and a conditional variance draw.
template <class T>
concept GibbsTarget = requires(const T& t, const ModelParams& p, const Residuals& r, double s, Rng& rng) {
  { t.residuals(p) } -> std::convertible_to<Residuals>;
  { t.log_likelihood(r, s) } -> std::convertible_to<double>;
  { t.draw_variance(r, rng) } -> std::convertible_to<double>;
};

/// Normal likelihood on log growth of the observed series over the window.
class DatasetTarget {
 public:
  DatasetTarget(const Dataset& data, const McmcConfig& config)
      : data_(&data), window_(config.window), u_(config.u), v_(config.v) {
    window_.validate(data.horizon());
    series_ = {Series::active, Series::recovered, Series::deceased};
    if (config.include_total) series_.push_back(Series::total);
    for (Series s : series_) observed_z_.push_back(window_log_diff(data.observed, s));
  }

  Residuals residuals(const ModelParams& params) const {
    ObservedSeries pred;
    try {
      pred = simulate_observed(*data_, params, window_.t_end);
    } catch (const DivergenceError&) {
      return {};
    }
    Residuals r{0.0, 0};
    for (std::size_t k = 0; k < series_.size(); ++k) {
      const auto model_z = window_log_diff(pred, series_[k]);
      for (std::size_t t = 0; t < model_z.size(); ++t) {
        const double e = observed_z_[k][t] - model_z[t];
        r.ssr += e * e;
      }
      r.count += model_z.size();
    }
    return r;
  }

  double log_likelihood(const Residuals& r, double s) const { return normal_log_likelihood(r, s); }

  VarianceConditional variance_conditional(const Residuals& r) const {
    return seiard::variance_conditional(u_, v_, window_, r);
  }

  double draw_variance(const Residuals& r, Rng& rng) const {
    return draw_inverse_gamma(variance_conditional(r), rng);
  }

  /// -log of the theta-marginal of the sampler's stationary law, up to a
  /// constant: shape * log(scale) of the variance conditional. +inf when the
  /// simulation diverges.
  double posterior_loss(const ModelParams& params) const {
    const Residuals r = residuals(params);
    if (!r.feasible()) return std::numeric_limits<double>::infinity();
    const VarianceConditional c = variance_conditional(r);
    return c.shape * std::log(c.scale);
  }

 private:
  std::vector<double> window_log_diff(const ObservedSeries& obs, Series s) const {
    const auto& x = obs.series(s);
    return log_diff(std::span(x).subspan(static_cast<std::size_t>(window_.t_begin),
                                         static_cast<std::size_t>(window_.length() + 1)));
  }

  const Dataset* data_;
  FitWindow window_;
  double u_;
  double v_;
  std::vector<Series> series_;
  std::vector<std::vector<double>> observed_z_;
};

inline double log_likelihood(const Dataset& data, const ModelParams& params, double s, const FitWindow& window) {
  if (!(s > 0.0)) throw ContractError("likelihood variance must be positive");
  McmcConfig cfg;
  cfg.window = window;
  const DatasetTarget target(data, cfg);
  return target.log_likelihood(target.residuals(params), s);
}

inline double posterior_loss(const Dataset& data, const ModelParams& params, const McmcConfig& config) {
  return DatasetTarget(data, config).posterior_loss(params);
}

/// Draws the likelihood variance from its InvGamma conditional at `theta`.
inline double sample_s(const ModelParams& theta, const Dataset& data, const McmcConfig& config, Rng& rng) {
  const DatasetTarget target(data, config);
  return target.draw_variance(target.residuals(theta), rng);
}

struct Proposal {
  ModelParams theta;
  // log q(old | new) - log q(new | old); only the truncation masses differ.
  double log_hastings = 0.0;
};

/// Independent truncated Gaussian step per free coordinate.
inline Proposal propose(const ModelParams& prev, const SearchSpace& space, const ParamVector& sd, Rng& rng) {
  Proposal out{prev, 0.0};
  for (Param p : space.free_params()) {
    const std::size_t j = index_of(p);
    const Bound& b = space.bounds[j];
    if (!(sd[j] > 0.0)) continue;
    const double x_old = prev.get(p);
    const double x_new = truncnorm::sample(x_old, sd[j], b.lo, b.hi, rng);
    out.theta.set(p, x_new);
    out.log_hastings += truncnorm::log_mass(x_old, sd[j], b.lo, b.hi) - truncnorm::log_mass(x_new, sd[j], b.lo, b.hi);
  }
  return out;
}

inline ParamVector proposal_sd(const McmcConfig& config, double scale = 1.0) {
  ParamVector sd{};
  for (std::size_t j = 0; j < kNumParams; ++j) sd[j] = scale * std::sqrt(config.proposal_variances[j]);
  return sd;
}

inline Proposal propose(const ModelParams& prev, const McmcConfig& config, Rng& rng) {
  return propose(prev, config.space, proposal_sd(config), rng);
}

/// One chain of Metropolis-within-Gibbs: an MH update of theta at fixed s,
/// then an exact conditional draw of s at the new theta.
template <GibbsTarget Target>
ChainSamples run_single_chain(const Target& target, const McmcConfig& config, std::size_t chain_id) {
  config.validate();
  Rng rng(derive_seed(config.seed, {0x6d636d63ULL, chain_id}));

  auto initial_point = [&] {
    if (!config.start) return config.space.assemble(opt::detail::uniform_point(config.space.free_bounds(), rng));
    ModelParams p = *config.start;
    for (Param q : config.space.free_params()) {
      const Bound b = config.space.bounds[index_of(q)];
      const double c = p.get(q);
      const double sd = config.start_spread * std::max(std::abs(c), 1e-3 * b.width());
      p.set(q, truncnorm::sample(c, sd, b.lo, b.hi, rng));
    }
    return p;
  };
  ModelParams theta = initial_point();
  Residuals res = target.residuals(theta);
  for (int attempt = 0; !res.feasible() && attempt < 1000; ++attempt) {
    theta = initial_point();
    res = target.residuals(theta);
  }
  if (!res.feasible()) throw NoFeasiblePointError("mcmc: no feasible starting point");
  double s = target.draw_variance(res, rng);

  ChainSamples out;
  out.chain_id = chain_id;
  out.draws.reserve((config.n_samples - config.n_burn) / config.thin + 1);

  double log_scale = 0.0;
  std::size_t accepted_burn = 0, accepted_main = 0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // per-coordinate proposal shape, tracked during burn-in from an
  // exponentially weighted estimate of the chain's own spread
  const ParamVector base_sd = proposal_sd(config);
  ParamVector shape = base_sd;
  ParamVector ew_mean = theta.to_array();
  ParamVector ew_var{};
  const double ew_rate = 1.0 / static_cast<double>(std::max<std::size_t>(config.shape_window, 1));
  const std::size_t shape_start = config.shape_window;

  auto current_sd = [&] {
    ParamVector sd{};
    for (std::size_t j = 0; j < kNumParams; ++j) sd[j] = std::exp(log_scale) * shape[j];
    return sd;
  };

  for (std::size_t k = 0; k < config.n_samples; ++k) {
    const bool burning = k < config.n_burn;
    const Proposal prop = propose(theta, config.space, current_sd(), rng);
    const Residuals res_new = target.residuals(prop.theta);

    bool accept = false;
    if (res_new.feasible()) {
      double log_alpha = target.log_likelihood(res_new, s) - target.log_likelihood(res, s);
      if (config.hastings_correction) log_alpha += prop.log_hastings;
      accept = std::log(unif(rng)) < log_alpha;
    }
    if (accept) {
      theta = prop.theta;
      res = res_new;
      (burning ? accepted_burn : accepted_main) += 1;
    }
    if (burning && config.adapt_during_burn_in) {
      const double rate = 1.0 / std::sqrt(static_cast<double>(k) + 1.0);
      log_scale += rate * ((accept ? 1.0 : 0.0) - config.target_accept);
      log_scale = std::clamp(log_scale, -30.0, 3.0);
      if (config.adapt_shape) {
        const ParamVector x = theta.to_array();
        for (std::size_t j = 0; j < kNumParams; ++j) {
          const double d = x[j] - ew_mean[j];
          ew_mean[j] += ew_rate * d;
          ew_var[j] = (1.0 - ew_rate) * (ew_var[j] + ew_rate * d * d);
        }
        if (k + 1 == shape_start) log_scale = 0.0;
        if (k + 1 >= shape_start) {
          for (std::size_t j = 0; j < kNumParams; ++j)
            shape[j] = std::max(config.shape_factor * std::sqrt(ew_var[j]), 1e-4 * base_sd[j]);
        }
      }
    }

    s = target.draw_variance(res, rng);

    if (!burning && (k - config.n_burn) % config.thin == 0)
      out.draws.push_back({theta, s, target.log_likelihood(res, s)});
  }

  out.burn_in_accept_rate =
      config.n_burn > 0 ? static_cast<double>(accepted_burn) / static_cast<double>(config.n_burn) : 0.0;
  out.accept_rate = static_cast<double>(accepted_main) / static_cast<double>(config.n_samples - config.n_burn);
  out.proposal_scale = std::exp(log_scale);
  out.proposal_sd = current_sd();
  return out;
}

/// Runs `config.n_chains` independent chains on up to `threads` workers.
/// Output does not depend on the thread count.
template <GibbsTarget Target>
std::vector<ChainSamples> run_chains(const Target& target, const McmcConfig& config, std::size_t threads = 1) {
  config.validate();
  std::vector<ChainSamples> chains(config.n_chains);
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, config.n_chains);
  if (workers == 1) {
    for (std::size_t c = 0; c < config.n_chains; ++c) chains[c] = run_single_chain(target, config, c);
    return chains;
  }
  std::vector<std::exception_ptr> errors(config.n_chains);
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < config.n_chains; c += workers) {
        try {
          chains[c] = run_single_chain(target, config, c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return chains;
}

inline std::vector<ChainSamples> run_chain(const Dataset& data, const McmcConfig& config, std::size_t threads = 1) {
  const DatasetTarget target(data, config);
  return run_chains(target, config, threads);
}

/// Potential scale reduction factor across chains for one scalar quantity.
inline double gelman_rubin(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  std::size_t n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();

  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j) {
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += chains[j][i];
    mu /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (chains[j][i] - mu) * (chains[j][i] - mu);
    means[j] = mu;
    vars[j] = ss / static_cast<double>(n - 1);
  }
  double grand = 0.0;
  for (double mu : means) grand += mu;
  grand /= static_cast<double>(m);
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= static_cast<double>(n) / static_cast<double>(m - 1);
  double within = 0.0;
  for (double v : vars) within += v;
  within /= static_cast<double>(m);
  if (within <= 0.0) return between <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double nn = static_cast<double>(n);
  const double pooled = (nn - 1.0) / nn * within + between / nn;
  return std::sqrt(pooled / within);
}

inline double gelman_rubin(const std::vector<ChainSamples>& chains, Param p) {
  std::vector<std::vector<double>> values;
  values.reserve(chains.size());
  for (const auto& c : chains) values.push_back(c.values(p));
  return gelman_rubin(values);
}

/// Effective sample size summed over chains, using Geyer's initial positive
/// sequence on each chain's autocorrelations.
inline double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  double total = 0.0;
  for (const auto& x : chains) {
    const std::size_t n = x.size();
    if (n < 4) {
      total += static_cast<double>(n);
      continue;
    }
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= static_cast<double>(n);
    double c0 = 0.0;
    for (double v : x) c0 += (v - mu) * (v - mu);
    c0 /= static_cast<double>(n);
    if (c0 <= 0.0) {
      total += static_cast<double>(n);
      continue;
    }
    auto rho = [&](std::size_t lag) {
      double acc = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) acc += (x[i] - mu) * (x[i + lag] - mu);
      return acc / static_cast<double>(n) / c0;
    };
    double tau = 1.0;
    for (std::size_t lag = 1; lag + 1 < n; lag += 2) {
      const double pair = rho(lag) + rho(lag + 1);
      if (pair <= 0.0) break;
      tau += 2.0 * pair;
    }
    total += static_cast<double>(n) / tau;
  }
  return total;
}

inline std::vector<double> pooled_values(const std::vector<ChainSamples>& chains, Param p) {
  std::vector<double> out;
  for (const auto& c : chains) {
    const auto v = c.values(p);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace seiard

#endif  // SEIARD_MCMC_HPP
