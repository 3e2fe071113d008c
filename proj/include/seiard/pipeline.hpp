#ifndef SEIARD_PIPELINE_HPP
#define SEIARD_PIPELINE_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "seiard/config.hpp"
#include "seiard/io.hpp"
#include "seiard/loss.hpp"
#include "seiard/mcmc.hpp"
#include "seiard/optimize.hpp"
#include "seiard/posterior.hpp"
#include "seiard/profile.hpp"
#include "seiard/structural.hpp"
#include "seiard/synthdata.hpp"

namespace seiard {

// ---------------------------------------------------------------- computations

struct FitOutcome {
  Variant variant = Variant::reparam;
  FitWindow window{};
  OptResult result;
};

inline FitOutcome run_fit(const RunConfig& cfg, const Dataset& data, Variant variant, const FitWindow& window,
                          std::uint64_t seed) {
  OptimizerOptions opts = cfg.optimizer;
  opts.seed = seed;
  const Objective objective = [&](const ModelParams& p) { return fit_loss(data, p, window); };
  return {variant, window, minimize(objective, cfg.search_space(variant), opts)};
}

inline FitOutcome run_fit(const RunConfig& cfg, const Dataset& data, Variant variant, const FitWindow& window) {
  return run_fit(cfg, data, variant, window,
                 derive_seed(cfg.component_seed("fit"), {static_cast<std::uint64_t>(variant),
                                                         static_cast<std::uint64_t>(window.t_end)}));
}

struct ParamSummary {
  Param param = Param::beta;
  double rhat = 0.0;
  double ess = 0.0;
  double mean = 0.0;
  double median = 0.0;
  Hpdi hpdi{};
};

struct McmcOutcome {
  Variant variant = Variant::reparam;
  FitWindow window{};
  McmcConfig config;
  std::vector<ChainSamples> chains;
  std::vector<ParamSummary> summaries;  // free parameters only
  std::vector<double> posterior_losses;  // posterior loss at each retained draw
  std::vector<double> fit_losses;        // fit loss at each retained draw
  CorrelationMatrix correlation;

  const ParamSummary& summary(Param p) const {
    for (const auto& s : summaries) {
      if (s.param == p) return s;
    }
    throw ContractError("'" + std::string(name_of(p)) + "' was not sampled");
  }
  double max_rhat() const {
    double m = 0.0;
    for (const auto& s : summaries) m = std::max(m, s.rhat);
    return m;
  }
};

/// With the `fit` start, chains are scattered around `start`, or around a
/// fresh point estimate when none is given.
inline McmcOutcome run_mcmc(const RunConfig& cfg, const Dataset& data, Variant variant, const FitWindow& window,
                            double hpdi_alpha = 0.95, const ModelParams* start = nullptr) {
  McmcOutcome out;
  out.variant = variant;
  out.window = window;
  out.config = cfg.mcmc_for(variant, window);
  if (cfg.mcmc_init == McmcInit::fit)
    out.config.start = start ? *start : run_fit(cfg, data, variant, window).result.best_params;
  const DatasetTarget target(data, out.config);
  out.chains = run_chains(target, out.config, cfg.threads);

  std::vector<std::vector<double>> columns;
  for (Param p : out.config.space.free_params()) {
    ParamSummary s;
    s.param = p;
    s.rhat = gelman_rubin(out.chains, p);
    std::vector<std::vector<double>> per_chain;
    for (const auto& c : out.chains) per_chain.push_back(c.values(p));
    s.ess = effective_sample_size(per_chain);
    const auto pooled = pooled_values(out.chains, p);
    s.mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) / static_cast<double>(pooled.size());
    s.median = loss_quantile(pooled, 0.5);
    s.hpdi = hpdi(pooled, hpdi_alpha);
    out.summaries.push_back(s);
    columns.push_back(pooled);
  }
  for (const auto& c : out.chains) {
    for (const auto& d : c.draws) {
      out.posterior_losses.push_back(target.posterior_loss(d.theta));
      out.fit_losses.push_back(fit_loss(data, d.theta, window));
    }
  }
  out.correlation = correlation_matrix(columns);
  return out;
}

struct ProfileOutcome {
  Variant variant = Variant::reparam;
  FitWindow window{};
  ProfileLoss loss = ProfileLoss::posterior;
  ThresholdMode mode = ThresholdMode::posterior;
  double alpha = 0.95;
  double threshold = 0.0;
  PlCurve curve;
  PlInterval interval;
  Verdict verdict = Verdict::inconclusive;
};

inline std::vector<double> profile_grid(const RunConfig& cfg, Param p, double center) {
  GridSpec spec;
  if (const auto it = cfg.profile.grids.find(p); it != cfg.profile.grids.end()) spec = it->second;
  spec.points = cfg.profile.points;
  return make_grid(p, center, cfg.bounds[index_of(p)], spec);
}

/// Profile of `param` under the configured loss, with its J_PL interval.
/// The posterior threshold mode needs `mcmc` from the same variant and window.
inline ProfileOutcome run_profile(const RunConfig& cfg, const Dataset& data, Variant variant, const FitWindow& window,
                                  Param param, const FitOutcome& fit, const McmcOutcome* mcmc) {
  ProfileOutcome out;
  out.variant = variant;
  out.window = window;
  out.loss = cfg.profile.loss;
  out.mode = cfg.profile.threshold;
  out.alpha = cfg.profile.alpha;

  const McmcConfig mc = cfg.mcmc_for(variant, window);
  const DatasetTarget target(data, mc);
  Objective objective;
  if (out.loss == ProfileLoss::posterior)
    objective = [&](const ModelParams& p) { return target.posterior_loss(p); };
  else
    objective = [&](const ModelParams& p) { return fit_loss(data, p, window); };

  ProfileOptions po;
  po.optimizer = cfg.optimizer;
  po.optimizer.budget = cfg.profile.inner_budget;
  po.optimizer.seed = derive_seed(cfg.component_seed("profile"),
                                  {static_cast<std::uint64_t>(variant), static_cast<std::uint64_t>(window.t_end)});
  po.window = window;
  po.warm_start = cfg.profile.warm_start;
  po.start = fit.result.best_params;

  const SearchSpace space = cfg.search_space(variant);
  out.curve = profile_objective(objective, param, profile_grid(cfg, param, fit.result.best_params.get(param)), space, po);

  if (out.mode == ThresholdMode::posterior) {
    if (!mcmc) throw ContractError("posterior threshold needs an MCMC run");
    const auto& losses = out.loss == ProfileLoss::posterior ? mcmc->posterior_losses : mcmc->fit_losses;
    out.threshold = loss_quantile(losses, out.alpha);
  } else {
    out.threshold = chi2_threshold(out.curve, out.alpha);
  }
  // a threshold under the profile minimum means the sampler never reached the
  // optimum; the level set is then just the minimizing grid point
  out.threshold = std::max(out.threshold, out.curve.min_loss());
  out.interval = pl_interval(out.curve, out.threshold);
  out.interval.alpha = out.alpha;
  if (out.curve.size() >= 5) out.verdict = unimodality_verdict(out.curve, cfg.profile.rel_tol);
  return out;
}

/// Rank agreement between a profile curve and the negative log marginal
/// posterior density, over the grid points inside the density's support.
struct CurveAgreement {
  double spearman = 0.0;
  std::size_t shared_points = 0;
};

inline CurveAgreement profile_density_agreement(const PlCurve& curve, std::span<const double> draws) {
  const DensityCurve nl = neg_log_density(marginal_density(draws));
  std::vector<double> a, b;
  for (std::size_t j = 0; j < curve.size(); ++j) {
    const double x = curve.grid[j];
    if (curve.failed[j] || x < nl.grid.front() || x > nl.grid.back()) continue;
    a.push_back(curve.profiled_loss[j]);
    b.push_back(interpolate(nl.grid, nl.values, x));
  }
  CurveAgreement out;
  out.shared_points = a.size();
  if (a.size() >= 3) out.spearman = spearman(a, b);
  return out;
}

struct ForecastRow {
  Variant variant = Variant::reparam;
  std::size_t repeat = 0;
  int horizon = 0;
  double fit_loss = 0.0;
  double test_mape = 0.0;
};

struct ForecastOutcome {
  std::vector<ForecastRow> rows;

  double median(Variant v, int horizon) const {
    std::vector<double> x;
    for (const auto& r : rows) {
      if (r.variant == v && r.horizon == horizon) x.push_back(r.test_mape);
    }
    return x.empty() ? std::numeric_limits<double>::quiet_NaN() : loss_quantile(x, 0.5);
  }
};

/// Total-series MAPE over days (t_end, t_end + h] after fitting on the window.
inline double forecast_mape(const Dataset& data, const ModelParams& fitted, const FitWindow& window, int horizon) {
  if (horizon < 1 || window.t_end + horizon > data.horizon())
    throw ContractError("forecast horizon " + std::to_string(horizon) + " leaves the dataset");
  const auto first = static_cast<std::size_t>(window.t_end + 1);
  const auto n = static_cast<std::size_t>(horizon);
  try {
    const ObservedSeries pred = simulate_observed(data, fitted, window.t_end + horizon);
    return mape(std::span(data.observed.total).subspan(first, n), std::span(pred.total).subspan(first, n));
  } catch (const DivergenceError&) {
    return std::numeric_limits<double>::infinity();
  }
}

inline ForecastOutcome run_forecast(const RunConfig& cfg, const Dataset& data) {
  if (cfg.forecast.horizons.empty()) throw ConfigError("forecast needs at least one horizon");
  ForecastOutcome out;
  for (Variant v : {Variant::reparam, Variant::original}) {
    for (std::size_t r = 0; r < cfg.forecast.repeats; ++r) {
      const std::uint64_t seed =
          derive_seed(cfg.component_seed("forecast"), {static_cast<std::uint64_t>(v), static_cast<std::uint64_t>(r)});
      const FitOutcome fit = run_fit(cfg, data, v, cfg.window, seed);
      for (int h : cfg.forecast.horizons)
        out.rows.push_back({v, r, h, fit.result.best_loss, forecast_mape(data, fit.result.best_params, cfg.window, h)});
    }
  }
  return out;
}

struct StructuralOutcome {
  SensitivityReport reparam;
  SensitivityReport original;
};

inline SensitivityReport run_structural(const RunConfig& cfg, Variant v) {
  SensitivityOptions so;
  so.rel_step = cfg.structural.rel_step;
  so.near_null_ratio = cfg.structural.near_null_ratio;
  so.threads = cfg.threads;
  return sensitivity_matrix(cfg.dataset.true_params, cfg.resolved_dataset(), cfg.search_space(v),
                            day_range(cfg.structural.t_first, cfg.structural.t_last), so);
}

inline StructuralOutcome run_structural(const RunConfig& cfg) {
  return {run_structural(cfg, Variant::reparam), run_structural(cfg, Variant::original)};
}

// ------------------------------------------------------------------- artifacts

namespace artifacts {

namespace fs = std::filesystem;

inline std::string tag(Variant v) { return std::string(variant_name(v)); }
inline std::string pname(Param p) { return std::string(name_of(p)); }

inline json params_json(const ModelParams& p) {
  json j = json::object();
  for (Param q : kAllParams) j[pname(q)] = io::jnum(p.get(q));
  return j;
}

inline void write_manifest(const fs::path& dir, const RunConfig& cfg, const std::string& command) {
  json c = to_json(cfg);
  c.erase("output_dir");
  c.erase("threads");
  io::write_json(dir / "manifest.json", {{"command", command}, {"config", c}});
}

inline void write_dataset(const fs::path& dir, const Dataset& data) {
  io::CsvWriter csv(dir / "dataset.csv", {"day", "active", "recovered", "deceased", "total"});
  const auto& o = data.observed;
  for (std::size_t t = 0; t < o.times.size(); ++t) csv.row({o.times[t], o.active[t], o.recovered[t], o.deceased[t], o.total[t]});
  const auto& c = data.config;
  json j;
  j["rows"] = o.times.size();
  j["true_params"] = params_json(c.true_params);
  j["population_n"] = c.population_n;
  j["horizon"] = c.horizon;
  j["dt"] = c.dt;
  j["noise_sigma"] = c.noise.sigma;
  j["noise_seed"] = c.seed;
  j["initial"] = {{"active", c.init_observed.active},
                  {"recovered", c.init_observed.recovered},
                  {"deceased", c.init_observed.deceased}};
  io::write_json(dir / "dataset.json", j);
}

inline void write_fit(const fs::path& dir, const RunConfig& cfg, const FitOutcome& fit) {
  const SearchSpace space = cfg.search_space(fit.variant);
  const std::string stem = "fit_" + tag(fit.variant) + "_w" + std::to_string(fit.window.t_end);
  json pinned = json::object(), free = json::array();
  for (Param p : kAllParams) {
    if (space.is_free(p)) free.push_back(pname(p));
    else pinned[pname(p)] = io::jnum(*space.pinned[index_of(p)]);
  }
  json j;
  j["variant"] = tag(fit.variant);
  j["window"] = {{"t_begin", fit.window.t_begin}, {"t_end", fit.window.t_end}};
  j["method"] = std::string(method_name(cfg.optimizer.method));
  j["budget"] = cfg.optimizer.budget;
  j["budget_used"] = fit.result.budget_used;
  j["best_loss"] = io::jnum(fit.result.best_loss);
  j["best_params"] = params_json(fit.result.best_params);
  j["free"] = free;
  j["pinned"] = pinned;
  io::write_json(dir / (stem + ".json"), j);

  std::vector<std::string> header{"eval"};
  for (Param p : kAllParams) header.push_back(pname(p));
  header.push_back("loss");
  io::CsvWriter csv(dir / (stem + "_trace.csv"), header);
  for (std::size_t k = 0; k < fit.result.evaluations.size(); ++k) {
    const auto& e = fit.result.evaluations[k];
    std::vector<double> row{static_cast<double>(k)};
    for (Param p : kAllParams) row.push_back(e.params.get(p));
    row.push_back(e.loss);
    csv.row(row);
  }
}

inline json hpdi_json(const Hpdi& h) {
  return {{"alpha", h.alpha}, {"lo", io::jnum(h.lo)}, {"hi", io::jnum(h.hi)}, {"mass_check", h.mass_check}};
}

inline void write_mcmc(const fs::path& dir, const McmcOutcome& m) {
  const std::string stem = tag(m.variant) + "_w" + std::to_string(m.window.t_end);
  const auto free = m.config.space.free_params();

  std::vector<std::string> header{"chain", "draw"};
  for (Param p : kAllParams) header.push_back(pname(p));
  header.insert(header.end(), {"s", "log_lik", "posterior_loss", "fit_loss"});
  io::CsvWriter chains(dir / ("chains_" + stem + ".csv"), header);
  std::size_t k = 0;
  for (const auto& c : m.chains) {
    for (std::size_t d = 0; d < c.draws.size(); ++d, ++k) {
      std::vector<double> row{static_cast<double>(c.chain_id), static_cast<double>(d)};
      for (Param p : kAllParams) row.push_back(c.draws[d].theta.get(p));
      row.insert(row.end(), {c.draws[d].s, c.draws[d].log_post, m.posterior_losses[k], m.fit_losses[k]});
      chains.row(row);
    }
  }

  json j;
  j["variant"] = tag(m.variant);
  j["window"] = {{"t_begin", m.window.t_begin}, {"t_end", m.window.t_end}};
  j["n_chains"] = m.config.n_chains;
  j["n_samples"] = m.config.n_samples;
  j["n_burn"] = m.config.n_burn;
  j["thin"] = m.config.thin;
  j["max_rhat"] = io::jnum(m.max_rhat());
  json chain_diag = json::array();
  for (const auto& c : m.chains)
    chain_diag.push_back({{"chain", c.chain_id},
                          {"accept_rate", c.accept_rate},
                          {"burn_in_accept_rate", c.burn_in_accept_rate},
                          {"proposal_scale", io::jnum(c.proposal_scale)}});
  j["chains"] = chain_diag;
  json params = json::object();
  for (const auto& s : m.summaries) {
    params[pname(s.param)] = {{"rhat", io::jnum(s.rhat)},
                              {"ess", io::jnum(s.ess)},
                              {"mean", io::jnum(s.mean)},
                              {"median", io::jnum(s.median)},
                              {"hpdi", hpdi_json(s.hpdi)}};
    io::write_json(dir / ("hpdi_" + stem + "_" + pname(s.param) + ".json"),
                   {{"param", pname(s.param)}, {"hpdi", hpdi_json(s.hpdi)}});
    const auto draws = pooled_values(m.chains, s.param);
    const DensityCurve dens = marginal_density(draws);
    const DensityCurve nl = neg_log_density(dens);
    io::CsvWriter csv(dir / ("density_" + stem + "_" + pname(s.param) + ".csv"), {"theta", "density", "neg_log_density"});
    for (std::size_t g = 0; g < dens.grid.size(); ++g) csv.row({dens.grid[g], dens.values[g], nl.values[g]});
  }
  j["params"] = params;
  io::write_json(dir / ("posterior_" + stem + ".json"), j);

  std::vector<std::string> ch{"param"};
  for (Param p : free) ch.push_back(pname(p));
  io::CsvWriter corr(dir / ("correlation_" + stem + ".csv"), ch);
  for (std::size_t a = 0; a < free.size(); ++a) {
    std::vector<double> row;
    for (std::size_t b = 0; b < free.size(); ++b)
      row.push_back(m.correlation.rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    corr.row({pname(free[a])}, row);
  }
}

inline json interval_json(const PlInterval& iv) {
  json segs = json::array();
  for (const auto& s : iv.segments) segs.push_back({io::jnum(s.lo), io::jnum(s.hi)});
  return {{"alpha", iv.alpha},
          {"threshold", io::jnum(iv.threshold)},
          {"segments", segs},
          {"censored_left", iv.censored_left},
          {"censored_right", iv.censored_right}};
}

inline void write_profile(const fs::path& dir, const ProfileOutcome& p) {
  const std::string stem =
      "profile_" + tag(p.variant) + "_" + pname(p.curve.param) + "_w" + std::to_string(p.window.t_end);
  io::CsvWriter csv(dir / (stem + ".csv"), {"theta", "profiled_loss"});
  for (std::size_t j = 0; j < p.curve.size(); ++j) csv.row({p.curve.grid[j], p.curve.profiled_loss[j]});

  json failed = json::array();
  for (std::size_t j = 0; j < p.curve.size(); ++j) {
    if (p.curve.failed[j]) failed.push_back({{"theta", io::jnum(p.curve.grid[j])}, {"reason", p.curve.failure_reason[j]}});
  }
  json j;
  j["param"] = pname(p.curve.param);
  j["variant"] = tag(p.variant);
  j["window"] = {{"t_begin", p.window.t_begin}, {"t_end", p.window.t_end}};
  j["loss"] = p.loss == ProfileLoss::posterior ? "posterior" : "fit";
  j["threshold_mode"] = p.mode == ThresholdMode::posterior ? "posterior" : "chi2";
  j["verdict"] = std::string(verdict_name(p.verdict));
  j["min_loss"] = io::jnum(p.curve.min_loss());
  j["interval"] = interval_json(p.interval);
  j["failed_points"] = failed;
  io::write_json(dir / (stem + ".json"), j);
}

inline json sensitivity_json(const SensitivityReport& r) {
  json q = json::array();
  for (Param p : r.quantities) q.push_back(pname(p));
  json nn = json::array();
  for (const auto& d : r.near_null) {
    json load = json::object();
    for (std::size_t k = 0; k < d.loadings.size(); ++k) load[pname(r.quantities[k])] = d.loadings[k];
    nn.push_back({{"singular_value", d.singular_value}, {"loadings", load}});
  }
  std::vector<json> sv;
  for (double s : r.singular_values) sv.push_back(io::jnum(s));
  return {{"quantities", q},
          {"times", {r.times.front(), r.times.back()}},
          {"singular_values", sv},
          {"tolerance", r.tolerance},
          {"numeric_rank", r.numeric_rank},
          {"full_rank", r.full_rank()},
          {"condition_number", io::jnum(r.condition_number)},
          {"near_null", nn},
          {"evidence", "local numeric"}};
}

inline void write_structural(const fs::path& dir, const StructuralOutcome& s) {
  io::write_json(dir / "structural.json",
                 {{"reparam", sensitivity_json(s.reparam)}, {"original", sensitivity_json(s.original)}});
}

inline void write_forecast(const fs::path& dir, const RunConfig& cfg, const ForecastOutcome& f) {
  io::CsvWriter csv(dir / "forecast.csv", {"variant", "repeat", "horizon", "fit_loss", "test_mape"});
  for (const auto& r : f.rows)
    csv.row({tag(r.variant)}, {static_cast<double>(r.repeat), static_cast<double>(r.horizon), r.fit_loss, r.test_mape});
  json med = json::array();
  for (int h : cfg.forecast.horizons)
    med.push_back({{"horizon", h},
                   {"reparam", io::jnum(f.median(Variant::reparam, h))},
                   {"original", io::jnum(f.median(Variant::original, h))}});
  io::write_json(dir / "forecast.json",
                 {{"window", {{"t_begin", cfg.window.t_begin}, {"t_end", cfg.window.t_end}}},
                  {"series", "total"},
                  {"repeats", cfg.forecast.repeats},
                  {"median_test_mape", med}});
}

}  // namespace artifacts

// -------------------------------------------------------------------- commands

inline Dataset make_dataset(const RunConfig& cfg) { return generate(cfg.resolved_dataset()); }

inline std::filesystem::path prepare_dir(const RunConfig& cfg, const std::string& command) {
  std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  artifacts::write_manifest(dir, cfg, command);
  return dir;
}

inline void cmd_simulate(const RunConfig& cfg) {
  const auto dir = prepare_dir(cfg, "simulate");
  artifacts::write_dataset(dir, make_dataset(cfg));
}

inline FitOutcome cmd_fit(const RunConfig& cfg) {
  const auto dir = prepare_dir(cfg, "fit");
  const Dataset data = make_dataset(cfg);
  artifacts::write_dataset(dir, data);
  FitOutcome fit = run_fit(cfg, data, cfg.variant, cfg.window);
  artifacts::write_fit(dir, cfg, fit);
  return fit;
}

inline McmcOutcome cmd_mcmc(const RunConfig& cfg) {
  const auto dir = prepare_dir(cfg, "mcmc");
  const Dataset data = make_dataset(cfg);
  artifacts::write_dataset(dir, data);
  McmcOutcome m = run_mcmc(cfg, data, cfg.variant, cfg.window, cfg.profile.alpha);
  artifacts::write_mcmc(dir, m);
  return m;
}

/// Profiles every configured parameter for every configured training window.
inline std::vector<ProfileOutcome> profile_sweep(const RunConfig& cfg, const Dataset& data, Variant v,
                                                 const std::filesystem::path* dir) {
  std::vector<ProfileOutcome> out;
  for (int t_end : cfg.profile_windows()) {
    const FitWindow w{cfg.window.t_begin, t_end};
    const FitOutcome fit = run_fit(cfg, data, v, w);
    std::optional<McmcOutcome> mcmc;
    if (cfg.profile.threshold == ThresholdMode::posterior)
      mcmc = run_mcmc(cfg, data, v, w, cfg.profile.alpha, &fit.result.best_params);
    if (dir) {
      artifacts::write_fit(*dir, cfg, fit);
      if (mcmc) artifacts::write_mcmc(*dir, *mcmc);
    }
    for (Param p : cfg.profile.params) {
      if (!cfg.search_space(v).is_free(p)) continue;
      out.push_back(run_profile(cfg, data, v, w, p, fit, mcmc ? &*mcmc : nullptr));
      if (dir) artifacts::write_profile(*dir, out.back());
    }
  }
  return out;
}

inline std::vector<ProfileOutcome> cmd_profile(const RunConfig& cfg) {
  for (Param p : cfg.profile.params) {
    if (!cfg.search_space().is_free(p))
      throw ConfigError("'" + std::string(name_of(p)) + "' is pinned in the " + std::string(variant_name(cfg.variant)) +
                        " variant");
  }
  const auto dir = prepare_dir(cfg, "profile");
  const Dataset data = make_dataset(cfg);
  artifacts::write_dataset(dir, data);
  return profile_sweep(cfg, data, cfg.variant, &dir);
}

inline ForecastOutcome cmd_forecast_eval(const RunConfig& cfg) {
  const auto dir = prepare_dir(cfg, "forecast-eval");
  const Dataset data = make_dataset(cfg);
  artifacts::write_dataset(dir, data);
  ForecastOutcome f = run_forecast(cfg, data);
  artifacts::write_forecast(dir, cfg, f);
  return f;
}

inline StructuralOutcome cmd_structural(const RunConfig& cfg) {
  const auto dir = prepare_dir(cfg, "structural");
  StructuralOutcome s = run_structural(cfg);
  artifacts::write_structural(dir, s);
  return s;
}

/// Everything for both variants in one directory, plus a summary comparing
/// the profile and posterior views.
inline json cmd_report(const RunConfig& cfg) {
  const auto dir = prepare_dir(cfg, "report");
  const Dataset data = make_dataset(cfg);
  artifacts::write_dataset(dir, data);

  json summary;
  summary["window"] = {{"t_begin", cfg.window.t_begin}, {"t_end", cfg.window.t_end}};
  for (Variant v : {Variant::reparam, Variant::original}) {
    const FitOutcome fit = run_fit(cfg, data, v, cfg.window);
    artifacts::write_fit(dir, cfg, fit);
    const McmcOutcome mcmc = run_mcmc(cfg, data, v, cfg.window, cfg.profile.alpha, &fit.result.best_params);
    artifacts::write_mcmc(dir, mcmc);

    json vj;
    vj["fit_loss"] = io::jnum(fit.result.best_loss);
    vj["fit_params"] = artifacts::params_json(fit.result.best_params);
    vj["max_rhat"] = io::jnum(mcmc.max_rhat());
    json per = json::object();
    for (Param p : cfg.profile.params) {
      if (!cfg.search_space(v).is_free(p)) continue;
      const ProfileOutcome pr = run_profile(cfg, data, v, cfg.window, p, fit, &mcmc);
      artifacts::write_profile(dir, pr);
      const Hpdi& h = mcmc.summary(p).hpdi;
      const Segment hull = pr.interval.hull();
      const auto draws = pooled_values(mcmc.chains, p);
      const CurveAgreement agree = profile_density_agreement(pr.curve, draws);
      per[artifacts::pname(p)] = {{"verdict", std::string(verdict_name(pr.verdict))},
                                  {"j_pl", artifacts::interval_json(pr.interval)},
                                  {"hpdi", artifacts::hpdi_json(h)},
                                  {"jaccard", jaccard(h.lo, h.hi, hull.lo, hull.hi)},
                                  {"spearman_pl_vs_neg_log_density", agree.spearman},
                                  {"shared_points", agree.shared_points}};
    }
    vj["params"] = per;
    summary[artifacts::tag(v)] = vj;
  }

  const StructuralOutcome s = run_structural(cfg);
  artifacts::write_structural(dir, s);
  summary["structural"] = {{"reparam_rank", s.reparam.numeric_rank},
                           {"reparam_quantities", s.reparam.quantities.size()},
                           {"original_rank", s.original.numeric_rank},
                           {"original_condition_number", io::jnum(s.original.condition_number)}};

  const ForecastOutcome f = run_forecast(cfg, data);
  artifacts::write_forecast(dir, cfg, f);
  io::write_json(dir / "report.json", summary);
  return summary;
}

/// Known subcommands, in the order the usage text lists them.
inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "fit",           "profile",   "mcmc",
                                              "report",   "forecast-eval", "structural"};
  return names;
}

inline void run_command(const std::string& command, const RunConfig& cfg) {
  if (command == "simulate") cmd_simulate(cfg);
  else if (command == "fit") cmd_fit(cfg);
  else if (command == "profile") cmd_profile(cfg);
  else if (command == "mcmc") cmd_mcmc(cfg);
  else if (command == "report") cmd_report(cfg);
  else if (command == "forecast-eval") cmd_forecast_eval(cfg);
  else if (command == "structural") cmd_structural(cfg);
  else throw ConfigError("unknown command '" + command + "'");
}

/// Re-runs the command recorded in a manifest into `output_dir`.
inline void replay_manifest(const std::filesystem::path& manifest, const std::string& output_dir,
                            std::size_t threads = 1) {
  std::ifstream in(manifest);
  if (!in) throw ConfigError("cannot open manifest '" + manifest.string() + "'");
  const json m = json::parse(in, nullptr, false);
  if (m.is_discarded() || !m.contains("command") || !m.contains("config"))
    throw ConfigError("'" + manifest.string() + "' is not a run manifest");
  json doc = to_json(RunConfig{});
  doc.merge_patch(m.at("config"));
  RunConfig cfg = from_json(doc);
  cfg.output_dir = output_dir;
  cfg.threads = threads;
  cfg.validate();
  run_command(m.at("command").get<std::string>(), cfg);
}

}  // namespace seiard

#endif  // SEIARD_PIPELINE_HPP
