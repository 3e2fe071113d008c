#ifndef SEIARD_CONFIG_HPP
#define SEIARD_CONFIG_HPP

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "seiard/errors.hpp"
#include "seiard/loss.hpp"
#include "seiard/mcmc.hpp"
#include "seiard/optimize.hpp"
#include "seiard/params.hpp"
#include "seiard/profile.hpp"
#include "seiard/random.hpp"
#include "seiard/synthdata.hpp"

namespace seiard {

using nlohmann::json;

/// Bad configuration file or override. Reported as a usage error.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Variant { original, reparam };

inline std::string_view variant_name(Variant v) noexcept { return v == Variant::original ? "original" : "reparam"; }

inline Variant variant_from_name(std::string_view s) {
  if (s == "original") return Variant::original;
  if (s == "reparam") return Variant::reparam;
  throw ConfigError("unknown variant '" + std::string(s) + "' (expected original or reparam)");
}

enum class ThresholdMode { posterior, chi2 };
enum class McmcInit { fit, uniform };
enum class ProfileLoss { posterior, fit };

struct ProfileConfig {
  std::vector<Param> params{Param::beta, Param::p_fatal};
  std::vector<int> windows{};  // training window ends; empty means the run's window
  std::size_t points = 25;
  std::size_t inner_budget = 500;
  double alpha = 0.95;
  ThresholdMode threshold = ThresholdMode::posterior;
  ProfileLoss loss = ProfileLoss::posterior;
  bool warm_start = true;
  double rel_tol = 0.005;
  // fixed ranges keep curves of both variants on the same axis
  std::map<Param, GridSpec> grids{{Param::beta, fixed_grid(0.2, 0.3)}, {Param::p_fatal, fixed_grid(0.0, 0.2)}};

  static GridSpec fixed_grid(double lo, double hi) {
    GridSpec g;
    g.lo = lo;
    g.hi = hi;
    return g;
  }
};

struct ForecastConfig {
  std::vector<int> horizons{1, 7, 14, 25, 50, 100, 200, 300};
  std::size_t repeats = 5;
};

struct StructuralConfig {
  int t_first = 1;
  int t_last = 28;
  double rel_step = 1e-4;
  double near_null_ratio = 5e-3;
};

struct RunConfig {
  std::uint64_t seed = 20211;
  DatasetConfig dataset{};
  Variant variant = Variant::reparam;
  ParamVector pinned_values = reference_params().to_array();  // source of the reparam pins
  BoundVector bounds = reference_bounds();
  FitWindow window{};
  OptimizerOptions optimizer{Method::random_nelder_mead, 500, 0, {}, {}};
  McmcConfig mcmc{};  // space, window, seed and start are filled in per run
  McmcInit mcmc_init = McmcInit::fit;
  ProfileConfig profile{};
  ForecastConfig forecast{};
  StructuralConfig structural{};
  std::string output_dir = "seiard-run";
  std::size_t threads = 1;

  /// Quantities held fixed by the reparameterized variant.
  static constexpr std::array<Param, 3> kReparamPins = {Param::t_inc, Param::t_inf, Param::t_fatal};

  SearchSpace search_space(Variant v) const {
    SearchSpace sp;
    sp.bounds = bounds;
    if (v == Variant::reparam) {
      for (Param p : kReparamPins) sp.pin(p, pinned_values[index_of(p)]);
    }
    return sp;
  }
  SearchSpace search_space() const { return search_space(variant); }

  std::uint64_t component_seed(std::string_view component) const { return derive_seed(seed, component); }

  DatasetConfig resolved_dataset() const {
    DatasetConfig d = dataset;
    d.seed = component_seed("synthdata");
    return d;
  }

  OptimizerOptions optimizer_for(std::string_view component) const {
    OptimizerOptions o = optimizer;
    o.seed = component_seed(component);
    return o;
  }

  McmcConfig mcmc_for(Variant v, const FitWindow& w) const {
    McmcConfig m = mcmc;
    m.space = search_space(v);
    m.window = w;
    m.seed = derive_seed(component_seed("mcmc"), {static_cast<std::uint64_t>(v), static_cast<std::uint64_t>(w.t_begin),
                                                  static_cast<std::uint64_t>(w.t_end)});
    return m;
  }

  std::vector<int> profile_windows() const {
    return profile.windows.empty() ? std::vector<int>{window.t_end} : profile.windows;
  }

  void validate() const {
    dataset.validate();
    window.validate(dataset.horizon);
    search_space(variant).validate();
    search_space(Variant::original).validate();
    if (optimizer.budget < 1) throw ConfigError("optimizer.budget must be >= 1");
    mcmc_for(variant, window).validate();
    if (profile.points < 1) throw ConfigError("profile.points must be >= 1");
    if (profile.inner_budget < 1) throw ConfigError("profile.inner_budget must be >= 1");
    if (!(profile.alpha > 0.0 && profile.alpha < 1.0)) throw ConfigError("profile.alpha must lie in (0, 1)");
    for (int t : profile_windows()) FitWindow{window.t_begin, t}.validate(dataset.horizon);
    for (int h : forecast.horizons) {
      if (h < 1 || window.t_end + h > dataset.horizon)
        throw ConfigError("forecast horizon " + std::to_string(h) + " leaves the dataset");
    }
    if (forecast.repeats < 1) throw ConfigError("forecast.repeats must be >= 1");
    if (structural.t_first < 0 || structural.t_first > structural.t_last || structural.t_last > dataset.horizon)
      throw ConfigError("structural time range outside the dataset");
    if (threads < 1) throw ConfigError("threads must be >= 1");
  }
};

namespace detail {

inline json params_to_json(const ParamVector& v) {
  json j = json::object();
  for (Param p : kAllParams) j[std::string(name_of(p))] = v[index_of(p)];
  return j;
}

inline Param param_or_throw(const std::string& name) {
  const auto p = param_from_name(name);
  if (!p) throw ConfigError("unknown parameter '" + name + "'");
  return *p;
}

inline void params_from_json(const json& j, ParamVector& out) {
  for (const auto& [k, v] : j.items()) out[index_of(param_or_throw(k))] = v.get<double>();
}

// rejects keys outside `allowed` so typos in config files do not pass silently
inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline std::optional<GridSpacing> spacing_from_name(const std::string& s) {
  if (s == "auto") return std::nullopt;
  if (s == "linear") return GridSpacing::linear;
  if (s == "log") return GridSpacing::log;
  throw ConfigError("unknown grid spacing '" + s + "'");
}

}  // namespace detail

inline json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["variant"] = std::string(variant_name(c.variant));
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;

  json d;
  d["true_params"] = detail::params_to_json(c.dataset.true_params.to_array());
  d["population_n"] = c.dataset.population_n;
  d["horizon"] = c.dataset.horizon;
  d["initial"] = {{"active", c.dataset.init_observed.active},
                  {"recovered", c.dataset.init_observed.recovered},
                  {"deceased", c.dataset.init_observed.deceased}};
  d["noise_sigma"] = c.dataset.noise.sigma;
  d["dt"] = c.dataset.dt;
  d["a0_fatal_fraction"] = c.dataset.a0_fatal_fraction ? json(*c.dataset.a0_fatal_fraction) : json(nullptr);
  j["dataset"] = d;

  j["pinned_values"] = detail::params_to_json(c.pinned_values);
  json b = json::object();
  for (Param p : kAllParams) b[std::string(name_of(p))] = {c.bounds[index_of(p)].lo, c.bounds[index_of(p)].hi};
  j["bounds"] = b;
  j["window"] = {{"t_begin", c.window.t_begin}, {"t_end", c.window.t_end}};

  j["optimizer"] = {{"method", std::string(method_name(c.optimizer.method))},
                    {"budget", c.optimizer.budget},
                    {"tpe",
                     {{"n_init", c.optimizer.tpe.n_init},
                      {"gamma", c.optimizer.tpe.gamma},
                      {"n_candidates", c.optimizer.tpe.n_candidates}}},
                    {"nelder_mead",
                     {{"n_random", c.optimizer.nelder_mead.n_random},
                      {"initial_step", c.optimizer.nelder_mead.initial_step},
                      {"collapse_ratio", c.optimizer.nelder_mead.collapse_ratio},
                      {"restart_shrink", c.optimizer.nelder_mead.restart_shrink},
                      {"x_tol", c.optimizer.nelder_mead.x_tol},
                      {"f_tol", c.optimizer.nelder_mead.f_tol}}}};

  const McmcConfig& m = c.mcmc;
  j["mcmc"] = {{"proposal_variances", detail::params_to_json(m.proposal_variances)},
               {"u", m.u},
               {"v", m.v},
               {"n_samples", m.n_samples},
               {"n_burn", m.n_burn},
               {"n_chains", m.n_chains},
               {"thin", m.thin},
               {"include_total", m.include_total},
               {"adapt_during_burn_in", m.adapt_during_burn_in},
               {"adapt_shape", m.adapt_shape},
               {"shape_window", m.shape_window},
               {"hastings_correction", m.hastings_correction},
               {"target_accept", m.target_accept},
               {"init", c.mcmc_init == McmcInit::fit ? "fit" : "uniform"},
               {"start_spread", m.start_spread}};

  json grids = json::object();
  for (const auto& [p, g] : c.profile.grids) {
    json gj;
    gj["lo"] = g.lo ? json(*g.lo) : json(nullptr);
    gj["hi"] = g.hi ? json(*g.hi) : json(nullptr);
    gj["spacing"] = !g.spacing ? "auto" : (*g.spacing == GridSpacing::linear ? "linear" : "log");
    gj["rel_half_width"] = g.rel_half_width;
    gj["log_factor"] = g.log_factor;
    grids[std::string(name_of(p))] = gj;
  }
  json names = json::array();
  for (Param p : c.profile.params) names.push_back(std::string(name_of(p)));
  j["profile"] = {{"params", names},
                  {"windows", c.profile.windows},
                  {"points", c.profile.points},
                  {"inner_budget", c.profile.inner_budget},
                  {"alpha", c.profile.alpha},
                  {"threshold", c.profile.threshold == ThresholdMode::posterior ? "posterior" : "chi2"},
                  {"loss", c.profile.loss == ProfileLoss::posterior ? "posterior" : "fit"},
                  {"warm_start", c.profile.warm_start},
                  {"rel_tol", c.profile.rel_tol},
                  {"grids", grids}};
  j["forecast"] = {{"horizons", c.forecast.horizons}, {"repeats", c.forecast.repeats}};
  j["structural"] = {{"t_first", c.structural.t_first},
                     {"t_last", c.structural.t_last},
                     {"rel_step", c.structural.rel_step},
                     {"near_null_ratio", c.structural.near_null_ratio}};
  return j;
}

/// Reads a configuration on top of the defaults; missing keys keep their
/// default values, unknown keys are errors.
inline RunConfig from_json(const json& j) {
  using detail::check_keys;
  using detail::read;
  RunConfig c;
  try {
    check_keys(j,
               {"seed", "variant", "output_dir", "threads", "dataset", "pinned_values", "bounds", "window", "optimizer",
                "mcmc", "profile", "forecast", "structural"},
               "config");
    read(j, "seed", c.seed);
    if (j.contains("variant")) c.variant = variant_from_name(j.at("variant").get<std::string>());
    read(j, "output_dir", c.output_dir);
    read(j, "threads", c.threads);

    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      check_keys(d, {"true_params", "population_n", "horizon", "initial", "noise_sigma", "dt", "a0_fatal_fraction"},
                 "dataset");
      if (d.contains("true_params")) {
        check_keys(d.at("true_params"), {kParamNames.begin(), kParamNames.end()}, "dataset.true_params");
        ParamVector v = c.dataset.true_params.to_array();
        detail::params_from_json(d.at("true_params"), v);
        c.dataset.true_params = ModelParams::from_array(v);
      }
      read(d, "population_n", c.dataset.population_n);
      read(d, "horizon", c.dataset.horizon);
      if (d.contains("initial")) {
        const json& i = d.at("initial");
        check_keys(i, {"active", "recovered", "deceased"}, "dataset.initial");
        read(i, "active", c.dataset.init_observed.active);
        read(i, "recovered", c.dataset.init_observed.recovered);
        read(i, "deceased", c.dataset.init_observed.deceased);
      }
      read(d, "noise_sigma", c.dataset.noise.sigma);
      read(d, "dt", c.dataset.dt);
      if (d.contains("a0_fatal_fraction")) {
        const json& a = d.at("a0_fatal_fraction");
        c.dataset.a0_fatal_fraction = a.is_null() ? std::nullopt : std::optional<double>(a.get<double>());
      }
    }
    if (j.contains("pinned_values")) {
      check_keys(j.at("pinned_values"), {kParamNames.begin(), kParamNames.end()}, "pinned_values");
      detail::params_from_json(j.at("pinned_values"), c.pinned_values);
    }
    if (j.contains("bounds")) {
      for (const auto& [k, v] : j.at("bounds").items()) {
        if (!v.is_array() || v.size() != 2) throw ConfigError("bounds." + k + " must be [lo, hi]");
        c.bounds[index_of(detail::param_or_throw(k))] = {v[0].get<double>(), v[1].get<double>()};
      }
    }
    if (j.contains("window")) {
      check_keys(j.at("window"), {"t_begin", "t_end"}, "window");
      read(j.at("window"), "t_begin", c.window.t_begin);
      read(j.at("window"), "t_end", c.window.t_end);
    }
    if (j.contains("optimizer")) {
      const json& o = j.at("optimizer");
      check_keys(o, {"method", "budget", "tpe", "nelder_mead"}, "optimizer");
      if (o.contains("method")) {
        const auto m = method_from_name(o.at("method").get<std::string>());
        if (!m) throw ConfigError("unknown optimizer method '" + o.at("method").get<std::string>() + "'");
        c.optimizer.method = *m;
      }
      read(o, "budget", c.optimizer.budget);
      if (o.contains("tpe")) {
        const json& t = o.at("tpe");
        check_keys(t, {"n_init", "gamma", "n_candidates"}, "optimizer.tpe");
        read(t, "n_init", c.optimizer.tpe.n_init);
        read(t, "gamma", c.optimizer.tpe.gamma);
        read(t, "n_candidates", c.optimizer.tpe.n_candidates);
      }
      if (o.contains("nelder_mead")) {
        const json& n = o.at("nelder_mead");
        check_keys(n, {"n_random", "initial_step", "collapse_ratio", "restart_shrink", "x_tol", "f_tol"},
                   "optimizer.nelder_mead");
        auto& nm = c.optimizer.nelder_mead;
        read(n, "n_random", nm.n_random);
        read(n, "initial_step", nm.initial_step);
        read(n, "collapse_ratio", nm.collapse_ratio);
        read(n, "restart_shrink", nm.restart_shrink);
        read(n, "x_tol", nm.x_tol);
        read(n, "f_tol", nm.f_tol);
      }
    }
    if (j.contains("mcmc")) {
      const json& m = j.at("mcmc");
      check_keys(m,
                 {"proposal_variances", "u", "v", "n_samples", "n_burn", "n_chains", "thin", "include_total",
                  "adapt_during_burn_in", "adapt_shape", "shape_window", "hastings_correction", "target_accept",
                  "init", "start_spread"},
                 "mcmc");
      if (m.contains("proposal_variances")) {
        check_keys(m.at("proposal_variances"), {kParamNames.begin(), kParamNames.end()}, "mcmc.proposal_variances");
        detail::params_from_json(m.at("proposal_variances"), c.mcmc.proposal_variances);
      }
      read(m, "u", c.mcmc.u);
      read(m, "v", c.mcmc.v);
      read(m, "n_samples", c.mcmc.n_samples);
      read(m, "n_burn", c.mcmc.n_burn);
      read(m, "n_chains", c.mcmc.n_chains);
      read(m, "thin", c.mcmc.thin);
      read(m, "include_total", c.mcmc.include_total);
      read(m, "adapt_during_burn_in", c.mcmc.adapt_during_burn_in);
      read(m, "adapt_shape", c.mcmc.adapt_shape);
      read(m, "shape_window", c.mcmc.shape_window);
      read(m, "hastings_correction", c.mcmc.hastings_correction);
      read(m, "target_accept", c.mcmc.target_accept);
      if (m.contains("init")) {
        const auto t = m.at("init").get<std::string>();
        if (t == "fit") c.mcmc_init = McmcInit::fit;
        else if (t == "uniform") c.mcmc_init = McmcInit::uniform;
        else throw ConfigError("mcmc.init must be fit or uniform");
      }
      read(m, "start_spread", c.mcmc.start_spread);
    }
    if (j.contains("profile")) {
      const json& p = j.at("profile");
      check_keys(p,
                 {"params", "windows", "points", "inner_budget", "alpha", "threshold", "loss", "warm_start", "rel_tol",
                  "grids"},
                 "profile");
      if (p.contains("params")) {
        c.profile.params.clear();
        for (const auto& n : p.at("params")) c.profile.params.push_back(detail::param_or_throw(n.get<std::string>()));
      }
      read(p, "windows", c.profile.windows);
      read(p, "points", c.profile.points);
      read(p, "inner_budget", c.profile.inner_budget);
      read(p, "alpha", c.profile.alpha);
      if (p.contains("threshold")) {
        const auto t = p.at("threshold").get<std::string>();
        if (t == "posterior") c.profile.threshold = ThresholdMode::posterior;
        else if (t == "chi2") c.profile.threshold = ThresholdMode::chi2;
        else throw ConfigError("profile.threshold must be posterior or chi2");
      }
      if (p.contains("loss")) {
        const auto t = p.at("loss").get<std::string>();
        if (t == "posterior") c.profile.loss = ProfileLoss::posterior;
        else if (t == "fit") c.profile.loss = ProfileLoss::fit;
        else throw ConfigError("profile.loss must be posterior or fit");
      }
      read(p, "warm_start", c.profile.warm_start);
      read(p, "rel_tol", c.profile.rel_tol);
      if (p.contains("grids")) {
        c.profile.grids.clear();
        for (const auto& [k, g] : p.at("grids").items()) {
          check_keys(g, {"lo", "hi", "spacing", "rel_half_width", "log_factor"}, "profile.grids." + k);
          GridSpec spec;
          if (g.contains("lo") && !g.at("lo").is_null()) spec.lo = g.at("lo").get<double>();
          if (g.contains("hi") && !g.at("hi").is_null()) spec.hi = g.at("hi").get<double>();
          if (g.contains("spacing")) spec.spacing = detail::spacing_from_name(g.at("spacing").get<std::string>());
          read(g, "rel_half_width", spec.rel_half_width);
          read(g, "log_factor", spec.log_factor);
          c.profile.grids[detail::param_or_throw(k)] = spec;
        }
      }
    }
    if (j.contains("forecast")) {
      check_keys(j.at("forecast"), {"horizons", "repeats"}, "forecast");
      read(j.at("forecast"), "horizons", c.forecast.horizons);
      read(j.at("forecast"), "repeats", c.forecast.repeats);
    }
    if (j.contains("structural")) {
      const json& s = j.at("structural");
      check_keys(s, {"t_first", "t_last", "rel_step", "near_null_ratio"}, "structural");
      read(s, "t_first", c.structural.t_first);
      read(s, "t_last", c.structural.t_last);
      read(s, "rel_step", c.structural.rel_step);
      read(s, "near_null_ratio", c.structural.near_null_ratio);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

/// Applies `a.b.c=value` to a JSON document. The value is parsed as JSON when
/// possible and taken as a string otherwise.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override path '" + path + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override path '" + path + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

/// Defaults, then the file (if any), then the overrides in order. A run
/// manifest is accepted in place of a plain config file.
inline RunConfig load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
  json doc = to_json(RunConfig{});
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file '" + *path + "'");
    json file = json::parse(in, nullptr, false);
    if (file.is_discarded()) throw ConfigError("config file '" + *path + "' is not valid JSON");
    if (file.is_object() && file.contains("command") && file.contains("config")) file = file.at("config");
    doc.merge_patch(file);
  }
  for (const auto& o : overrides) apply_override(doc, o);
  RunConfig c = from_json(doc);
  c.validate();
  return c;
}

}  // namespace seiard

#endif  // SEIARD_CONFIG_HPP
