#ifndef SEIARD_PROFILE_HPP
#define SEIARD_PROFILE_HPP

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "seiard/errors.hpp"
#include "seiard/loss.hpp"
#include "seiard/optimize.hpp"
#include "seiard/params.hpp"
#include "seiard/random.hpp"
#include "seiard/synthdata.hpp"

namespace seiard {

enum class GridSpacing { linear, log };

/// Time constants are profiled on a log grid, everything else on a linear one.
inline GridSpacing default_spacing(Param p) noexcept {
  switch (p) {
    case Param::t_inc:
    case Param::t_inf:
    case Param::t_recov:
    case Param::t_fatal:
      return GridSpacing::log;
    default:
      return GridSpacing::linear;
  }
}

struct GridSpec {
  std::size_t points = 25;
  std::optional<double> lo;  // explicit range; otherwise derived from the center
  std::optional<double> hi;
  std::optional<GridSpacing> spacing;
  double rel_half_width = 0.2;  // linear grids: center * (1 +- rel_half_width)
  double log_factor = 1.5;      // log grids: center / factor .. center * factor
};

/// Increasing grid for `p`, clipped to `bound`. Without an explicit range it
/// is centered on `center`.
inline std::vector<double> make_grid(Param p, double center, const Bound& bound, const GridSpec& spec = {}) {
  if (spec.points < 1) throw ContractError("grid needs at least one point");
  const GridSpacing spacing = spec.spacing.value_or(default_spacing(p));
  double lo = 0.0, hi = 0.0;
  if (spacing == GridSpacing::linear) {
    const double half = spec.rel_half_width * std::abs(center);
    lo = spec.lo.value_or(center - half);
    hi = spec.hi.value_or(center + half);
  } else {
    if (!(spec.log_factor > 1.0)) throw ContractError("log grid factor must exceed 1");
    lo = spec.lo.value_or(center / spec.log_factor);
    hi = spec.hi.value_or(center * spec.log_factor);
  }
  lo = bound.clamp(lo);
  hi = bound.clamp(hi);
  if (spacing == GridSpacing::log && !(lo > 0.0)) throw ContractError("log grid needs a positive lower end");
  if (spec.points == 1) return {0.5 * (lo + hi)};
  if (!(lo < hi)) throw ContractError("grid range for '" + std::string(name_of(p)) + "' is empty");

  std::vector<double> grid(spec.points);
  const double n = static_cast<double>(spec.points - 1);
  for (std::size_t j = 0; j < spec.points; ++j) {
    const double t = static_cast<double>(j) / n;
    grid[j] = spacing == GridSpacing::linear ? lo + t * (hi - lo) : lo * std::pow(hi / lo, t);
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

struct PlCurve {
  Param param = Param::beta;
  std::vector<double> grid;
  std::vector<double> profiled_loss;  // +inf at failed points
  std::vector<ModelParams> argmins;
  std::vector<bool> failed;
  std::vector<std::string> failure_reason;
  std::vector<std::vector<Evaluation>> traces;  // filled when ProfileOptions::keep_traces

  std::size_t size() const noexcept { return grid.size(); }

  double min_loss() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < size(); ++j) {
      if (!failed[j]) m = std::min(m, profiled_loss[j]);
    }
    return m;
  }
};

struct ProfileOptions {
  OptimizerOptions optimizer{};  // budget is the per-grid-point inner budget
  FitWindow window{};  // used by the fit-loss profile only
  bool warm_start = true;
  bool keep_traces = false;
  std::optional<ModelParams> start;  // global fit the sweep starts from
};

/// Profile of an arbitrary objective along `param`: for each grid value pin it
/// and minimize over the remaining free quantities.
///
/// With warm starts the sweep walks outward from the grid point nearest the
/// start, first upward then downward, seeding each inner run with its
/// neighbor's argmin. Inner seeds derive from (optimizer seed, param, j), so
/// the result does not depend on the sweep order when warm starts are off.
inline PlCurve profile_objective(const Objective& objective, Param param, const std::vector<double>& grid,
                                 const SearchSpace& space, const ProfileOptions& options = {}) {
  space.validate();
  if (!space.is_free(param)) throw ContractError("'" + std::string(name_of(param)) + "' is pinned in this variant");
  if (grid.empty()) throw ContractError("profile grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end())
    throw ContractError("profile grid must be strictly increasing");
  const Bound& b = space.bounds[index_of(param)];
  if (!b.contains(grid.front()) || !b.contains(grid.back()))
    throw ContractError("profile grid leaves the search interval of '" + std::string(name_of(param)) + "'");

  const std::size_t n = grid.size();
  PlCurve curve;
  curve.param = param;
  curve.grid = grid;
  curve.profiled_loss.assign(n, std::numeric_limits<double>::infinity());
  curve.argmins.assign(n, ModelParams{});
  curve.failed.assign(n, false);
  curve.failure_reason.assign(n, "");
  if (options.keep_traces) curve.traces.assign(n, {});

  auto run_point = [&](std::size_t j, const std::optional<ModelParams>& neighbor) {
    SearchSpace inner = space;
    inner.pin(param, grid[j]);
    OptimizerOptions opts = options.optimizer;
    opts.seed = derive_seed(options.optimizer.seed, {static_cast<std::uint64_t>(index_of(param)), j});
    std::vector<ModelParams> warm;
    if (neighbor) {
      ModelParams w = *neighbor;
      w.set(param, grid[j]);
      warm.push_back(w);
    }
    try {
      OptResult r = minimize(objective, inner, opts, warm);
      curve.profiled_loss[j] = r.best_loss;
      curve.argmins[j] = r.best_params;
      if (options.keep_traces) curve.traces[j] = std::move(r.evaluations);
    } catch (const std::exception& e) {
      curve.failed[j] = true;
      curve.failure_reason[j] = e.what();
      ModelParams placeholder = space.assemble(space.free_values(options.start.value_or(ModelParams{})));
      placeholder.set(param, grid[j]);
      curve.argmins[j] = placeholder;
    }
  };

  if (!options.warm_start) {
    for (std::size_t j = 0; j < n; ++j) run_point(j, std::nullopt);
    return curve;
  }

  std::size_t center = 0;
  if (options.start) {
    const double x0 = options.start->get(param);
    for (std::size_t j = 1; j < n; ++j) {
      if (std::abs(grid[j] - x0) < std::abs(grid[center] - x0)) center = j;
    }
  }
  auto neighbor_of = [&](std::size_t from) -> std::optional<ModelParams> {
    if (curve.failed[from]) return std::nullopt;
    return curve.argmins[from];
  };
  run_point(center, options.start);
  for (std::size_t j = center + 1; j < n; ++j) run_point(j, neighbor_of(j - 1));
  for (std::size_t j = center; j-- > 0;) run_point(j, neighbor_of(j + 1));
  return curve;
}

/// Profile likelihood of the fit loss over `options.window`.
inline PlCurve profile_likelihood(const Dataset& data, Param param, const std::vector<double>& grid,
                                  const SearchSpace& space, const ProfileOptions& options = {}) {
  options.window.validate(data.horizon());
  const Objective objective = [&](const ModelParams& p) { return fit_loss(data, p, options.window); };
  return profile_objective(objective, param, grid, space, options);
}

enum class Verdict { identifiable, non_identifiable, inconclusive };

inline std::string_view verdict_name(Verdict v) noexcept {
  switch (v) {
    case Verdict::identifiable:
      return "identifiable";
    case Verdict::non_identifiable:
      return "non-identifiable";
    default:
      return "inconclusive";
  }
}

/// Shape test on the profiled loss. Slopes smaller than rel_tol times the
/// curve's range count as flat. A flat floor wider than 20% of the grid span,
/// or two or more basins, means non-identifiable; a single descent followed
/// by a single ascent means identifiable.
inline Verdict unimodality_verdict(const PlCurve& curve, double rel_tol = 0.02) {
  if (curve.size() < 5) throw ContractError("unimodality_verdict needs at least 5 grid points");
  std::vector<double> x, y;
  for (std::size_t j = 0; j < curve.size(); ++j) {
    if (curve.failed[j] || !std::isfinite(curve.profiled_loss[j])) continue;
    x.push_back(curve.grid[j]);
    y.push_back(curve.profiled_loss[j]);
  }
  if (x.size() < 5) return Verdict::inconclusive;

  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  const double range = *mx - *mn;
  const double tol = rel_tol * range;

  // flat floor: contiguous run around the argmin staying within tol of the minimum
  const auto arg = static_cast<std::size_t>(mn - y.begin());
  std::size_t left = arg, right = arg;
  while (left > 0 && y[left - 1] <= *mn + tol) --left;
  while (right + 1 < y.size() && y[right + 1] <= *mn + tol) ++right;
  const double span = x.back() - x.front();
  if (range <= 0.0 || x[right] - x[left] > 0.2 * span) return Verdict::non_identifiable;

  std::vector<int> signs;
  for (std::size_t j = 0; j + 1 < y.size(); ++j) {
    const double d = y[j + 1] - y[j];
    if (std::abs(d) <= tol) continue;
    signs.push_back(d > 0.0 ? 1 : -1);
  }
  if (signs.empty()) return Verdict::non_identifiable;

  std::size_t basins = 0, changes = 0;
  if (signs.front() > 0) ++basins;  // left edge is a local minimum
  if (signs.back() < 0) ++basins;   // right edge is a local minimum
  for (std::size_t k = 0; k + 1 < signs.size(); ++k) {
    if (signs[k] != signs[k + 1]) ++changes;
    if (signs[k] < 0 && signs[k + 1] > 0) ++basins;
  }
  if (basins >= 2) return Verdict::non_identifiable;
  if (changes == 1 && signs.front() < 0 && signs.back() > 0) return Verdict::identifiable;
  return Verdict::inconclusive;
}

struct Segment {
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct PlInterval {
  double alpha = 0.0;  // 0 when the threshold was given directly
  double threshold = 0.0;
  std::vector<Segment> segments;
  bool censored_left = false;
  bool censored_right = false;

  /// Smallest interval covering every segment.
  Segment hull() const {
    if (segments.empty()) return {};
    return {segments.front().lo, segments.back().hi};
  }
  double total_width() const noexcept {
    double w = 0.0;
    for (const auto& s : segments) w += s.width();
    return w;
  }
  bool contains(double x) const noexcept {
    return std::any_of(segments.begin(), segments.end(), [&](const Segment& s) { return x >= s.lo && x <= s.hi; });
  }
};

/// Sub-level set {theta : profiled_loss(theta) <= threshold} on the grid, with
/// crossings placed by linear interpolation. Failed points count as outside.
inline PlInterval pl_interval(const PlCurve& curve, double threshold) {
  const double m = curve.min_loss();
  if (!std::isfinite(m)) throw ContractError("profile curve has no successful grid point");
  if (threshold < m) throw ContractError("threshold lies below the profile minimum");

  const std::size_t n = curve.size();
  auto inside = [&](std::size_t j) { return !curve.failed[j] && curve.profiled_loss[j] <= threshold; };
  auto crossing = [&](std::size_t out, std::size_t in) {
    const double yo = curve.profiled_loss[out];
    const double yi = curve.profiled_loss[in];
    if (curve.failed[out] || !std::isfinite(yo) || yo == yi) return curve.grid[in];
    const double t = (threshold - yi) / (yo - yi);
    return curve.grid[in] + std::clamp(t, 0.0, 1.0) * (curve.grid[out] - curve.grid[in]);
  };

  PlInterval out;
  out.threshold = threshold;
  for (std::size_t j = 0; j < n;) {
    if (!inside(j)) {
      ++j;
      continue;
    }
    std::size_t k = j;
    while (k + 1 < n && inside(k + 1)) ++k;
    Segment s;
    s.lo = j == 0 ? curve.grid.front() : crossing(j - 1, j);
    s.hi = k + 1 == n ? curve.grid.back() : crossing(k + 1, k);
    if (j == 0) out.censored_left = true;
    if (k + 1 == n) out.censored_right = true;
    out.segments.push_back(s);
    j = k + 1;
  }
  return out;
}

/// Threshold min + chi2_1 quantile(alpha), the squared-loss alternative to the
/// posterior loss quantile.
inline double chi2_threshold(const PlCurve& curve, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ContractError("alpha must lie in (0, 1)");
  const boost::math::chi_squared_distribution<double> chi2(1.0);
  return curve.min_loss() + boost::math::quantile(chi2, alpha);
}

}  // namespace seiard

#endif  // SEIARD_PROFILE_HPP
