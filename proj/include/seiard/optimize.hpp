#ifndef SEIARD_OPTIMIZE_HPP
#define SEIARD_OPTIMIZE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "seiard/errors.hpp"
#include "seiard/params.hpp"
#include "seiard/random.hpp"
#include "seiard/truncated_normal.hpp"

namespace seiard {

enum class Method { tpe, random_nelder_mead };

inline std::string_view method_name(Method m) noexcept {
  return m == Method::tpe ? "tpe" : "random+nm";
}

inline std::optional<Method> method_from_name(std::string_view name) {
  if (name == "tpe") return Method::tpe;
  if (name == "random+nm" || name == "random_nm") return Method::random_nelder_mead;
  return std::nullopt;
}

struct TpeSettings {
  std::size_t n_init = 20;
  double gamma = 0.25;
  std::size_t n_candidates = 24;
};

struct NelderMeadSettings {
  std::size_t n_random = 30;     // uniform draws before the simplex phase
  double initial_step = 0.2;     // simplex edge as a fraction of each interval width
  double collapse_ratio = 0.1;   // restart once the simplex shrinks below this fraction of its edge
  double restart_shrink = 0.5;   // edge multiplier applied at each restart
  double x_tol = 1e-12;          // relative to interval width
  double f_tol = 1e-14;
};

struct OptimizerOptions {
  Method method = Method::tpe;
  std::size_t budget = 500;
  std::uint64_t seed = 0;
  TpeSettings tpe{};
  NelderMeadSettings nelder_mead{};
};

// Generic box-constrained minimization over R^d. The ModelParams-facing
// `minimize` below maps the free coordinates of a SearchSpace onto this.
namespace opt {

using Point = std::vector<double>;

struct Trial {
  Point x;
  double f = 0.0;
};

struct BoxResult {
  Point best_x;
  double best_f = std::numeric_limits<double>::infinity();
  std::vector<Trial> trials;
};

namespace detail {

template <class F>
class Evaluator {
 public:
  Evaluator(F& f, std::size_t budget) : f_(f), budget_(budget) {}

  bool exhausted() const noexcept { return result_.trials.size() >= budget_; }
  std::size_t used() const noexcept { return result_.trials.size(); }

  double operator()(const Point& x) {
    double fx = f_(x);
    if (std::isnan(fx)) fx = std::numeric_limits<double>::infinity();
    if (result_.trials.empty() || fx < result_.best_f) {
      result_.best_f = fx;
      result_.best_x = x;
    }
    result_.trials.push_back({x, fx});
    return fx;
  }

  const std::vector<Trial>& trials() const noexcept { return result_.trials; }
  BoxResult take() { return std::move(result_); }

 private:
  F& f_;
  std::size_t budget_;
  BoxResult result_;
};

inline Point uniform_point(const std::vector<Bound>& box, Rng& rng) {
  Point x(box.size());
  for (std::size_t j = 0; j < box.size(); ++j) {
    std::uniform_real_distribution<double> u(box[j].lo, box[j].hi);
    x[j] = u(rng);
  }
  return x;
}

inline Point clip(Point x, const std::vector<Bound>& box) {
  for (std::size_t j = 0; j < box.size(); ++j) x[j] = box[j].clamp(x[j]);
  return x;
}

/// One-dimensional Parzen mixture: a uniform prior component plus one
/// truncated Gaussian kernel per observation, equally weighted.
struct ParzenMixture {
  std::vector<double> centers;
  double bandwidth = 1.0;
  Bound bound;

  double density(double x) const {
    const double w = 1.0 / static_cast<double>(centers.size() + 1);
    double acc = w / bound.width();
    for (double c : centers) acc += w * truncnorm::pdf(x, c, bandwidth, bound.lo, bound.hi);
    return acc;
  }

  double sample(Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, centers.size());
    const std::size_t k = pick(rng);
    if (k == centers.size()) {
      std::uniform_real_distribution<double> u(bound.lo, bound.hi);
      return u(rng);
    }
    return truncnorm::sample(centers[k], bandwidth, bound.lo, bound.hi, rng);
  }
};

inline ParzenMixture make_mixture(const std::vector<const Trial*>& group, std::size_t dim, Bound bound) {
  ParzenMixture m;
  m.bound = bound;
  m.centers.reserve(group.size());
  for (const Trial* t : group) m.centers.push_back(t->x[dim]);
  m.bandwidth = bound.width() / std::sqrt(static_cast<double>(std::max<std::size_t>(group.size(), 1)));
  return m;
}

template <class F>
void run_tpe(Evaluator<F>& ev, const std::vector<Bound>& box, const TpeSettings& s, Rng& rng) {
  while (!ev.exhausted() && ev.used() < s.n_init) ev(uniform_point(box, rng));

  const std::size_t d = box.size();
  while (!ev.exhausted()) {
    const auto& trials = ev.trials();
    std::vector<const Trial*> order;
    order.reserve(trials.size());
    for (const auto& t : trials) order.push_back(&t);
    std::stable_sort(order.begin(), order.end(),
                     [](const Trial* a, const Trial* b) { return a->f < b->f; });

    const auto n = static_cast<double>(order.size());
    std::size_t n_good = static_cast<std::size_t>(std::ceil(s.gamma * n));
    n_good = std::clamp<std::size_t>(n_good, 1, order.size() - 1);
    const std::vector<const Trial*> good(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_good));
    const std::vector<const Trial*> bad(order.begin() + static_cast<std::ptrdiff_t>(n_good), order.end());

    std::vector<ParzenMixture> l, g;
    l.reserve(d);
    g.reserve(d);
    for (std::size_t j = 0; j < d; ++j) {
      l.push_back(make_mixture(good, j, box[j]));
      g.push_back(make_mixture(bad, j, box[j]));
    }

    Point best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < std::max<std::size_t>(s.n_candidates, 1); ++c) {
      Point x(d);
      double score = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        x[j] = l[j].sample(rng);
        score += std::log(l[j].density(x[j])) - std::log(g[j].density(x[j]));
      }
      if (best.empty() || score > best_score) {
        best_score = score;
        best = std::move(x);
      }
    }
    ev(best);
  }
}

/// Nelder-Mead with every trial vertex clipped into the box. Restarts around
/// the incumbent with a shrunken edge whenever the simplex collapses, which
/// keeps it moving along narrow valleys and off box faces.
template <class F>
void run_nelder_mead(Evaluator<F>& ev, const std::vector<Bound>& box, const NelderMeadSettings& s,
                     Point start, double f_start) {
  const std::size_t d = box.size();
  double step = s.initial_step;

  while (!ev.exhausted()) {
    std::vector<Point> simplex{start};
    std::vector<double> fv{f_start};
    for (std::size_t j = 0; j < d && !ev.exhausted(); ++j) {
      Point v = start;
      const double h = step * box[j].width();
      v[j] = (v[j] + h <= box[j].hi) ? v[j] + h : v[j] - h;
      v = clip(std::move(v), box);
      fv.push_back(ev(v));
      simplex.push_back(std::move(v));
    }
    if (simplex.size() < d + 1) return;

    std::vector<std::size_t> idx(d + 1);
    while (!ev.exhausted()) {
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
      const std::size_t ib = idx.front(), iw = idx.back(), isw = idx[d - 1];

      double spread = 0.0;
      for (std::size_t k = 1; k <= d; ++k) {
        for (std::size_t j = 0; j < d; ++j)
          spread = std::max(spread, std::abs(simplex[idx[k]][j] - simplex[ib][j]) / box[j].width());
      }
      const bool f_flat = std::isfinite(fv[iw]) && std::abs(fv[iw] - fv[ib]) <= s.f_tol * (1.0 + std::abs(fv[ib]));
      if (spread < s.collapse_ratio * step || spread < s.x_tol || f_flat) break;

      Point centroid(d, 0.0);
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t j = 0; j < d; ++j) centroid[j] += simplex[idx[k]][j] / static_cast<double>(d);
      }
      auto along = [&](double t) {
        Point p(d);
        for (std::size_t j = 0; j < d; ++j) p[j] = centroid[j] + t * (simplex[iw][j] - centroid[j]);
        return clip(std::move(p), box);
      };

      Point xr = along(-1.0);
      const double fr = ev(xr);
      if (fr < fv[ib]) {
        if (ev.exhausted()) break;
        Point xe = along(-2.0);
        const double fe = ev(xe);
        if (fe < fr) {
          simplex[iw] = std::move(xe);
          fv[iw] = fe;
        } else {
          simplex[iw] = std::move(xr);
          fv[iw] = fr;
        }
        continue;
      }
      if (fr < fv[isw]) {
        simplex[iw] = std::move(xr);
        fv[iw] = fr;
        continue;
      }
      if (ev.exhausted()) break;
      const bool outside = fr < fv[iw];
      Point xc = along(outside ? -0.5 : 0.5);
      const double fc = ev(xc);
      if (fc < (outside ? fr : fv[iw])) {
        simplex[iw] = std::move(xc);
        fv[iw] = fc;
        continue;
      }
      for (std::size_t k = 1; k <= d && !ev.exhausted(); ++k) {
        Point& v = simplex[idx[k]];
        for (std::size_t j = 0; j < d; ++j) v[j] = simplex[ib][j] + 0.5 * (v[j] - simplex[ib][j]);
        fv[idx[k]] = ev(v);
      }
    }

    const auto best = std::min_element(fv.begin(), fv.end());
    start = simplex[static_cast<std::size_t>(best - fv.begin())];
    f_start = *best;
    step = std::max(s.restart_shrink * step, 1e-9);
  }
}

}  // namespace detail

/// Minimizes `f` over the box with exactly min(budget, ...) evaluations.
/// `seeds` are evaluated first (clipped into the box) and count against the budget.
template <class F>
BoxResult minimize_box(F&& f, const std::vector<Bound>& box, const OptimizerOptions& options,
                       const std::vector<Point>& seeds = {}) {
  if (options.budget < 1) throw ContractError("optimizer budget must be >= 1");
  for (const auto& b : box) {
    if (!(b.lo < b.hi)) throw ContractError("free interval must satisfy lo < hi");
  }
  Rng rng(options.seed);
  detail::Evaluator<std::remove_reference_t<F>> ev(f, options.budget);

  for (const auto& p : seeds) {
    if (ev.exhausted()) break;
    if (p.size() != box.size()) throw ContractError("seed point has wrong dimension");
    ev(detail::clip(p, box));
  }

  if (options.method == Method::tpe) {
    detail::run_tpe(ev, box, options.tpe, rng);
  } else {
    while (!ev.exhausted() && ev.used() < std::max<std::size_t>(options.nelder_mead.n_random, 1))
      ev(detail::uniform_point(box, rng));
    if (!ev.exhausted() && !box.empty()) {
      const auto& trials = ev.trials();
      const auto best = std::min_element(trials.begin(), trials.end(),
                                         [](const Trial& a, const Trial& b) { return a.f < b.f; });
      detail::run_nelder_mead(ev, box, options.nelder_mead, best->x, best->f);
    }
  }

  BoxResult result = ev.take();
  if (!std::isfinite(result.best_f)) throw NoFeasiblePointError("no feasible point: every evaluation was +inf");
  return result;
}

}  // namespace opt

/// Fitting box with an optional pinned value per quantity.
struct SearchSpace {
  BoundVector bounds = reference_bounds();
  std::array<std::optional<double>, kNumParams> pinned{};

  static SearchSpace reference() { return {}; }

  SearchSpace& pin(Param p, double value) {
    pinned[index_of(p)] = value;
    return *this;
  }

  bool is_free(Param p) const noexcept { return !pinned[index_of(p)].has_value(); }

  std::vector<Param> free_params() const {
    std::vector<Param> out;
    for (Param p : kAllParams) {
      if (is_free(p)) out.push_back(p);
    }
    return out;
  }

  void validate() const {
    for (Param p : kAllParams) {
      const Bound& b = bounds[index_of(p)];
      const auto& pin = pinned[index_of(p)];
      if (pin) {
        if (!b.contains(*pin))
          throw ContractError("pinned value of '" + std::string(name_of(p)) + "' outside its interval");
      } else if (!(b.lo < b.hi)) {
        throw ContractError("interval of '" + std::string(name_of(p)) + "' must satisfy lo < hi");
      }
    }
  }

  /// Fills the free coordinates of a template with `free_values`.
  ModelParams assemble(const opt::Point& free_values, const ModelParams& base = {}) const {
    ParamVector v = base.to_array();
    std::size_t k = 0;
    for (Param p : kAllParams) {
      const auto& pin = pinned[index_of(p)];
      v[index_of(p)] = pin ? *pin : free_values.at(k++);
    }
    return ModelParams::from_array(v);
  }

  opt::Point free_values(const ModelParams& params) const {
    opt::Point out;
    for (Param p : free_params()) out.push_back(params.get(p));
    return out;
  }

  std::vector<Bound> free_bounds() const {
    std::vector<Bound> out;
    for (Param p : free_params()) out.push_back(bounds[index_of(p)]);
    return out;
  }

  bool contains(const ModelParams& params) const noexcept {
    for (Param p : kAllParams) {
      if (!bounds[index_of(p)].contains(params.get(p))) return false;
    }
    return true;
  }
};

struct Evaluation {
  ModelParams params;
  double loss = 0.0;
};

struct OptResult {
  ModelParams best_params;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<Evaluation> evaluations;
  std::size_t budget_used = 0;
};

using Objective = std::function<double(const ModelParams&)>;

/// Bounded zeroth-order minimization over the free quantities of `space`.
/// `warm_starts` are evaluated before any random draw.
inline OptResult minimize(const Objective& objective, const SearchSpace& space, const OptimizerOptions& options,
                          const std::vector<ModelParams>& warm_starts = {}) {
  space.validate();
  std::vector<opt::Point> seeds;
  seeds.reserve(warm_starts.size());
  for (const auto& w : warm_starts) seeds.push_back(space.free_values(w));

  auto wrapped = [&](const opt::Point& x) { return objective(space.assemble(x)); };

  OptResult out;
  if (space.free_params().empty()) {
    const ModelParams p = space.assemble({});
    const double f = objective(p);
    if (!std::isfinite(f)) throw NoFeasiblePointError("no feasible point: every evaluation was +inf");
    out.best_params = p;
    out.best_loss = f;
    out.evaluations.push_back({p, f});
    out.budget_used = 1;
    return out;
  }

  opt::BoxResult r = opt::minimize_box(wrapped, space.free_bounds(), options, seeds);
  out.best_params = space.assemble(r.best_x);
  out.best_loss = r.best_f;
  out.evaluations.reserve(r.trials.size());
  for (const auto& t : r.trials) out.evaluations.push_back({space.assemble(t.x), t.f});
  out.budget_used = r.trials.size();
  return out;
}

}  // namespace seiard

#endif  // SEIARD_OPTIMIZE_HPP
