#ifndef SEIARD_STRUCTURAL_HPP
#define SEIARD_STRUCTURAL_HPP

#include <Eigen/Core>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "seiard/dynamics.hpp"
#include "seiard/errors.hpp"
#include "seiard/optimize.hpp"
#include "seiard/synthdata.hpp"

namespace seiard {

/// Observed series entering the sensitivity matrix (the total is their sum).
inline constexpr std::array<Series, 3> kSensitivitySeries = {Series::active, Series::recovered, Series::deceased};

struct NullDirection {
  double singular_value = 0.0;
  std::vector<double> loadings;  // unit vector over SensitivityReport::quantities
};

/// Local numeric evidence only: a rank test of the scaled output sensitivities.
struct SensitivityReport {
  std::vector<Param> quantities;
  std::vector<int> times;
  Eigen::MatrixXd matrix;  // rows: series-major (active, recovered, deceased) x times
  std::vector<double> singular_values;
  double tolerance = 0.0;
  std::size_t numeric_rank = 0;
  double condition_number = 0.0;
  std::vector<NullDirection> near_null;  // below tolerance, or the weakest direction

  bool full_rank() const noexcept { return numeric_rank == quantities.size(); }
};

struct SensitivityOptions {
  double rel_step = 1e-4;
  double near_null_ratio = 1e-6;  // sigma / sigma_max below this also counts as near-null
  std::size_t threads = 1;
};

namespace detail {

inline Eigen::VectorXd stacked_observations(const DatasetConfig& setup, const ModelParams& p,
                                            const std::vector<int>& times) {
  const int horizon = times.back();
  const ObservedSeries obs = observe(integrate(p, setup.initial_state_for(p), horizon, setup.dt));
  Eigen::VectorXd y(static_cast<Eigen::Index>(kSensitivitySeries.size() * times.size()));
  Eigen::Index r = 0;
  for (Series s : kSensitivitySeries) {
    const auto& v = obs.series(s);
    for (int t : times) y(r++) = v[static_cast<std::size_t>(t)];
  }
  return y;
}

}  // namespace detail

/// SVD rank analysis from the singular values alone. Exposed so that a
/// matrix can be examined without recomputing derivatives.
inline void analyze_rank(SensitivityReport& report, double near_null_ratio = 1e-6) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(report.matrix, Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  report.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const auto dim = static_cast<double>(std::max(report.matrix.rows(), report.matrix.cols()));
  report.tolerance = smax * dim * std::numeric_limits<double>::epsilon() * 1e3;
  report.numeric_rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) > report.tolerance) ++report.numeric_rank;
  }
  const double smin = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
  report.condition_number = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();

  report.near_null.clear();
  const Eigen::MatrixXd& v = svd.matrixV();
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    const bool weakest = k == sv.size() - 1;
    if (!(sv(k) <= report.tolerance || sv(k) <= near_null_ratio * smax || weakest)) continue;
    NullDirection d;
    d.singular_value = sv(k);
    d.loadings.assign(v.col(k).data(), v.col(k).data() + v.rows());
    report.near_null.push_back(std::move(d));
  }
}

/// Central-difference Jacobian of the observed series at `times` with respect
/// to the free quantities of `space`, each column multiplied by the quantity's
/// value.
inline SensitivityReport sensitivity_matrix(const ModelParams& params, const DatasetConfig& setup,
                                            const SearchSpace& space, std::vector<int> times,
                                            const SensitivityOptions& options = {}) {
  if (times.empty()) throw ContractError("sensitivity_matrix needs at least one time point");
  std::sort(times.begin(), times.end());
  if (times.front() < 0) throw ContractError("sensitivity times must be >= 0");
  if (!(options.rel_step > 0.0)) throw ContractError("rel_step must be positive");
  params.validate();
  for (Param p : space.free_params()) {
    const Bound& b = space.bounds[index_of(p)];
    const double x = params.get(p);
    if (!(x > b.lo && x < b.hi))
      throw ContractError("'" + std::string(name_of(p)) + "' must lie strictly inside its interval");
  }

  SensitivityReport report;
  report.quantities = space.free_params();
  report.times = times;
  const auto rows = static_cast<Eigen::Index>(kSensitivitySeries.size() * times.size());
  const auto cols = static_cast<Eigen::Index>(report.quantities.size());
  report.matrix.resize(rows, cols);

  auto column = [&](std::size_t k) {
    const Param p = report.quantities[k];
    const double x = params.get(p);
    const double h = options.rel_step * std::max(std::abs(x), 1e-8);
    ModelParams up = params, down = params;
    up.set(p, x + h);
    down.set(p, x - h);
    try {
      const Eigen::VectorXd d =
          (detail::stacked_observations(setup, up, times) - detail::stacked_observations(setup, down, times)) /
          (2.0 * h);
      report.matrix.col(static_cast<Eigen::Index>(k)) = d * x;
    } catch (const DivergenceError& e) {
      throw DivergenceError("perturbing '" + std::string(name_of(p)) + "': " + e.what(), e.step());
    } catch (const ParameterDomainError& e) {
      throw ParameterDomainError("perturbing '" + std::string(name_of(p)) + "': " + e.what());
    }
  };

  const std::size_t n = report.quantities.size();
  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k) column(k);
  } else {
    std::vector<std::exception_ptr> errors(n);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          for (std::size_t k = w; k < n; k += workers) {
            try {
              column(k);
            } catch (...) {
              errors[k] = std::current_exception();
            }
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  analyze_rank(report, options.near_null_ratio);
  return report;
}

/// Consecutive day indices first..last.
inline std::vector<int> day_range(int first, int last) {
  std::vector<int> out;
  for (int t = first; t <= last; ++t) out.push_back(t);
  return out;
}

}  // namespace seiard

#endif  // SEIARD_STRUCTURAL_HPP
