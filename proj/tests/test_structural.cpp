#include <gtest/gtest.h>

#include <cmath>

#include "seiard/structural.hpp"
#include "seiard/synthdata.hpp"

using namespace seiard;

namespace {

SearchSpace reparam_space() {
  SearchSpace s;
  s.pin(Param::t_inc, 5.1).pin(Param::t_inf, 6.6).pin(Param::t_fatal, 10.0);
  return s;
}

SensitivityReport screen(const SearchSpace& space, double rel_step = 1e-4, std::size_t threads = 1) {
  SensitivityOptions o;
  o.rel_step = rel_step;
  o.near_null_ratio = 5e-3;
  o.threads = threads;
  return sensitivity_matrix(reference_params(), DatasetConfig{}, space, day_range(1, 28), o);
}

double loading(const SensitivityReport& r, const NullDirection& d, Param p) {
  for (std::size_t k = 0; k < r.quantities.size(); ++k) {
    if (r.quantities[k] == p) return d.loadings[k];
  }
  return 0.0;
}

}  // namespace

TEST(Structural, ReparamIsFullRank) {
  const SensitivityReport r = screen(reparam_space());
  EXPECT_EQ(r.quantities.size(), 5u);
  EXPECT_EQ(r.matrix.rows(), 84);
  EXPECT_EQ(r.numeric_rank, 5u);
  EXPECT_TRUE(r.full_rank());
  EXPECT_LT(r.condition_number, 1e3);
  for (std::size_t k = 1; k < r.singular_values.size(); ++k) EXPECT_LE(r.singular_values[k], r.singular_values[k - 1]);
}

TEST(Structural, OriginalIsIllConditionedAlongFatalPair) {
  const SensitivityReport r = screen(SearchSpace{});
  EXPECT_EQ(r.quantities.size(), 8u);
  EXPECT_TRUE(!r.full_rank() || r.condition_number > 1e6);
  bool fatal_pair = false;
  for (const auto& d : r.near_null) {
    const double tf = loading(r, d, Param::t_fatal), pf = loading(r, d, Param::p_fatal);
    if (std::abs(tf) > 0.3 && std::abs(pf) > 0.3) fatal_pair = true;
  }
  EXPECT_TRUE(fatal_pair);
}

TEST(Structural, DuplicatedColumnDropsRankByOne) {
  SensitivityReport r = screen(reparam_space());
  const Eigen::Index c = r.matrix.cols();
  r.matrix.conservativeResize(Eigen::NoChange, c + 1);
  r.matrix.col(c) = r.matrix.col(1);
  analyze_rank(r);
  EXPECT_EQ(r.numeric_rank, static_cast<std::size_t>(c));
  ASSERT_FALSE(r.near_null.empty());
  // the null direction is (e_1 - e_c) / sqrt(2)
  const auto& v = r.near_null.back().loadings;
  EXPECT_NEAR(std::abs(v[1]), std::sqrt(0.5), 1e-6);
  EXPECT_NEAR(std::abs(v[static_cast<std::size_t>(c)]), std::sqrt(0.5), 1e-6);
}

TEST(Structural, RankInvariantUnderColumnScaling) {
  SensitivityReport dup = screen(reparam_space());
  const Eigen::Index c = dup.matrix.cols();
  dup.matrix.conservativeResize(Eigen::NoChange, c + 1);
  dup.matrix.col(c) = dup.matrix.col(2);
  analyze_rank(dup);
  // the full model is left out: its weakest singular value sits close to the tolerance
  for (const SensitivityReport& base : {screen(reparam_space()), dup}) {
    for (Eigen::Index k = 0; k < base.matrix.cols(); ++k) {
      for (double factor : {1e-3, 7.0, 1e3}) {
        SensitivityReport r = base;
        r.matrix.col(k) *= factor;
        analyze_rank(r);
        EXPECT_EQ(r.numeric_rank, base.numeric_rank) << "column " << k << " factor " << factor;
      }
    }
  }
}

TEST(Structural, FiniteDifferenceStepStability) {
  const SensitivityReport a = screen(reparam_space(), 1e-4);
  const SensitivityReport b = screen(reparam_space(), 5e-5);
  for (std::size_t k = 0; k < a.singular_values.size(); ++k)
    EXPECT_LT(std::abs(a.singular_values[k] - b.singular_values[k]) / a.singular_values[k], 0.01);

  // in the full model only the directions resolved well above rounding noise are stable
  const SensitivityReport c = screen(SearchSpace{}, 1e-4);
  const SensitivityReport d = screen(SearchSpace{}, 5e-5);
  for (std::size_t k = 0; k < c.singular_values.size(); ++k) {
    if (c.singular_values[k] < 1e-6 * c.singular_values[0]) continue;
    EXPECT_LT(std::abs(c.singular_values[k] - d.singular_values[k]) / c.singular_values[k], 0.01) << k;
  }
}

TEST(Structural, ThreadCountDoesNotChangeTheMatrix) {
  const SensitivityReport a = screen(SearchSpace{}, 1e-4, 1);
  const SensitivityReport b = screen(SearchSpace{}, 1e-4, 4);
  EXPECT_EQ(a.matrix, b.matrix);
}

TEST(Structural, Preconditions) {
  ModelParams edge = reference_params();
  edge.p_fatal = 0.0;
  EXPECT_THROW(sensitivity_matrix(edge, DatasetConfig{}, reparam_space(), day_range(1, 5)), ContractError);
  EXPECT_THROW(sensitivity_matrix(reference_params(), DatasetConfig{}, reparam_space(), {}), ContractError);
  SensitivityOptions bad;
  bad.rel_step = 0.0;
  EXPECT_THROW(sensitivity_matrix(reference_params(), DatasetConfig{}, reparam_space(), day_range(1, 5), bad),
               ContractError);
}

TEST(Structural, DayRange) {
  EXPECT_EQ(day_range(1, 4), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_TRUE(day_range(3, 2).empty());
}
