#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "seiard/loss.hpp"
#include "seiard/optimize.hpp"
#include "seiard/synthdata.hpp"

using namespace seiard;

namespace {

OptimizerOptions options(Method m, std::size_t budget, std::uint64_t seed = 1) {
  OptimizerOptions o;
  o.method = m;
  o.budget = budget;
  o.seed = seed;
  return o;
}

double quadratic_1d(const opt::Point& x) { return (x[0] - 0.3) * (x[0] - 0.3); }

double quadratic_2d(const opt::Point& x) {
  return (x[0] - 0.3) * (x[0] - 0.3) + 2.0 * (x[1] - 0.7) * (x[1] - 0.7) + 0.5 * (x[0] - 0.3) * (x[1] - 0.7);
}

const std::vector<Bound> kUnitBox{{0.0, 1.0}};

}  // namespace

class BothMethods : public ::testing::TestWithParam<Method> {};

TEST_P(BothMethods, FindsOneDimensionalMinimum) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = opt::minimize_box(quadratic_1d, kUnitBox, options(GetParam(), 200, seed));
    EXPECT_NEAR(r.best_x[0], 0.3, 0.02) << "seed " << seed;
    EXPECT_EQ(r.trials.size(), 200u);
  }
}

TEST_P(BothMethods, BudgetOneReturnsTheOnlyPoint) {
  const auto r = opt::minimize_box(quadratic_1d, kUnitBox, options(GetParam(), 1));
  ASSERT_EQ(r.trials.size(), 1u);
  EXPECT_EQ(r.best_x, r.trials[0].x);
  EXPECT_EQ(r.best_f, r.trials[0].f);
}

TEST_P(BothMethods, StaysInsideTheBox) {
  const std::vector<Bound> box{{-1.0, 0.1}, {0.5, 2.0}};
  // optimum outside the box pushes the search against the walls
  auto f = [](const opt::Point& x) { return (x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.0) * (x[1] - 0.0); };
  const auto r = opt::minimize_box(f, box, options(GetParam(), 300));
  for (const auto& t : r.trials) {
    EXPECT_TRUE(box[0].contains(t.x[0]));
    EXPECT_TRUE(box[1].contains(t.x[1]));
  }
  EXPECT_NEAR(r.best_x[0], 0.1, 0.02);
  EXPECT_NEAR(r.best_x[1], 0.5, 0.02);
}

TEST_P(BothMethods, SeedDeterminism) {
  const auto a = opt::minimize_box(quadratic_2d, {{0, 1}, {0, 1}}, options(GetParam(), 120, 9));
  const auto b = opt::minimize_box(quadratic_2d, {{0, 1}, {0, 1}}, options(GetParam(), 120, 9));
  ASSERT_EQ(a.trials.size(), b.trials.size());
  for (std::size_t k = 0; k < a.trials.size(); ++k) EXPECT_EQ(a.trials[k].x, b.trials[k].x);
}

TEST_P(BothMethods, LargerBudgetExtendsTheSameSequence) {
  const auto small = opt::minimize_box(quadratic_2d, {{0, 1}, {0, 1}}, options(GetParam(), 80, 4));
  const auto large = opt::minimize_box(quadratic_2d, {{0, 1}, {0, 1}}, options(GetParam(), 240, 4));
  for (std::size_t k = 0; k < small.trials.size(); ++k) EXPECT_EQ(small.trials[k].x, large.trials[k].x);
  EXPECT_LE(large.best_f, small.best_f);
}

TEST_P(BothMethods, AllInfiniteMeansNoFeasiblePoint) {
  auto f = [](const opt::Point&) { return std::numeric_limits<double>::infinity(); };
  EXPECT_THROW(opt::minimize_box(f, kUnitBox, options(GetParam(), 20)), NoFeasiblePointError);
}

TEST_P(BothMethods, NanCountsAsInfinity) {
  auto f = [](const opt::Point& x) { return x[0] < 0.5 ? std::numeric_limits<double>::quiet_NaN() : x[0]; };
  const auto r = opt::minimize_box(f, kUnitBox, options(GetParam(), 100));
  EXPECT_GE(r.best_x[0], 0.5);
  EXPECT_NEAR(r.best_f, 0.5, 0.02);
}

TEST_P(BothMethods, PinnedValuesAreCarriedExactly) {
  SearchSpace space;
  space.pin(Param::t_inc, 5.1).pin(Param::t_inf, 6.6).pin(Param::t_fatal, 10.0);
  std::size_t calls = 0;
  const Objective f = [&](const ModelParams& p) {
    ++calls;
    EXPECT_EQ(p.t_inc, 5.1);
    EXPECT_EQ(p.t_inf, 6.6);
    EXPECT_EQ(p.t_fatal, 10.0);
    return std::abs(p.beta - 0.25) + std::abs(p.p_fatal - 0.03);
  };
  const OptResult r = minimize(f, space, options(GetParam(), 60));
  EXPECT_EQ(calls, 60u);
  EXPECT_EQ(r.budget_used, 60u);
  EXPECT_EQ(r.evaluations.size(), 60u);
}

INSTANTIATE_TEST_SUITE_P(Optimize, BothMethods, ::testing::Values(Method::tpe, Method::random_nelder_mead),
                         [](const auto& info) { return info.param == Method::tpe ? "tpe" : "random_nm"; });

TEST(Tpe, TwoDimensionalQuadraticWithinTolerance) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto r = opt::minimize_box(quadratic_2d, {{0, 1}, {0, 1}}, options(Method::tpe, 500, seed));
    EXPECT_LE(r.best_f, 1e-2) << "seed " << seed;
  }
}

TEST(Optimize, ZeroBudgetIsContractError) {
  EXPECT_THROW(opt::minimize_box(quadratic_1d, kUnitBox, options(Method::tpe, 0)), ContractError);
}

TEST(Optimize, DegenerateBoxIsContractError) {
  EXPECT_THROW(opt::minimize_box(quadratic_1d, {{0.5, 0.5}}, options(Method::tpe, 10)), ContractError);
}

TEST(Optimize, WarmStartsAreEvaluatedFirst) {
  const auto r = opt::minimize_box(quadratic_1d, kUnitBox, options(Method::random_nelder_mead, 10), {{0.3}, {2.0}});
  EXPECT_EQ(r.trials[0].x[0], 0.3);
  EXPECT_EQ(r.trials[1].x[0], 1.0);  // clipped into the box
  EXPECT_EQ(r.best_f, 0.0);
}

TEST(Optimize, FullyPinnedSpaceEvaluatesOnce) {
  SearchSpace space;
  for (Param p : kAllParams) space.pin(p, reference_params().get(p));
  const OptResult r = minimize([](const ModelParams& p) { return p.beta; }, space, options(Method::tpe, 50));
  EXPECT_EQ(r.budget_used, 1u);
  EXPECT_EQ(r.best_params, reference_params());
}

TEST(SearchSpace, PinOutsideIntervalIsRejected) {
  SearchSpace space;
  space.pin(Param::beta, 2.0);
  EXPECT_THROW(space.validate(), ContractError);
}

TEST(SearchSpace, AssembleRoundTrip) {
  SearchSpace space;
  space.pin(Param::t_inc, 5.1);
  const ModelParams p = reference_params();
  EXPECT_EQ(space.free_values(p).size(), 7u);
  EXPECT_EQ(space.assemble(space.free_values(p)), p);
}

TEST(Optimize, ReparamFitRecoversTruthOnNoiselessData) {
  const Dataset d = generate(DatasetConfig{});
  SearchSpace space;
  space.pin(Param::t_inc, 5.1).pin(Param::t_inf, 6.6).pin(Param::t_fatal, 10.0);
  const FitWindow w{0, 28};
  const OptResult r = minimize([&](const ModelParams& p) { return fit_loss(d, p, w); }, space,
                               options(Method::random_nelder_mead, 500, 3));
  EXPECT_LT(r.best_loss, 0.5);
  EXPECT_NEAR(r.best_params.beta, 0.25, 0.05 * 0.25);
}
