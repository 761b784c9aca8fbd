#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <iwr/engine.hpp>
#include <iwr/steps.hpp>

#include "support.hpp"

namespace iwr {
namespace {

// Draws one full epoch of steps with the given squared direction norms.
std::vector<double> draw_epoch(const StepStrategy& s, StepState& state, std::size_t K,
                               const std::vector<double>& dnorm2) {
  std::vector<double> out;
  for (std::size_t i = 1; i <= s.n; ++i) out.push_back(step_value(s, state, K, i, dnorm2[i - 1]));
  return out;
}

TEST(StepValue, ConstantDividesByN) {
  const auto s = StepStrategy::constant(0.5, 5);
  StepState state(s);
  for (std::size_t K = 0; K < 3; ++K) {
    for (double a : draw_epoch(s, state, K, std::vector<double>(5, 1.0))) EXPECT_DOUBLE_EQ(a, 0.1);
  }
}

TEST(StepValue, AdaptiveUpdatesBeforeStep) {
  const auto s = StepStrategy::adaptive(1, 8.0, 1.0);
  StepState state(s);
  EXPECT_DOUBLE_EQ(step_value(s, state, 0, 1, 19.0), 1.0 / 3.0);
  EXPECT_EQ(state.v(), 27.0);
}

TEST(StepValue, DecreasingSqrt) {
  const auto s = StepStrategy::decreasing_sqrt(2);
  StepState state(s);
  for (std::size_t K = 0; K < 3; ++K) draw_epoch(s, state, K, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(step_value(s, state, 3, 1, 0.0), 0.25);
}

TEST(StepValue, DecreasingCbrtWithL) {
  const auto s = StepStrategy::decreasing_cbrt(2.0, 4);
  EXPECT_DOUBLE_EQ(s.prescribed(7), 1.0 / (2.0 * 4.0 * 2.0));
}

TEST(StepValue, RejectsOutOfOrderCalls) {
  const auto s = StepStrategy::constant(1.0, 2);
  StepState state(s);
  EXPECT_THROW(step_value(s, state, 0, 2, 0.0), InvalidArgument);
  step_value(s, state, 0, 1, 0.0);
  EXPECT_THROW(step_value(s, state, 1, 1, 0.0), InvalidArgument);
  EXPECT_THROW(step_value(s, state, 0, 3, 0.0), InvalidArgument);
}

TEST(StepStrategy, ValidatesParameters) {
  EXPECT_THROW(StepStrategy::constant(0.0, 3), InvalidArgument);
  EXPECT_THROW(StepStrategy::decreasing_cbrt(-1.0, 3), InvalidArgument);
  EXPECT_THROW(StepStrategy::adaptive(3, 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(StepStrategy::adaptive(3, 1.0, 0.0), InvalidArgument);
  EXPECT_THROW(StepStrategy::constant(1.0, 0), InvalidArgument);
  const auto d = StepStrategy::adaptive_default(4);
  EXPECT_EQ(d.delta, 64.0);
  EXPECT_EQ(d.beta, 16.0);
}

TEST(StepRuleNames, RoundTrip) {
  for (auto r : {StepRule::constant, StepRule::decreasing_sqrt, StepRule::decreasing_cbrt_with_L,
                 StepRule::adaptive}) {
    EXPECT_EQ(parse_step_rule(to_string(r)), r);
  }
  EXPECT_THROW(parse_step_rule("armijo"), InvalidArgument);
}

TEST(EpochAnchor, ConstantIsAlphaOverN) {
  const auto s = StepStrategy::constant(0.6, 3);
  StepState state(s);
  EXPECT_DOUBLE_EQ(epoch_anchor(s, state, 0), 0.2);
  draw_epoch(s, state, 0, {1.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(epoch_anchor(s, state, 1), 0.2);
}

TEST(EpochAnchor, AdaptiveInitialIsCubeRootOfDelta) {
  const auto s = StepStrategy::adaptive(2, 8.0, 1.0);
  StepState state(s);
  EXPECT_DOUBLE_EQ(epoch_anchor(s, state, 0), 0.5);
}

TEST(EpochAnchor, AdaptiveAfterOneEpoch) {
  const auto s = StepStrategy::adaptive(3, 8.0, 1.0);
  StepState state(s);
  // beta * sum ||d||^2 = 19.
  draw_epoch(s, state, 0, {4.0, 10.0, 5.0});
  EXPECT_DOUBLE_EQ(epoch_anchor(s, state, 1), 1.0 / std::cbrt(27.0));
}

TEST(EpochAnchor, RejectsIncompleteEpoch) {
  const auto s = StepStrategy::constant(1.0, 3);
  StepState state(s);
  step_value(s, state, 0, 1, 0.0);
  EXPECT_THROW(epoch_anchor(s, state, 1), InvalidArgument);
}

TEST(LexMonotone, AdaptiveRunIsMonotone) {
  const auto trace = run(test::make_config(test::logistic_32x5(), StepStrategy::adaptive_default(32), 20));
  EXPECT_TRUE(check_lex_monotone(trace.step_history()).ok);
}

TEST(LexMonotone, ConstructedViolation) {
  const auto r = check_lex_monotone({{0.1, 0.2}});
  EXPECT_FALSE(r.ok);
  ASSERT_TRUE(r.first_violation.has_value());
  EXPECT_EQ(*r.first_violation, (StepIndex{0, 2}));
  EXPECT_FALSE(check_lex_monotone({{0.2, 0.2}, {0.3, 0.1}}).ok);
}

TEST(LexMonotone, DecreasingSqrtHundredEpochs) {
  const auto s = StepStrategy::decreasing_sqrt(4);
  StepState state(s);
  for (std::size_t K = 0; K < 100; ++K) draw_epoch(s, state, K, {0.0, 0.0, 0.0, 0.0});
  EXPECT_TRUE(check_lex_monotone(state.history()).ok);
}

TEST(Asymptotic, ConstantNeverVanishes) {
  const auto s = StepStrategy::constant(0.5, 4);
  StepState state(s);
  for (std::size_t K = 0; K < 10; ++K) draw_epoch(s, state, K, {0.0, 0.0, 0.0, 0.0});
  const auto r = check_asymptotic_conditions(state.history(), 9);
  EXPECT_EQ(r.ratio, 1.0);
  EXPECT_DOUBLE_EQ(r.sum_first, 10 * 0.125);
  EXPECT_TRUE(r.ratio_ok);
  EXPECT_FALSE(r.vanishing_ok);
}

TEST(Asymptotic, DecreasingSqrtAtTenThousand) {
  const std::size_t n = 2;
  const auto s = StepStrategy::decreasing_sqrt(n);
  std::vector<double> first, last;
  for (std::size_t K = 0; K <= 10000; ++K) {
    first.push_back(s.prescribed(K));
    last.push_back(s.prescribed(K));
  }
  const auto r = check_asymptotic_conditions(first, last, 10000);
  EXPECT_EQ(r.ratio, 1.0);
  EXPECT_DOUBLE_EQ(r.alpha_first, 1.0 / (2.0 * std::sqrt(10001.0)));
  EXPECT_NEAR(r.alpha_first * n, 1e-2, 1e-6);
  EXPECT_TRUE(r.ok());
}

TEST(Asymptotic, AdaptiveRatioBoundedByRecursion) {
  const auto prob = test::logistic_32x5();
  const auto s = StepStrategy::adaptive_default(32);
  const auto trace = run(test::make_config(prob, s, 300));
  const std::size_t K = 299;
  const auto r = check_asymptotic_conditions(trace.step_history(), K);
  const double v_end = trace.epochs[K].v_end;
  // Within epoch K, v grows by at most beta n M^2, and the ratio is (v_{K,n}/v_{K,1})^{1/3}.
  EXPECT_LE(r.ratio - 1.0, s.beta * 32.0 * prob->M() * prob->M() / (v_end - s.beta * 32.0 * prob->M() * prob->M()));
  EXPECT_GE(r.ratio, 1.0);
}

// Property: v_{K,i} = delta + beta * (running sum of ||d||^2), and alpha = v^{-1/3}.
TEST(Property, AdaptiveAccumulatorReplays) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 5.0);
  const auto s = StepStrategy::adaptive(5, 2.0, 3.0);
  StepState state(s);
  long double running = 0.0L;
  double prev_v = s.delta;
  for (std::size_t K = 0; K < 50; ++K) {
    for (std::size_t i = 1; i <= 5; ++i) {
      const double d2 = unif(rng);
      const double a = step_value(s, state, K, i, d2);
      running += d2;
      const long double v = 2.0L + 3.0L * running;
      EXPECT_NEAR(state.v(), static_cast<double>(v), 1e-12 * static_cast<double>(v));
      EXPECT_DOUBLE_EQ(a, 1.0 / std::cbrt(state.v()));
      EXPECT_GE(state.v(), prev_v);
      prev_v = state.v();
    }
  }
}

// Property: 0 < alpha_{K,i} <= max(alpha_{0,1}, delta^{-1/3}) for every strategy.
TEST(Property, StepsBoundedByInitial) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.0, 3.0);
  for (const auto& s : {StepStrategy::constant(0.3, 4), StepStrategy::decreasing_sqrt(4),
                        StepStrategy::decreasing_cbrt(1.7, 4), StepStrategy::adaptive(4, 5.0, 2.0)}) {
    StepState state(s);
    double a01 = 0.0;
    for (std::size_t K = 0; K < 30; ++K) {
      for (std::size_t i = 1; i <= 4; ++i) {
        const double a = step_value(s, state, K, i, unif(rng));
        if (K == 0 && i == 1) a01 = a;
        const double cap = s.rule == StepRule::adaptive ? std::max(a01, std::cbrt(1.0 / s.delta)) : a01;
        ASSERT_GT(a, 0.0);
        ASSERT_LE(a, cap);
      }
    }
  }
}

// Property: alpha_K^3 / alpha_{K,j}^3 = v_{K,j} / v_K <= 1 + beta n M^2 / delta.
TEST(Property, AdaptiveRatioBound) {
  const auto prob = test::logistic_32x5(2);
  const auto s = StepStrategy::adaptive_default(32);
  const auto trace = run(test::make_config(prob, s, 50));
  const auto history = trace.step_history();
  const double cap = 1.0 + s.beta * 32.0 * prob->M() * prob->M() / s.delta;
  for (std::size_t K = 0; K < history.size(); ++K) {
    const double anchor = epoch_anchor(history, 32, s.initial_anchor(), K);
    for (double a : history[K]) ASSERT_LE(std::pow(anchor / a, 3.0), cap * (1.0 + 1e-12));
  }
}

}  // namespace
}  // namespace iwr
