#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include <iwr/schedules.hpp>

namespace iwr {
namespace {

const EvalPointPolicy kPolicies[] = {EvalPointPolicy::full_gradient(), EvalPointPolicy::incremental(),
                                     EvalPointPolicy::mini_batch(4), EvalPointPolicy::delayed_async(3, 7),
                                     EvalPointPolicy::convex_mix(9)};

TEST(EvalWeights, FullGradientPutsMassOnStart) {
  EXPECT_EQ(dense_weights(eval_weights(EvalPointPolicy::full_gradient(), 0, 4), 4),
            (std::vector<double>{1.0, 0.0, 0.0, 0.0}));
}

TEST(EvalWeights, IncrementalUsesLatest) {
  EXPECT_EQ(dense_weights(eval_weights(EvalPointPolicy::incremental(), 0, 4), 4),
            (std::vector<double>{0.0, 0.0, 0.0, 1.0}));
}

TEST(EvalWeights, DelayedAsyncClampedAtEpochStart) {
  for (std::size_t K = 0; K < 50; ++K) {
    EXPECT_EQ(dense_weights(eval_weights(EvalPointPolicy::delayed_async(2, K), K, 1), 1),
              (std::vector<double>{1.0}));
  }
}

TEST(EvalWeights, MiniBatchUsesBatchStart) {
  const auto p = EvalPointPolicy::mini_batch(3);
  const std::size_t expected[] = {0, 0, 0, 3, 3, 3, 6};
  for (std::size_t i = 1; i <= 7; ++i) {
    const auto w = eval_weights(p, 0, i);
    ASSERT_EQ(w.size(), 1u);
    EXPECT_EQ(w[0].index, expected[i - 1]) << i;
  }
  // Pairs: steps i-1 and i both use z_{K,i-2}.
  const auto pair = EvalPointPolicy::mini_batch(2);
  EXPECT_EQ(eval_weights(pair, 0, 3)[0].index, eval_weights(pair, 0, 4)[0].index);
}

TEST(EvalWeights, DelayedAsyncRespectsMaxDelay) {
  const auto p = EvalPointPolicy::delayed_async(3, 11);
  std::vector<std::size_t> seen(4, 0);
  for (std::size_t K = 0; K < 20; ++K) {
    for (std::size_t i = 5; i <= 30; ++i) {
      const auto w = eval_weights(p, K, i);
      ASSERT_EQ(w.size(), 1u);
      ASSERT_LE(w[0].index, i - 1);
      ASSERT_GE(w[0].index + 3, i - 1);
      ++seen[(i - 1) - w[0].index];
    }
  }
  for (auto count : seen) EXPECT_GT(count, 0u);
}

TEST(EvalWeights, RejectsZeroIndex) {
  for (const auto& p : kPolicies) EXPECT_THROW(eval_weights(p, 0, 0), InvalidArgument);
}

TEST(EvalRuleNames, RoundTrip) {
  for (const auto& p : kPolicies) EXPECT_EQ(parse_eval_rule(to_string(p.rule)), p.rule);
  EXPECT_THROW(parse_eval_rule("hogwild"), InvalidArgument);
  EXPECT_THROW(EvalPointPolicy::mini_batch(0), InvalidArgument);
}

TEST(Combine, SingleUnitWeightReturnsPoint) {
  std::vector<Vector> pts{Vector::Constant(2, 1.0), Vector::Constant(2, 3.0)};
  EXPECT_EQ(combine({{1, 1.0}}, pts), pts[1]);
  EXPECT_TRUE(combine({{0, 0.25}, {1, 0.75}}, pts).isApprox(Vector::Constant(2, 2.5)));
  EXPECT_THROW(combine({{2, 1.0}}, pts), InvalidArgument);
}

// Property: weights are a convex combination over the available iterates.
TEST(Property, WeightsAreConvex) {
  for (const auto& p : kPolicies) {
    for (std::size_t K = 0; K < 5; ++K) {
      for (std::size_t i = 1; i <= 40; ++i) {
        const auto dense = dense_weights(eval_weights(p, K, i), i);
        double total = 0.0;
        for (double w : dense) {
          ASSERT_GE(w, 0.0);
          total += w;
        }
        ASSERT_NEAR(total, 1.0, 1e-15) << to_string(p.rule);
      }
    }
  }
}

// Property: ||zhat - x_K|| <= max_j ||z_j - x_K||.
TEST(Property, HullContainment) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal;
  for (const auto& p : kPolicies) {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t i = 1 + trial % 12;
      std::vector<Vector> pts(i, Vector(3));
      for (auto& z : pts) {
        for (int j = 0; j < 3; ++j) z(j) = normal(rng);
      }
      const Vector zhat = combine(eval_weights(p, trial, i), pts);
      double radius = 0.0;
      for (const auto& z : pts) radius = std::max(radius, (z - pts[0]).norm());
      ASSERT_LE((zhat - pts[0]).norm(), radius * (1.0 + 1e-12) + 1e-15);
    }
  }
}

TEST(Permutation, Identity) {
  EXPECT_EQ(permutation(PermutationPolicy::identity(), 0, 3), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Permutation, ShuffledIsReproducible) {
  const auto p = PermutationPolicy::shuffled(5);
  EXPECT_EQ(permutation(p, 3, 10), permutation(p, 3, 10));
  EXPECT_NE(permutation(p, 3, 10), permutation(p, 4, 10));
  EXPECT_NE(permutation(p, 3, 10), permutation(PermutationPolicy::shuffled(6), 3, 10));
}

TEST(Permutation, AdversarialSortsByProbe) {
  const std::vector<double> probe{0.1, 0.9, 0.5};
  EXPECT_EQ(permutation(PermutationPolicy::adversarial_max_norm(), 0, 3, std::span<const double>(probe)),
            (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_THROW(permutation(PermutationPolicy::adversarial_max_norm(), 0, 3), InvalidArgument);
}

TEST(Permutation, FixedValidated) {
  EXPECT_EQ(permutation(PermutationPolicy::fixed_order({2, 0, 1}), 7, 3), (std::vector<std::size_t>{2, 0, 1}));
  EXPECT_THROW(PermutationPolicy::fixed_order({0, 0, 1}), InvalidArgument);
  EXPECT_THROW(permutation(PermutationPolicy::fixed_order({1, 0}), 0, 3), InvalidArgument);
}

// Property: every epoch's order is a bijection on 0..n-1.
TEST(Property, PermutationsAreBijections) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif;
  for (std::size_t n : {1, 2, 5, 33}) {
    std::vector<double> probe(n);
    for (auto& v : probe) v = unif(rng);
    for (const auto& p : {PermutationPolicy::identity(), PermutationPolicy::shuffled(n),
                          PermutationPolicy::adversarial_max_norm()}) {
      for (std::size_t K = 0; K < 20; ++K) {
        auto order = permutation(p, K, n, std::span<const double>(probe));
        std::sort(order.begin(), order.end());
        std::vector<std::size_t> expected(n);
        std::iota(expected.begin(), expected.end(), std::size_t{0});
        ASSERT_EQ(order, expected);
      }
    }
  }
}

// Fisher-Yates over 3 elements should hit all 6 orders roughly uniformly.
TEST(Permutation, ShuffleCoversAllOrders) {
  std::map<std::vector<std::size_t>, int> counts;
  const auto p = PermutationPolicy::shuffled(1);
  for (std::size_t K = 0; K < 6000; ++K) ++counts[permutation(p, K, 3)];
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [order, c] : counts) {
    EXPECT_GT(c, 850);
    EXPECT_LT(c, 1150);
  }
}

TEST(CounterHash, UnitOpenInRange) {
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const double u = unit_open(counter_hash(3, k, k * k));
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  EXPECT_GT(unit_open(0), 0.0);
  EXPECT_LT(unit_open(~std::uint64_t{0}), 1.0);
}

}  // namespace
}  // namespace iwr
