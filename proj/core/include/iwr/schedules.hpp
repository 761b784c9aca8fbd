#pragma once

// Evaluation-point policies (where in the hull of the epoch's iterates each
// direction is queried) and per-epoch visiting orders.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "iwr/types.hpp"

namespace iwr {

enum class EvalRule { full_gradient, incremental, mini_batch, delayed_async, convex_mix };

std::string_view to_string(EvalRule rule);
EvalRule parse_eval_rule(std::string_view name);

struct EvalPointPolicy {
  EvalRule rule = EvalRule::incremental;
  std::size_t batch = 1;      // mini_batch
  std::size_t max_delay = 0;  // delayed_async
  std::uint64_t seed = 0;     // delayed_async, convex_mix

  static EvalPointPolicy full_gradient() { return {EvalRule::full_gradient}; }
  static EvalPointPolicy incremental() { return {EvalRule::incremental}; }
  static EvalPointPolicy mini_batch(std::size_t b);
  static EvalPointPolicy delayed_async(std::size_t max_delay, std::uint64_t seed);
  static EvalPointPolicy convex_mix(std::uint64_t seed);

  void validate() const;
};

/// Sparse convex weights over z_{K,0..i-1}: index j carries lambda_j.
struct Weight {
  std::size_t index = 0;
  double value = 0.0;

  friend bool operator==(const Weight&, const Weight&) = default;
};
using Weights = std::vector<Weight>;

/// Convex weights for the evaluation point of inner step i (1-based), over the
/// i points z_{K,0}, ..., z_{K,i-1}. Deterministic in (policy, K, i).
Weights eval_weights(const EvalPointPolicy& policy, std::size_t K, std::size_t i);

/// Dense length-i form of a weight list.
std::vector<double> dense_weights(const Weights& weights, std::size_t i);

/// sum_j lambda_j z_{K,j}. A single unit weight returns the point itself.
Vector combine(const Weights& weights, std::span<const Vector> points);

enum class PermutationRule { identity, fixed, shuffled_per_epoch, adversarial_max_norm };

std::string_view to_string(PermutationRule rule);
PermutationRule parse_permutation_rule(std::string_view name);

struct PermutationPolicy {
  PermutationRule rule = PermutationRule::identity;
  std::vector<std::size_t> fixed;  // 0-based bijection for `fixed`
  std::uint64_t seed = 0;

  static PermutationPolicy identity() { return {}; }
  static PermutationPolicy fixed_order(std::vector<std::size_t> order);
  static PermutationPolicy shuffled(std::uint64_t seed);
  static PermutationPolicy adversarial_max_norm();

  void validate(std::size_t n) const;
  bool needs_probe() const { return rule == PermutationRule::adversarial_max_norm; }
};

/// Visiting order pi_K for epoch K as 0-based component indices. `probe`
/// holds ||d_i(x_K)|| and is required for adversarial_max_norm, which visits
/// components by descending probe value (ties by index).
std::vector<std::size_t> permutation(const PermutationPolicy& policy, std::size_t K, std::size_t n,
                                     std::optional<std::span<const double>> probe = std::nullopt);

/// Counter-based 64-bit mixer (splitmix64 finalizer over the three words).
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

/// Uniform double in (0, 1) from a 64-bit word.
double unit_open(std::uint64_t word);

}  // namespace iwr
