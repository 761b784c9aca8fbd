#include "iwr/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace iwr {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Unbiased draw in [0, bound) by rejection.
std::uint64_t bounded(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t bound) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  for (std::uint64_t attempt = 0;; ++attempt) {
    const std::uint64_t w = counter_hash(seed, a, (b << 8) ^ attempt);
    if (w < limit) return w % bound;
  }
}

}  // namespace

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix(splitmix(splitmix(seed) ^ a) ^ b);
}

double unit_open(std::uint64_t word) {
  return (static_cast<double>(word >> 12) + 0.5) * 0x1.0p-52;
}

std::string_view to_string(EvalRule rule) {
  switch (rule) {
    case EvalRule::full_gradient: return "full_gradient";
    case EvalRule::incremental: return "incremental";
    case EvalRule::mini_batch: return "mini_batch";
    case EvalRule::delayed_async: return "delayed_async";
    case EvalRule::convex_mix: return "convex_mix";
  }
  return "incremental";
}

EvalRule parse_eval_rule(std::string_view name) {
  for (auto r : {EvalRule::full_gradient, EvalRule::incremental, EvalRule::mini_batch,
                 EvalRule::delayed_async, EvalRule::convex_mix}) {
    if (name == to_string(r)) return r;
  }
  throw InvalidArgument("unknown evaluation-point policy '" + std::string(name) + "'");
}

EvalPointPolicy EvalPointPolicy::mini_batch(std::size_t b) {
  EvalPointPolicy p{EvalRule::mini_batch, b};
  p.validate();
  return p;
}

EvalPointPolicy EvalPointPolicy::delayed_async(std::size_t max_delay, std::uint64_t seed) {
  EvalPointPolicy p{EvalRule::delayed_async, 1, max_delay, seed};
  return p;
}

EvalPointPolicy EvalPointPolicy::convex_mix(std::uint64_t seed) {
  EvalPointPolicy p{EvalRule::convex_mix, 1, 0, seed};
  return p;
}

void EvalPointPolicy::validate() const {
  if (rule == EvalRule::mini_batch) require(batch >= 1, "mini-batch size must be at least 1");
}

Weights eval_weights(const EvalPointPolicy& policy, std::size_t K, std::size_t i) {
  require(i >= 1, "evaluation point needs at least one available iterate (i >= 1)");
  switch (policy.rule) {
    case EvalRule::full_gradient:
      return {{0, 1.0}};
    case EvalRule::incremental:
      return {{i - 1, 1.0}};
    case EvalRule::mini_batch: {
      require(policy.batch >= 1, "mini-batch size must be at least 1");
      return {{((i - 1) / policy.batch) * policy.batch, 1.0}};
    }
    case EvalRule::delayed_async: {
      const std::size_t delay =
          policy.max_delay == 0 ? 0 : static_cast<std::size_t>(bounded(policy.seed, K, i, policy.max_delay + 1));
      return {{(i - 1) > delay ? (i - 1) - delay : 0, 1.0}};
    }
    case EvalRule::convex_mix: {
      // Normalized exponential draws: a flat Dirichlet sample.
      Weights w(i);
      double total = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        const double e = -std::log(unit_open(counter_hash(policy.seed, K, (static_cast<std::uint64_t>(i) << 32) | j)));
        w[j] = {j, e};
        total += e;
      }
      for (auto& x : w) x.value /= total;
      return w;
    }
  }
  throw InvalidArgument("unhandled evaluation-point policy");
}

std::vector<double> dense_weights(const Weights& weights, std::size_t i) {
  std::vector<double> out(i, 0.0);
  for (const auto& w : weights) {
    require(w.index < i, "weight index outside the available iterates");
    out[w.index] += w.value;
  }
  return out;
}

Vector combine(const Weights& weights, std::span<const Vector> points) {
  require(!weights.empty(), "empty weight list");
  for (const auto& w : weights) require(w.index < points.size(), "weight index outside the available iterates");
  if (weights.size() == 1 && weights.front().value == 1.0) return points[weights.front().index];
  Vector out = Vector::Zero(points.front().size());
  for (const auto& w : weights) out += w.value * points[w.index];
  return out;
}

std::string_view to_string(PermutationRule rule) {
  switch (rule) {
    case PermutationRule::identity: return "identity";
    case PermutationRule::fixed: return "fixed";
    case PermutationRule::shuffled_per_epoch: return "shuffled_per_epoch";
    case PermutationRule::adversarial_max_norm: return "adversarial_max_norm";
  }
  return "identity";
}

PermutationRule parse_permutation_rule(std::string_view name) {
  for (auto r : {PermutationRule::identity, PermutationRule::fixed, PermutationRule::shuffled_per_epoch,
                 PermutationRule::adversarial_max_norm}) {
    if (name == to_string(r)) return r;
  }
  throw InvalidArgument("unknown permutation policy '" + std::string(name) + "'");
}

PermutationPolicy PermutationPolicy::fixed_order(std::vector<std::size_t> order) {
  PermutationPolicy p;
  p.rule = PermutationRule::fixed;
  p.fixed = std::move(order);
  p.validate(p.fixed.size());
  return p;
}

PermutationPolicy PermutationPolicy::shuffled(std::uint64_t seed) {
  PermutationPolicy p;
  p.rule = PermutationRule::shuffled_per_epoch;
  p.seed = seed;
  return p;
}

PermutationPolicy PermutationPolicy::adversarial_max_norm() {
  PermutationPolicy p;
  p.rule = PermutationRule::adversarial_max_norm;
  return p;
}

void PermutationPolicy::validate(std::size_t n) const {
  if (rule != PermutationRule::fixed) return;
  require(fixed.size() == n, "fixed permutation has the wrong length");
  std::vector<bool> seen(n, false);
  for (auto j : fixed) {
    require(j < n && !seen[j], "fixed order is not a permutation");
    seen[j] = true;
  }
}

std::vector<std::size_t> permutation(const PermutationPolicy& policy, std::size_t K, std::size_t n,
                                     std::optional<std::span<const double>> probe) {
  require(n >= 1, "permutation needs n >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  switch (policy.rule) {
    case PermutationRule::identity:
      return order;
    case PermutationRule::fixed:
      policy.validate(n);
      return policy.fixed;
    case PermutationRule::shuffled_per_epoch:
      // Fisher-Yates driven by the counter-based generator.
      for (std::size_t j = n - 1; j > 0; --j) {
        const auto r = static_cast<std::size_t>(bounded(policy.seed, K, j, j + 1));
        std::swap(order[j], order[r]);
      }
      return order;
    case PermutationRule::adversarial_max_norm: {
      if (!probe) throw InvalidArgument("adversarial ordering needs per-component probe values");
      require(probe->size() == n, "probe length must equal n");
      const auto values = *probe;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
      return order;
    }
  }
  return order;
}

}  // namespace iwr
