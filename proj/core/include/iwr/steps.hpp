#pragma once

// Step-size rules alpha_{K,i} for the epoch recursion, and checkers for the
// monotonicity and asymptotic conditions the analysis relies on.

#include <optional>
#include <string_view>
#include <vector>

#include "iwr/types.hpp"

namespace iwr {

enum class StepRule { constant, decreasing_sqrt, decreasing_cbrt_with_L, adaptive };

std::string_view to_string(StepRule rule);
StepRule parse_step_rule(std::string_view name);

/// Immutable step rule.
///
///   constant                 alpha / n
///   decreasing_sqrt          1 / (n sqrt(K+1))
///   decreasing_cbrt_with_L   1 / (L n (K+1)^{1/3})
///   adaptive                 v^{-1/3}, v accumulating beta ||d||^2 from v_0 = delta
struct StepStrategy {
  StepRule rule = StepRule::constant;
  std::size_t n = 1;
  double alpha = 0.0;
  double lipschitz = 0.0;
  double delta = 0.0;
  double beta = 0.0;

  static StepStrategy constant(double alpha, std::size_t n);
  static StepStrategy decreasing_sqrt(std::size_t n);
  static StepStrategy decreasing_cbrt(double lipschitz, std::size_t n);
  static StepStrategy adaptive(std::size_t n, double delta, double beta);
  /// beta = n^2, delta = n^3.
  static StepStrategy adaptive_default(std::size_t n);

  void validate() const;

  /// alpha_0: delta^{-1/3} for the adaptive rule, alpha_{0,1} otherwise.
  double initial_anchor() const;
  /// Prescribed value of alpha_{K,i}; not defined for the adaptive rule.
  double prescribed(std::size_t K) const;
};

/// history[K][i-1] = alpha_{K,i}.
using StepHistory = std::vector<std::vector<double>>;

/// Per-run mutable state: the adaptive accumulator and the step history.
class StepState {
 public:
  explicit StepState(const StepStrategy& strategy);

  double v() const { return v_; }
  const StepHistory& history() const { return history_; }
  std::size_t completed_epochs() const;

 private:
  friend double step_value(const StepStrategy&, StepState&, std::size_t, std::size_t, double);

  std::size_t n_;
  double v_;
  StepHistory history_;
};

/// Returns alpha_{K,i} (i is 1-based) and appends it to the history. Calls must
/// follow the lexicographic (K, i) order. For the adaptive rule, v is updated
/// with beta * dnorm2 before the step is computed.
double step_value(const StepStrategy& strategy, StepState& state, std::size_t K, std::size_t i,
                  double dnorm2);

/// alpha_K = alpha_{K-1,n} for K >= 1 and the strategy's alpha_0 for K = 0.
/// Throws if epoch K-1 is not complete.
double epoch_anchor(const StepStrategy& strategy, const StepState& state, std::size_t K);
double epoch_anchor(const StepHistory& history, std::size_t n, double initial_anchor, std::size_t K);

struct LexMonotoneReport {
  bool ok = true;
  std::optional<StepIndex> first_violation;
};

/// Checks alpha_{K,i-1} >= alpha_{K,i} >= alpha_{K+1,1} throughout.
LexMonotoneReport check_lex_monotone(const StepHistory& history);

struct AsymptoticTolerance {
  double ratio = 1e-3;       // |alpha_{K,1}/alpha_{K,n} - 1| allowed
  double vanishing = 1e-2;   // alpha_{K,1} threshold
};

/// Finite-horizon proxies for: sum_K alpha_{K,1} = inf, alpha_{K,1} -> 0 and
/// alpha_{K,1}/alpha_{K,n} -> 1.
struct AsymptoticReport {
  double sum_first = 0.0;
  double alpha_first = 0.0;
  double ratio = 1.0;
  bool ratio_ok = false;
  bool vanishing_ok = false;

  bool ok() const { return ratio_ok && vanishing_ok; }
};

AsymptoticReport check_asymptotic_conditions(const StepHistory& history, std::size_t K_max,
                                             const AsymptoticTolerance& tol = {});
/// Same report computed from per-epoch first/last steps (epoch-only traces).
AsymptoticReport check_asymptotic_conditions(const std::vector<double>& alpha_first,
                                             const std::vector<double>& alpha_last, std::size_t K_max,
                                             const AsymptoticTolerance& tol = {});

}  // namespace iwr
