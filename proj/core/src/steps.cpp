#include "iwr/steps.hpp"

#include <cmath>
#include <string>

namespace iwr {

std::string_view to_string(StepRule rule) {
  switch (rule) {
    case StepRule::constant: return "constant";
    case StepRule::decreasing_sqrt: return "decreasing_sqrt";
    case StepRule::decreasing_cbrt_with_L: return "decreasing_cbrt_with_L";
    case StepRule::adaptive: return "adaptive";
  }
  return "constant";
}

StepRule parse_step_rule(std::string_view name) {
  for (auto r : {StepRule::constant, StepRule::decreasing_sqrt, StepRule::decreasing_cbrt_with_L,
                 StepRule::adaptive}) {
    if (name == to_string(r)) return r;
  }
  throw InvalidArgument("unknown step rule '" + std::string(name) + "'");
}

StepStrategy StepStrategy::constant(double alpha, std::size_t n) {
  StepStrategy s;
  s.rule = StepRule::constant;
  s.alpha = alpha;
  s.n = n;
  s.validate();
  return s;
}

StepStrategy StepStrategy::decreasing_sqrt(std::size_t n) {
  StepStrategy s;
  s.rule = StepRule::decreasing_sqrt;
  s.n = n;
  s.validate();
  return s;
}

StepStrategy StepStrategy::decreasing_cbrt(double lipschitz, std::size_t n) {
  StepStrategy s;
  s.rule = StepRule::decreasing_cbrt_with_L;
  s.lipschitz = lipschitz;
  s.n = n;
  s.validate();
  return s;
}

StepStrategy StepStrategy::adaptive(std::size_t n, double delta, double beta) {
  StepStrategy s;
  s.rule = StepRule::adaptive;
  s.n = n;
  s.delta = delta;
  s.beta = beta;
  s.validate();
  return s;
}

StepStrategy StepStrategy::adaptive_default(std::size_t n) {
  const double nn = static_cast<double>(n);
  return adaptive(n, nn * nn * nn, nn * nn);
}

void StepStrategy::validate() const {
  require(n >= 1, "step strategy needs n >= 1");
  switch (rule) {
    case StepRule::constant:
      require(alpha > 0.0 && std::isfinite(alpha), "constant step needs alpha > 0");
      break;
    case StepRule::decreasing_sqrt:
      break;
    case StepRule::decreasing_cbrt_with_L:
      require(lipschitz > 0.0 && std::isfinite(lipschitz), "cube-root step needs L > 0");
      break;
    case StepRule::adaptive:
      require(delta > 0.0 && std::isfinite(delta), "adaptive step needs delta > 0");
      require(beta > 0.0 && std::isfinite(beta), "adaptive step needs beta > 0");
      break;
  }
}

double StepStrategy::prescribed(std::size_t K) const {
  const double nn = static_cast<double>(n);
  const double k1 = static_cast<double>(K) + 1.0;
  switch (rule) {
    case StepRule::constant: return alpha / nn;
    case StepRule::decreasing_sqrt: return 1.0 / (nn * std::sqrt(k1));
    case StepRule::decreasing_cbrt_with_L: return 1.0 / (lipschitz * nn * std::cbrt(k1));
    case StepRule::adaptive: break;
  }
  throw InvalidArgument("the adaptive rule has no prescribed step");
}

double StepStrategy::initial_anchor() const {
  if (rule == StepRule::adaptive) return 1.0 / std::cbrt(delta);
  return prescribed(0);
}

StepState::StepState(const StepStrategy& strategy)
    : n_(strategy.n), v_(strategy.rule == StepRule::adaptive ? strategy.delta : 0.0) {
  strategy.validate();
}

std::size_t StepState::completed_epochs() const {
  if (history_.empty()) return 0;
  return history_.back().size() == n_ ? history_.size() : history_.size() - 1;
}

double step_value(const StepStrategy& strategy, StepState& state, std::size_t K, std::size_t i,
                  double dnorm2) {
  require(i >= 1 && i <= strategy.n, "inner index must be in 1..n");
  auto& h = state.history_;
  const bool starts_epoch = (i == 1);
  if (starts_epoch) {
    require(K == h.size(), "steps must be drawn epoch by epoch");
    require(h.empty() || h.back().size() == strategy.n, "previous epoch is incomplete");
    h.emplace_back();
    h.back().reserve(strategy.n);
  } else {
    require(!h.empty() && K + 1 == h.size() && h.back().size() + 1 == i,
            "steps must be drawn in (K, i) order");
  }

  double a = 0.0;
  if (strategy.rule == StepRule::adaptive) {
    require(dnorm2 >= 0.0, "squared direction norm must be nonnegative");
    state.v_ += strategy.beta * dnorm2;
    a = 1.0 / std::cbrt(state.v_);
  } else {
    a = strategy.prescribed(K);
  }
  h.back().push_back(a);
  return a;
}

double epoch_anchor(const StepHistory& history, std::size_t n, double initial_anchor, std::size_t K) {
  if (K == 0) return initial_anchor;
  require(history.size() >= K && history[K - 1].size() == n, "epoch K-1 is not complete");
  return history[K - 1].back();
}

double epoch_anchor(const StepStrategy& strategy, const StepState& state, std::size_t K) {
  return epoch_anchor(state.history(), strategy.n, strategy.initial_anchor(), K);
}

LexMonotoneReport check_lex_monotone(const StepHistory& history) {
  LexMonotoneReport report;
  bool have_prev = false;
  double prev = 0.0;
  for (std::size_t K = 0; K < history.size(); ++K) {
    for (std::size_t j = 0; j < history[K].size(); ++j) {
      const double a = history[K][j];
      if (have_prev && a > prev) {
        report.ok = false;
        report.first_violation = StepIndex{K, j + 1};
        return report;
      }
      prev = a;
      have_prev = true;
    }
  }
  return report;
}

AsymptoticReport check_asymptotic_conditions(const std::vector<double>& alpha_first,
                                             const std::vector<double>& alpha_last, std::size_t K_max,
                                             const AsymptoticTolerance& tol) {
  require(alpha_first.size() > K_max && alpha_last.size() > K_max, "history shorter than K_max");
  AsymptoticReport r;
  for (std::size_t K = 0; K <= K_max; ++K) r.sum_first += alpha_first[K];
  r.alpha_first = alpha_first[K_max];
  r.ratio = alpha_first[K_max] / alpha_last[K_max];
  r.ratio_ok = std::abs(r.ratio - 1.0) <= tol.ratio;
  r.vanishing_ok = r.alpha_first <= tol.vanishing;
  return r;
}

AsymptoticReport check_asymptotic_conditions(const StepHistory& history, std::size_t K_max,
                                             const AsymptoticTolerance& tol) {
  require(history.size() > K_max, "history shorter than K_max");
  std::vector<double> first;
  std::vector<double> last;
  for (std::size_t K = 0; K <= K_max; ++K) {
    require(!history[K].empty(), "empty epoch in step history");
    first.push_back(history[K].front());
    last.push_back(history[K].back());
  }
  return check_asymptotic_conditions(first, last, K_max, tol);
}

}  // namespace iwr
