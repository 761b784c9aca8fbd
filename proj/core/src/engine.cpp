#include "iwr/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace iwr {

std::string_view to_string(RecordLevel level) {
  return level == RecordLevel::full ? "full" : "epoch_only";
}

RecordLevel parse_record_level(std::string_view name) {
  if (name == "full") return RecordLevel::full;
  if (name == "epoch_only") return RecordLevel::epoch_only;
  throw InvalidArgument("unknown record level '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  require(problem != nullptr, "run config has no problem");
  require(static_cast<std::size_t>(x0.size()) == problem->p(), "x0 length must equal the problem dimension");
  require(epochs >= 1, "epochs must be at least 1");
  require(strategy.n == problem->n(), "step strategy n does not match the problem");
  strategy.validate();
  eval_policy.validate();
  permutation.validate(problem->n());
  require(x0.allFinite(), "x0 must be finite");
}

StepHistory RunTrace::step_history() const {
  require(has_inner(), "step history needs a full record");
  StepHistory h;
  h.reserve(epochs.size());
  for (const auto& e : epochs) {
    std::vector<double> row;
    row.reserve(e.inner.size());
    for (const auto& r : e.inner) row.push_back(r.alpha);
    h.push_back(std::move(row));
  }
  return h;
}

std::vector<double> RunTrace::alpha_first() const {
  std::vector<double> out;
  out.reserve(epochs.size());
  for (const auto& e : epochs) out.push_back(e.alpha_first);
  return out;
}

std::vector<double> RunTrace::alpha_last() const {
  std::vector<double> out;
  out.reserve(epochs.size());
  for (const auto& e : epochs) out.push_back(e.alpha_last);
  return out;
}

bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

EpochResult run_epoch(const RunConfig& config, StepState& state, const Vector& x, std::size_t K) {
  const auto& problem = *config.problem;
  const std::size_t n = problem.n();
  const bool full = config.record_level == RecordLevel::full;

  std::vector<std::size_t> order;
  if (config.permutation.needs_probe()) {
    std::vector<double> probe(n);
    for (std::size_t j = 0; j < n; ++j) probe[j] = problem.component(j).direction(x).norm();
    order = permutation(config.permutation, K, n, std::span<const double>(probe));
  } else {
    order = permutation(config.permutation, K, n);
  }

  EpochResult out;
  auto& rec = out.record;
  rec.K = K;
  rec.x_start = x;
  if (full) rec.inner.reserve(n);

  std::vector<Vector> z;
  z.reserve(n + 1);
  z.push_back(x);
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t comp = order[i - 1];
    Weights w = eval_weights(config.eval_policy, K, i);
    Vector zhat = combine(w, std::span<const Vector>(z.data(), i));
    Vector d = problem.component(comp).direction(zhat);
    if (!d.allFinite()) throw NonFiniteError({K, i}, "non-finite direction");
    const double dnorm2 = d.squaredNorm();
    const double a = step_value(config.strategy, state, K, i, dnorm2);
    Vector next = z.back() - a * d;
    if (!next.allFinite() || !std::isfinite(a)) throw NonFiniteError({K, i}, "non-finite iterate");

    if (i == 1) rec.alpha_first = a;
    rec.alpha_last = a;
    rec.alpha_sum += a;
    rec.alpha_sq_dnorm_sum += a * a * dnorm2;
    rec.alpha_cube_dnorm_sum += a * a * a * dnorm2;
    rec.dnorm2_sum += dnorm2;
    if (full) {
      rec.inner.push_back(InnerRecord{comp, std::move(w), std::move(zhat), std::move(d), dnorm2, a, next, state.v()});
    }
    z.push_back(std::move(next));
  }
  rec.order = std::move(order);
  rec.v_end = state.v();
  rec.x_end = z.back();
  out.x_next = z.back();
  return out;
}

RunTrace run(const RunConfig& config) {
  config.validate();
  const auto& problem = *config.problem;
  RunTrace trace;
  trace.config = config;
  trace.points.reserve(config.epochs + 1);
  trace.epochs.reserve(config.epochs);

  auto record_point = [&](const Vector& x) {
    trace.points.push_back(x);
    trace.values.push_back(full_value(problem, x));
    trace.grad_norm_sq.push_back(full_direction(problem, x).squaredNorm());
    const double norm = x.norm();
    trace.max_point_norm = std::max(trace.max_point_norm, norm);
    if (!trace.radius_exit && norm > config.monitor_radius) trace.radius_exit = trace.points.size() - 1;
  };

  StepState state(config.strategy);
  Vector x = config.x0;
  record_point(x);
  for (std::size_t K = 0; K < config.epochs; ++K) {
    try {
      auto result = run_epoch(config, state, x, K);
      x = std::move(result.x_next);
      trace.epochs.push_back(std::move(result.record));
    } catch (const NonFiniteError& e) {
      trace.abort = AbortInfo{e.at(), e.what()};
      break;
    }
    record_point(x);
    if (!std::isfinite(trace.values.back())) {
      trace.abort = AbortInfo{{K, problem.n()}, "non-finite objective value"};
      break;
    }
  }
  return trace;
}

ReplayReport replay(const RunTrace& trace) {
  require(trace.has_inner(), "replay needs a full record");
  const auto& config = trace.config;
  config.validate();
  const auto& problem = *config.problem;
  const std::size_t n = problem.n();

  ReplayReport report;
  auto fail = [&](StepIndex at, std::string what) {
    report.ok = false;
    report.mismatch = at;
    report.detail = std::move(what);
    return report;
  };

  StepState state(config.strategy);
  Vector x = config.x0;
  if (trace.points.empty() || !bitwise_equal(trace.points.front(), x)) return fail({0, 0}, "x0 differs");

  for (std::size_t K = 0; K < trace.epochs.size(); ++K) {
    const auto& rec = trace.epochs[K];
    if (rec.K != K || rec.inner.size() != n) return fail({K, 0}, "epoch record malformed");
    if (!bitwise_equal(rec.x_start, x)) return fail({K, 0}, "epoch start point differs");

    std::vector<std::size_t> order;
    if (config.permutation.needs_probe()) {
      std::vector<double> probe(n);
      for (std::size_t j = 0; j < n; ++j) probe[j] = problem.component(j).direction(x).norm();
      order = permutation(config.permutation, K, n, std::span<const double>(probe));
    } else {
      order = permutation(config.permutation, K, n);
    }
    if (order != rec.order) return fail({K, 0}, "visiting order differs");

    std::vector<Vector> z{x};
    for (std::size_t i = 1; i <= n; ++i) {
      const auto& r = rec.inner[i - 1];
      const StepIndex at{K, i};
      if (r.component != order[i - 1]) return fail(at, "component index differs");
      const Weights w = eval_weights(config.eval_policy, K, i);
      if (w != r.weights) return fail(at, "evaluation weights differ");
      const Vector zhat = combine(w, std::span<const Vector>(z.data(), i));
      if (!bitwise_equal(zhat, r.eval_point)) return fail(at, "evaluation point differs");
      const Vector d = problem.component(r.component).direction(zhat);
      if (!bitwise_equal(d, r.direction)) return fail(at, "direction differs");
      const double dnorm2 = d.squaredNorm();
      if (std::memcmp(&dnorm2, &r.dnorm2, sizeof(double)) != 0) return fail(at, "direction norm differs");
      const double a = step_value(config.strategy, state, K, i, dnorm2);
      if (std::memcmp(&a, &r.alpha, sizeof(double)) != 0) return fail(at, "step size differs");
      const double v = state.v();
      if (std::memcmp(&v, &r.v, sizeof(double)) != 0) return fail(at, "accumulator differs");
      Vector next = z.back() - a * d;
      if (!bitwise_equal(next, r.point)) return fail(at, "iterate differs");
      z.push_back(std::move(next));
    }
    x = z.back();
    if (!bitwise_equal(rec.x_end, x)) return fail({K, n}, "epoch end point differs");
    if (K + 1 >= trace.points.size() || !bitwise_equal(trace.points[K + 1], x)) {
      return fail({K, n}, "recorded point differs");
    }
  }
  return report;
}

std::vector<SummaryRow> summary(const RunTrace& trace) {
  std::vector<SummaryRow> rows;
  rows.reserve(trace.epochs.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t K = 0; K < trace.epochs.size(); ++K) {
    SummaryRow row;
    row.K = K;
    row.value = trace.values[K];
    row.grad_norm_sq = trace.grad_norm_sq[K];
    best = std::min(best, row.grad_norm_sq);
    row.min_so_far = best;
    row.alpha_first = trace.epochs[K].alpha_first;
    row.alpha_last = trace.epochs[K].alpha_last;
    row.v = trace.epochs[K].v_end;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace iwr
