#include "iwr/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace iwr {

void MarginReport::add(double lhs, double rhs, double scale, StepIndex at) {
  const double slack = rhs - lhs;
  const double rel = scale > 0.0 ? slack / scale : (slack < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0);
  ++checked;
  min_slack = std::min(min_slack, slack);
  if (rel < min_relative) {
    min_relative = rel;
    worst = at;
    lhs_at_worst = lhs;
    rhs_at_worst = rhs;
  }
}

void MarginReport::merge(const MarginReport& other) {
  checked += other.checked;
  min_slack = std::min(min_slack, other.min_slack);
  if (other.min_relative < min_relative) {
    min_relative = other.min_relative;
    worst = other.worst;
    lhs_at_worst = other.lhs_at_worst;
    rhs_at_worst = other.rhs_at_worst;
  }
}

// ---------------------------------------------------------------------------

MarginReport check_claim1(const EpochRecord& record) {
  MarginReport report;
  const std::size_t n = record.inner.size();
  if (n == 0) return report;
  double sum = 0.0;
  for (const auto& r : record.inner) sum += r.alpha * r.alpha * r.dnorm2;
  const double rhs = static_cast<double>(n) * sum;
  const double end_move = (record.x_end - record.x_start).squaredNorm();
  for (std::size_t i = 1; i <= n; ++i) {
    const auto& r = record.inner[i - 1];
    const double lhs = std::max({(r.point - record.x_start).squaredNorm(), end_move,
                                 (r.eval_point - record.x_start).squaredNorm()});
    report.add(lhs, rhs, std::max(std::abs(lhs), std::abs(rhs)), {record.K, i});
  }
  return report;
}

MarginReport check_claim1(const RunTrace& trace) {
  require(trace.has_inner(), "the step-length certificate needs a full record");
  MarginReport report;
  for (const auto& e : trace.epochs) report.merge(check_claim1(e));
  return report;
}

namespace {

struct SmoothContext {
  const FiniteSumProblem& problem;
  double L;
  double M;
  double n;
};

SmoothContext smooth_context(const RunTrace& trace) {
  const auto& problem = *trace.config.problem;
  if (!problem.smooth()) throw UnsupportedProblem("descent certificates need a smooth problem");
  require(trace.has_inner(), "descent certificates need a full record");
  return {problem, *problem.L(), problem.M(), static_cast<double>(problem.n())};
}

double anchor_for(const RunTrace& trace, std::size_t K) {
  return K == 0 ? trace.config.strategy.initial_anchor() : trace.epochs[K - 1].alpha_last;
}

}  // namespace

Claim2Check check_claim2(const RunTrace& trace, std::size_t K) {
  const auto ctx = smooth_context(trace);
  require(K < trace.epochs.size() && K + 1 < trace.points.size(), "epoch index beyond the trace");
  const auto& rec = trace.epochs[K];
  Claim2Check c;
  c.K = K;
  c.anchor = anchor_for(trace, K);
  const double a = c.anchor;
  const Vector grad = full_direction(ctx.problem, trace.points[K]);
  c.lhs = trace.values[K + 1] - trace.values[K] + 0.5 * ctx.n * a * grad.squaredNorm();
  for (const auto& r : rec.inner) c.step_sum += r.alpha * r.alpha * r.dnorm2;
  const double quadratic = a * ctx.L * ctx.L * ctx.n * ctx.n;
  const double curvature = 0.5 * ctx.L * ctx.n - 0.5 / a;
  c.coefficient = quadratic + curvature;
  double mismatch = 0.0;
  for (const auto& r : rec.inner) {
    const double t = r.alpha / a;
    mismatch += 1.0 - t * t * t;
  }
  c.mismatch_term = a * ctx.M * ctx.M * mismatch;
  c.rhs = c.coefficient * c.step_sum + c.mismatch_term;
  c.rhs_corrected = (quadratic + std::max(curvature, 0.0)) * c.step_sum + c.mismatch_term;
  return c;
}

Claim2Range check_claim2_range(const RunTrace& trace, std::size_t K_lo, std::size_t K_hi) {
  smooth_context(trace);
  Claim2Range out;
  out.lex_monotone = check_lex_monotone(trace.step_history()).ok;
  if (trace.epochs.empty()) return out;
  const std::size_t hi = std::min(K_hi, trace.epochs.size() - 1);
  for (std::size_t K = K_lo; K <= hi; ++K) {
    const auto c = check_claim2(trace, K);
    out.stated.add(c.lhs, c.rhs, 1.0 + std::abs(c.rhs), {K, 0});
    out.corrected.add(c.lhs, c.rhs_corrected, 1.0 + std::abs(c.rhs_corrected), {K, 0});
  }
  return out;
}

DescentDecompositionCheck check_descent_decomposition(const RunTrace& trace, std::size_t K) {
  const auto ctx = smooth_context(trace);
  require(K < trace.epochs.size() && K + 1 < trace.points.size(), "epoch index beyond the trace");
  const auto& rec = trace.epochs[K];
  DescentDecompositionCheck c;
  c.K = K;
  c.anchor = anchor_for(trace, K);
  const double a = c.anchor;
  const Vector grad = full_direction(ctx.problem, trace.points[K]);
  const Vector delta = trace.points[K + 1] - trace.points[K];
  c.lhs = grad.dot(delta) + delta.squaredNorm() / (2.0 * ctx.n * a);
  double S = 0.0;
  double mismatch = 0.0;
  for (const auto& r : rec.inner) {
    S += r.alpha * r.alpha * r.dnorm2;
    const double t = r.alpha / a - 1.0;
    mismatch += t * t;
  }
  c.rhs = -0.5 * ctx.n * a * grad.squaredNorm() + a * ctx.L * ctx.L * ctx.n * ctx.n * S +
          a * ctx.M * ctx.M * mismatch;
  return c;
}

MarginReport check_descent_decomposition_range(const RunTrace& trace, std::size_t K_lo, std::size_t K_hi) {
  smooth_context(trace);
  MarginReport report;
  if (trace.epochs.empty()) return report;
  const std::size_t hi = std::min(K_hi, trace.epochs.size() - 1);
  for (std::size_t K = K_lo; K <= hi; ++K) {
    const auto c = check_descent_decomposition(trace, K);
    report.add(c.lhs, c.rhs, 1.0 + std::abs(c.rhs), {K, 0});
  }
  return report;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Corollary which) {
  switch (which) {
    case Corollary::constant_no_L: return "cor1";
    case Corollary::decreasing_sqrt: return "cor2";
    case Corollary::constant_with_L: return "cor3";
    case Corollary::decreasing_cbrt: return "cor4";
    case Corollary::adaptive: return "cor5";
  }
  return "cor1";
}

Corollary parse_corollary(std::string_view name) {
  if (name.size() == 4 && name.substr(0, 3) == "cor") name.remove_prefix(3);
  if (name.size() == 1 && name[0] >= '1' && name[0] <= '5') return static_cast<Corollary>(name[0] - '0');
  throw InvalidArgument("unknown corollary '" + std::string(name) + "'");
}

std::size_t corollary_first_index(Corollary which) {
  return (which == Corollary::decreasing_sqrt || which == Corollary::decreasing_cbrt) ? 1 : 0;
}

double bound_corollary(Corollary which, const CorollaryParams& p) {
  const double F = p.f0_minus_fstar;
  const double L = p.L;
  const double M = p.M;
  const double a = p.alpha;
  const double N1 = static_cast<double>(p.N) + 1.0;
  switch (which) {
    case Corollary::constant_no_L:
      require(a > 0.0, "constant-step bound needs alpha > 0");
      return 2.0 * F / (N1 * a) + 2.0 * (a * L * L * M * M + 0.5 * L * M * M) * a;
    case Corollary::decreasing_sqrt:
      require(p.N >= 1, "this bound needs N >= 1");
      return (F + (L * L * M * M + 0.5 * L * M * M) * (1.0 + std::log(N1))) / (std::sqrt(N1) - 1.0);
    case Corollary::constant_with_L:
      require(a > 0.0, "constant-step bound needs alpha > 0");
      if (a * L > 1.0) throw PreconditionViolation("the constant-step bound with L needs alpha <= 1/L");
      return 2.0 * F / (N1 * a) + 2.0 * a * a * L * L * M * M;
    case Corollary::decreasing_cbrt:
      require(p.N >= 1, "this bound needs N >= 1");
      return 2.0 / (3.0 * (std::cbrt(N1 * N1) - 1.0)) * (L * F + M * M * (1.0 + std::log(N1)));
    case Corollary::adaptive: {
      const double M2 = M * M;
      const double numer = F + (std::pow(L, 5) + 0.5 * std::pow(L, 4)) +
                           (0.5 * L * L * std::cbrt(1.0 + M) + M2) * std::log(1.0 + M2 * N1);
      return 2.0 * std::cbrt(M2 + 1.0) * numer / std::cbrt(N1 * N1);
    }
  }
  throw InvalidArgument("unhandled corollary");
}

double bound_prescribed_no_L(const StepStrategy& strategy, double f0_minus_fstar, double L, double M,
                             std::size_t N) {
  require(strategy.rule != StepRule::adaptive, "prescribed bound needs a prescribed rule");
  const double n = static_cast<double>(strategy.n);
  const double a0 = strategy.prescribed(0);
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t K = 0; K <= N; ++K) {
    const double a = strategy.prescribed(K);
    s1 += n * a;
    s2 += n * n * a * a;
  }
  return 2.0 / s1 * (f0_minus_fstar + (a0 * L * L * M * M * n + 0.5 * L * M * M) * s2);
}

double bound_prescribed_with_L(const StepStrategy& strategy, double f0_minus_fstar, double L, double M,
                               std::size_t N) {
  require(strategy.rule != StepRule::adaptive, "prescribed bound needs a prescribed rule");
  const double n = static_cast<double>(strategy.n);
  if (n * strategy.prescribed(0) * L > 1.0) throw PreconditionViolation("this bound needs n alpha_K <= 1/L");
  double s1 = 0.0;
  double s3 = 0.0;
  for (std::size_t K = 0; K <= N; ++K) {
    const double a = strategy.prescribed(K);
    s1 += n * a;
    s3 += n * n * n * a * a * a;
  }
  return 2.0 / s1 * (f0_minus_fstar + L * L * M * M * s3);
}

double bound_adaptive_general(const StepStrategy& strategy, double f0_minus_fstar, double L, double M,
                              std::size_t N) {
  require(strategy.rule == StepRule::adaptive, "adaptive bound needs the adaptive rule");
  const double n = static_cast<double>(strategy.n);
  const double b = strategy.beta;
  const double d = strategy.delta;
  const double M2 = M * M;
  const double Nd = static_cast<double>(N);
  // Accumulator value at the first epoch whose anchor drops below 1/(L n):
  // below 1/abar^3 before that epoch plus at most one epoch of growth.
  const double v_bar = std::pow(L * n, 3) + b * n * M2;
  const double early = (L * L * n * n / (b * d) + L * n / (2.0 * b * std::cbrt(d * d))) * v_bar;
  const double late = L * L * n * n / b * std::cbrt(1.0 + b * n * M2 / d) + M2 * n / std::cbrt(d);
  const double log_term = std::log(1.0 + b * n * M2 * (Nd + 1.0) / d);
  const double prefactor = 2.0 * std::cbrt(Nd * n * b * M2 + d) / (n * (Nd + 1.0));
  return prefactor * (f0_minus_fstar + early + late * log_term);
}

bool BoundReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const BoundRow& r) { return r.pass; });
}

std::optional<BoundRow> BoundReport::first_failure() const {
  for (const auto& r : rows) {
    if (!r.pass) return r;
  }
  return std::nullopt;
}

namespace {

bool adaptive_defaults(const StepStrategy& s) {
  const double n = static_cast<double>(s.n);
  return s.rule == StepRule::adaptive && s.beta == n * n && s.delta == n * n * n;
}

}  // namespace

std::vector<Corollary> matching_corollaries(const StepStrategy& strategy, double L) {
  switch (strategy.rule) {
    case StepRule::constant:
      if (strategy.alpha * L <= 1.0) return {Corollary::constant_no_L, Corollary::constant_with_L};
      return {Corollary::constant_no_L};
    case StepRule::decreasing_sqrt:
      return {Corollary::decreasing_sqrt};
    case StepRule::decreasing_cbrt_with_L:
      if (strategy.lipschitz >= L) return {Corollary::decreasing_cbrt};
      return {};
    case StepRule::adaptive:
      if (adaptive_defaults(strategy)) return {Corollary::adaptive};
      return {};
  }
  return {};
}

BoundReport certify_run(const RunTrace& trace, Corollary which, double tolerance) {
  const auto& problem = *trace.config.problem;
  const auto& s = trace.config.strategy;
  if (!problem.smooth()) throw UnsupportedProblem("corollary bounds need a smooth problem");
  if (!problem.f_star_lower()) throw UnsupportedProblem("corollary bounds need a lower bound on F*");

  bool matched = false;
  switch (which) {
    case Corollary::constant_no_L:
    case Corollary::constant_with_L: matched = s.rule == StepRule::constant; break;
    case Corollary::decreasing_sqrt: matched = s.rule == StepRule::decreasing_sqrt; break;
    case Corollary::decreasing_cbrt: matched = s.rule == StepRule::decreasing_cbrt_with_L; break;
    case Corollary::adaptive: matched = s.rule == StepRule::adaptive; break;
  }
  if (!matched) {
    throw InvalidArgument(std::string(to_string(which)) + " does not apply to the " +
                          std::string(to_string(s.rule)) + " step rule");
  }

  BoundReport report;
  report.which = which;
  report.tolerance = tolerance;
  auto& p = report.params;
  p.f0_minus_fstar = trace.values.front() - *problem.f_star_lower();
  p.L = *problem.L();
  p.M = problem.M();
  p.alpha = s.alpha;
  if (which == Corollary::decreasing_cbrt) {
    if (s.lipschitz < p.L) throw PreconditionViolation("the cube-root rule's L is below the problem's L");
    p.L = s.lipschitz;
  }
  if (which == Corollary::constant_with_L && s.alpha * p.L > 1.0) {
    throw PreconditionViolation("the constant-step bound with L needs alpha <= 1/L");
  }
  if (which == Corollary::adaptive && !adaptive_defaults(s)) {
    throw PreconditionViolation("the adaptive bound needs beta = n^2 and delta = n^3");
  }

  const std::size_t first = corollary_first_index(which);
  const std::size_t N_max = trace.points.size() - 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t N = first; N <= N_max; ++N) {
    best = std::min(best, trace.grad_norm_sq[N]);
    if (N == 0 && first == 1) continue;
    CorollaryParams q = p;
    q.N = N;
    BoundRow row;
    row.N = N;
    row.bound = bound_corollary(which, q);
    row.observed = best;
    row.slack = row.bound - row.observed;
    row.pass = row.observed <= row.bound + tolerance * std::abs(row.bound);
    report.rows.push_back(row);
  }
  p.N = N_max;
  return report;
}

SummabilityReport check_summability_ada(const RunTrace& trace, std::size_t N) {
  const auto& s = trace.config.strategy;
  require(s.rule == StepRule::adaptive, "summability check needs an adaptive trace");
  require(N < trace.epochs.size(), "horizon beyond the trace");
  const auto& problem = *trace.config.problem;
  SummabilityReport r;
  r.N = N;
  double total = 0.0;
  for (std::size_t K = 0; K <= N; ++K) {
    r.lhs += trace.epochs[K].alpha_cube_dnorm_sum;
    total += trace.epochs[K].dnorm2_sum;
  }
  const double n = static_cast<double>(problem.n());
  const double M2 = problem.M() * problem.M();
  r.rhs_lemma = std::log1p(s.beta * total / s.delta) / s.beta;
  r.rhs = std::log1p(s.beta * n * M2 * (static_cast<double>(N) + 1.0) / s.delta) / s.beta;
  return r;
}

// ---------------------------------------------------------------------------

Interpolant::Interpolant(std::vector<double> tau, std::vector<Vector> nodes)
    : tau_(std::move(tau)), nodes_(std::move(nodes)) {
  require(!tau_.empty() && tau_.size() == nodes_.size(), "interpolant needs one node per breakpoint");
  for (std::size_t k = 1; k < tau_.size(); ++k) require(tau_[k] > tau_[k - 1], "breakpoints must increase");
}

std::size_t Interpolant::segment(double t) const {
  require(t >= tau_.front() && t <= tau_.back(), "time outside the interpolant's range");
  if (tau_.size() == 1) return 0;
  auto it = std::upper_bound(tau_.begin(), tau_.end(), t);
  std::size_t k = static_cast<std::size_t>(it - tau_.begin());
  k = k == 0 ? 0 : k - 1;
  return std::min(k, tau_.size() - 2);
}

Vector Interpolant::operator()(double t) const {
  const std::size_t k = segment(t);
  if (t == tau_[k]) return nodes_[k];
  if (k + 1 >= tau_.size()) return nodes_.back();
  if (t == tau_[k + 1]) return nodes_[k + 1];
  const double theta = (t - tau_[k]) / (tau_[k + 1] - tau_[k]);
  return (1.0 - theta) * nodes_[k] + theta * nodes_[k + 1];
}

Interpolant interpolant(const RunTrace& trace) {
  const std::size_t E = trace.epochs.size();
  require(trace.points.size() == E + 1, "trace points and epochs disagree");
  std::vector<double> tau(E + 1);
  tau[0] = E > 0 ? trace.epochs[0].alpha_sum : 0.0;
  for (std::size_t K = 0; K < E; ++K) tau[K + 1] = tau[K] + trace.epochs[K].alpha_sum;
  return Interpolant(std::move(tau), trace.points);
}

bool GammaTrace::lambda_ok() const {
  return std::all_of(intervals.begin(), intervals.end(), [](const GammaInterval& g) { return g.lambda_ok; });
}

std::optional<std::size_t> GammaTrace::first_increase(double tol) const {
  for (std::size_t k = 1; k < intervals.size(); ++k) {
    if (intervals[k].gamma > intervals[k - 1].gamma * (1.0 + tol)) return intervals[k].K;
  }
  return std::nullopt;
}

GammaTrace gamma_trace(const RunTrace& trace, std::optional<double> M) {
  const double m = M.value_or(trace.config.problem->M());
  const double n = static_cast<double>(trace.config.problem->n());
  const auto w = interpolant(trace);
  GammaTrace out;
  out.intervals.reserve(trace.epochs.size());
  for (std::size_t K = 0; K < trace.epochs.size(); ++K) {
    const auto& e = trace.epochs[K];
    GammaInterval g;
    g.K = K;
    g.tau_start = w.tau()[K];
    g.tau_end = w.tau()[K + 1];
    g.ratio = e.alpha_first / e.alpha_last;
    g.gamma = std::max(n * e.alpha_first * m, std::abs(1.0 - g.ratio));
    const double mass = g.tau_end - g.tau_start;
    if (!e.inner.empty()) {
      g.max_lambda = 0.0;
      g.min_lambda = std::numeric_limits<double>::infinity();
      for (const auto& r : e.inner) {
        const double lambda = n * r.alpha / mass;
        g.max_lambda = std::max(g.max_lambda, lambda);
        g.min_lambda = std::min(g.min_lambda, lambda);
      }
    } else {
      g.max_lambda = n * e.alpha_first / mass;
      g.min_lambda = n * e.alpha_last / mass;
    }
    g.lambda_ok = g.min_lambda >= 0.0 && g.max_lambda <= g.ratio * (1.0 + 1e-12);
    out.intervals.push_back(g);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Weights mu (summing to 1) of the minimum-norm point of the affine hull.
Eigen::VectorXd affine_minimizer(const std::vector<Vector>& gens, const std::vector<std::size_t>& S) {
  const std::size_t m = S.size();
  Eigen::VectorXd mu(m);
  if (m == 1) {
    mu(0) = 1.0;
    return mu;
  }
  const Vector& g0 = gens[S[0]];
  Matrix D(g0.size(), static_cast<Eigen::Index>(m - 1));
  for (std::size_t k = 1; k < m; ++k) D.col(static_cast<Eigen::Index>(k - 1)) = gens[S[k]] - g0;
  const Eigen::VectorXd c = D.completeOrthogonalDecomposition().solve(-g0);
  mu(0) = 1.0 - c.sum();
  mu.tail(static_cast<Eigen::Index>(m - 1)) = c;
  return mu;
}

Vector combination(const std::vector<Vector>& gens, const std::vector<std::size_t>& S, const std::vector<double>& w) {
  Vector x = Vector::Zero(gens[S[0]].size());
  for (std::size_t k = 0; k < S.size(); ++k) x += w[k] * gens[S[k]];
  return x;
}

}  // namespace

Vector min_norm_point(const std::vector<Vector>& gens, const MinNormOptions& options) {
  require(!gens.empty(), "min-norm point of an empty set");
  const auto p = gens.front().size();
  double scale = 1.0;
  std::size_t start = 0;
  for (std::size_t j = 0; j < gens.size(); ++j) {
    require(gens[j].size() == p, "generators must share one dimension");
    const double sq = gens[j].squaredNorm();
    scale = std::max(scale, sq);
    if (sq < gens[start].squaredNorm()) start = j;
  }
  const double tol = options.tolerance * scale;
  constexpr double kZero = 1e-14;

  std::vector<std::size_t> S{start};
  std::vector<double> w{1.0};
  Vector x = gens[start];
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    std::size_t j = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < gens.size(); ++k) {
      const double v = x.dot(gens[k]);
      if (v < best) {
        best = v;
        j = k;
      }
    }
    if (best >= x.squaredNorm() - tol) break;
    if (std::find(S.begin(), S.end(), j) != S.end()) break;
    S.push_back(j);
    w.push_back(0.0);

    for (std::size_t minor = 0; minor <= S.size() + 1; ++minor) {
      const Eigen::VectorXd mu = affine_minimizer(gens, S);
      bool interior = true;
      for (Eigen::Index k = 0; k < mu.size(); ++k) interior = interior && mu(k) > kZero;
      if (interior) {
        for (std::size_t k = 0; k < S.size(); ++k) w[k] = mu(static_cast<Eigen::Index>(k));
        break;
      }
      double theta = 1.0;
      for (std::size_t k = 0; k < S.size(); ++k) {
        const double m = mu(static_cast<Eigen::Index>(k));
        if (m <= kZero && w[k] - m > 0.0) theta = std::min(theta, w[k] / (w[k] - m));
      }
      for (std::size_t k = 0; k < S.size(); ++k) w[k] = (1.0 - theta) * w[k] + theta * mu(static_cast<Eigen::Index>(k));
      std::vector<std::size_t> S2;
      std::vector<double> w2;
      for (std::size_t k = 0; k < S.size(); ++k) {
        if (w[k] > kZero) {
          S2.push_back(S[k]);
          w2.push_back(w[k]);
        }
      }
      if (S2.empty()) {
        // Numerical breakdown; restart from the newest generator.
        S2 = {j};
        w2 = {1.0};
      }
      double total = 0.0;
      for (double v : w2) total += v;
      for (double& v : w2) v /= total;
      S = std::move(S2);
      w = std::move(w2);
    }
    const Vector next = combination(gens, S, w);
    if (next.squaredNorm() >= x.squaredNorm() && iter > 0) {
      x = next.squaredNorm() < x.squaredNorm() ? next : x;
      break;
    }
    x = next;
  }
  return x;
}

double variational_gap(const Vector& v, const std::vector<Vector>& generators) {
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& g : generators) gap = std::min(gap, v.dot(g - v));
  return gap;
}

CriticalityReport criticality(const FiniteSumProblem& problem, const Vector& x) {
  CriticalityReport r;
  r.point = x;
  const auto gens = generator_set(problem, x);
  r.generator_count = gens.size();
  r.min_norm = min_norm_point(gens);
  r.measure = r.min_norm.norm();
  return r;
}

namespace {

struct FlowPath {
  std::vector<double> times;
  std::vector<Vector> points;
  double deviation = 0.0;
};

FlowPath integrate_flow(const FiniteSumProblem& problem, const Interpolant& w, double t, double T, std::size_t steps) {
  FlowPath path;
  const double h = steps == 0 ? 0.0 : T / static_cast<double>(steps);
  Vector y = w(t);
  path.times.push_back(0.0);
  path.points.push_back(y);
  for (std::size_t k = 1; k <= steps; ++k) {
    const Vector v = min_norm_point(generator_set(problem, y));
    y = y - h * v;
    const double s = (k == steps) ? T : h * static_cast<double>(k);
    path.times.push_back(s);
    path.points.push_back(y);
    path.deviation = std::max(path.deviation, (w(std::min(t + s, w.end())) - y).norm());
  }
  return path;
}

}  // namespace

AptReport apt_deviation(const RunTrace& trace, double t, double T, double h, const AptOptions& options) {
  require(h > 0.0, "integration step must be positive");
  require(T >= 0.0, "horizon must be nonnegative");
  const auto& problem = *trace.config.problem;
  const auto w = interpolant(trace);
  require(t >= w.start(), "start time precedes the interpolant");
  require(t + T <= w.end() * (1.0 + 1e-12), "horizon runs past the end of the trace");
  const auto steps = static_cast<std::size_t>(std::ceil(T / h - 1e-9));
  AptReport r;
  auto coarse = integrate_flow(problem, w, t, T, steps);
  auto fine = integrate_flow(problem, w, t, T, 2 * steps);
  r.deviation = coarse.deviation;
  r.deviation_half = fine.deviation;
  r.step_consistent = std::abs(r.deviation - r.deviation_half) <=
                      options.halving_rel_tol * r.deviation_half + options.halving_abs_tol;
  const auto lyap = lyapunov_check(problem, coarse.points, options.lyapunov_tol);
  r.max_value_increase = lyap.max_increase;
  r.lyapunov_ok = lyap.ok;
  r.times = std::move(coarse.times);
  r.flow = std::move(coarse.points);
  return r;
}

LyapunovReport lyapunov_check(const FiniteSumProblem& problem, const std::vector<Vector>& path, double tol) {
  LyapunovReport r;
  if (path.empty()) return r;
  double prev = full_value(problem, path.front());
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double cur = full_value(problem, path[k]);
    const double inc = cur - prev;
    if (inc > r.max_increase) {
      r.max_increase = inc;
      r.worst_step = k;
    }
    if (inc > tol * (1.0 + std::abs(prev))) r.ok = false;
    prev = cur;
  }
  return r;
}

// ---------------------------------------------------------------------------

LemmaCheck lemma_norm_sum_check(const std::vector<Vector>& vectors) {
  require(!vectors.empty(), "norm-sum lemma needs at least one vector");
  Vector sum = Vector::Zero(vectors.front().size());
  double sq = 0.0;
  for (const auto& a : vectors) {
    require(a.size() == sum.size(), "vectors must share one dimension");
    sum += a;
    sq += a.squaredNorm();
  }
  return {sum.squaredNorm(), static_cast<double>(vectors.size()) * sq};
}

LemmaCheck lemma_log_sum_check(const std::vector<double>& a, double b, double c) {
  require(!a.empty(), "log-sum lemma needs a nonempty sequence");
  require(b > 0.0 && c > 0.0, "log-sum lemma needs b, c > 0");
  LemmaCheck r;
  double cum = 0.0;
  for (double x : a) {
    require(x > 0.0, "log-sum lemma needs positive terms");
    cum += x;
    r.lhs += x / (b + c * cum);
  }
  r.rhs = std::log1p(c * cum / b) / c;
  return r;
}

double lipschitz_gradient_check(const FiniteSumProblem& problem,
                                const std::vector<std::pair<Vector, Vector>>& pairs) {
  if (!problem.smooth()) throw UnsupportedProblem("gradient Lipschitz check needs a smooth problem");
  double worst = 0.0;
  for (const auto& [x, y] : pairs) {
    const double dist = (x - y).norm();
    require(dist > 0.0, "gradient Lipschitz check needs distinct points");
    worst = std::max(worst, (full_direction(problem, x) - full_direction(problem, y)).norm() / dist);
  }
  return worst;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "slope fit needs two or more points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    require(x[k] > 0.0 && y[k] > 0.0, "slope fit needs positive values");
    const double lx = std::log(x[k]);
    const double ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = m * sxx - sx * sx;
  require(denom > 0.0, "slope fit needs distinct abscissae");
  return (m * sxy - sx * sy) / denom;
}

}  // namespace iwr
