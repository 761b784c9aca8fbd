#pragma once

// Certificates for the step-length and descent inequalities, the closed-form
// corollary bounds, and the continuous-time objects built from a trace.

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "iwr/engine.hpp"

namespace iwr {

/// Raised when a bound is requested outside the regime it was derived for.
class PreconditionViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Running minimum of slack = rhs - lhs over a set of checked inequalities.
struct MarginReport {
  double min_slack = std::numeric_limits<double>::infinity();
  double min_relative = std::numeric_limits<double>::infinity();  // slack / scale
  StepIndex worst;
  double lhs_at_worst = 0.0;
  double rhs_at_worst = 0.0;
  std::size_t checked = 0;

  /// Records one inequality lhs <= rhs; `scale` normalizes the slack.
  void add(double lhs, double rhs, double scale, StepIndex at);
  void merge(const MarginReport& other);
  bool passes(double tol) const { return checked == 0 || min_relative >= -tol; }
};

// ---------------------------------------------------------------------------
// Step-length bound: max{||z_i - x_K||^2, ||x_{K+1} - x_K||^2, ||zhat_{i-1} - x_K||^2}
// <= n sum_j alpha_{K,j}^2 ||d_j||^2 at every inner step. Relative slack uses
// max(|lhs|, |rhs|) as scale.

MarginReport check_claim1(const EpochRecord& record);
MarginReport check_claim1(const RunTrace& trace);

// ---------------------------------------------------------------------------
// Per-epoch descent inequality.

struct Claim2Check {
  std::size_t K = 0;
  double anchor = 0.0;          // alpha_K
  double lhs = 0.0;             // F(x_{K+1}) - F(x_K) + (n alpha_K / 2) ||grad F(x_K)||^2
  double step_sum = 0.0;        // S = sum_j alpha_{K,j}^2 ||d_j||^2
  double coefficient = 0.0;     // alpha_K L^2 n^2 + L n / 2 - 1 / (2 alpha_K)
  double mismatch_term = 0.0;   // alpha_K M^2 sum_i (1 - alpha_{K,i}^3 / alpha_K^3)
  double rhs = 0.0;             // coefficient * S + mismatch_term, as stated
  /// Same with the coefficient's negative part dropped, which is what the
  /// descent lemma step supports when n alpha_K L < 1.
  double rhs_corrected = 0.0;
  double slack() const { return rhs - lhs; }
  double slack_corrected() const { return rhs_corrected - lhs; }
};

/// Needs a smooth problem and a full record; K >= 1 uses alpha_K = alpha_{K-1,n},
/// K = 0 uses the strategy's initial anchor.
Claim2Check check_claim2(const RunTrace& trace, std::size_t K);

struct Claim2Range {
  MarginReport stated;     // scale 1 + |rhs|
  MarginReport corrected;  // scale 1 + |rhs_corrected|
  bool lex_monotone = true;
};

/// Checks K in [K_lo, K_hi] (clipped to the trace length).
Claim2Range check_claim2_range(const RunTrace& trace, std::size_t K_lo, std::size_t K_hi);

struct DescentDecompositionCheck {
  std::size_t K = 0;
  double anchor = 0.0;
  double lhs = 0.0;  // <grad F(x_K), x_{K+1} - x_K> + ||x_{K+1} - x_K||^2 / (2 n alpha_K)
  double rhs = 0.0;  // -(n alpha_K/2)||grad F||^2 + alpha_K L^2 n^2 S + alpha_K M^2 sum (alpha_{K,i}/alpha_K - 1)^2
  double slack() const { return rhs - lhs; }
};

DescentDecompositionCheck check_descent_decomposition(const RunTrace& trace, std::size_t K);
MarginReport check_descent_decomposition_range(const RunTrace& trace, std::size_t K_lo, std::size_t K_hi);

// ---------------------------------------------------------------------------
// Closed-form bounds on min ||grad F(x_K)||^2.

enum class Corollary { constant_no_L = 1, decreasing_sqrt = 2, constant_with_L = 3, decreasing_cbrt = 4, adaptive = 5 };

std::string_view to_string(Corollary which);
Corollary parse_corollary(std::string_view name);  // "cor1".."cor5" or "1".."5"

struct CorollaryParams {
  double f0_minus_fstar = 0.0;
  double L = 0.0;
  double M = 0.0;
  double alpha = 0.0;  // constant rules: alpha_{K,i} = alpha / n
  std::size_t N = 0;
};

/// The bound exactly as stated. Throws PreconditionViolation for the
/// constant_with_L bound when alpha > 1/L, InvalidArgument when N = 0 for the
/// two bounds whose minimum runs over K = 1..N.
double bound_corollary(Corollary which, const CorollaryParams& params);

/// First epoch index the corollary's minimum ranges over (0 or 1).
std::size_t corollary_first_index(Corollary which);

/// Intermediate bound before substituting a step schedule, for prescribed
/// steps alpha_K = alpha_{K,i}: 2/(sum n alpha_K) (F0 - F* + (alpha_0 L^2 M^2 n + L M^2/2) sum n^2 alpha_K^2).
double bound_prescribed_no_L(const StepStrategy& strategy, double f0_minus_fstar, double L, double M,
                             std::size_t N);
/// Same with n alpha_K <= 1/L: 2/(sum n alpha_K) (F0 - F* + L^2 M^2 sum n^3 alpha_K^3).
double bound_prescribed_with_L(const StepStrategy& strategy, double f0_minus_fstar, double L, double M,
                               std::size_t N);
/// Adaptive bound for general (beta, delta) before the beta = n^2, delta = n^3
/// substitution, with the constants as they follow from the derivation:
/// the ratio alpha_K^3/alpha_{K,j}^3 is bounded by 1 + beta n M^2 / delta.
double bound_adaptive_general(const StepStrategy& strategy, double f0_minus_fstar, double L, double M,
                              std::size_t N);

struct BoundRow {
  std::size_t N = 0;
  double bound = 0.0;
  double observed = 0.0;  // min over the corollary's K range of ||grad F(x_K)||^2
  double slack = 0.0;     // bound - observed
  bool pass = false;
};

struct BoundReport {
  Corollary which = Corollary::constant_no_L;
  CorollaryParams params;  // N holds the largest certified horizon
  std::vector<BoundRow> rows;
  double tolerance = 1e-9;
  bool all_pass() const;
  std::optional<BoundRow> first_failure() const;
};

/// Corollaries whose step rule matches the trace's strategy.
std::vector<Corollary> matching_corollaries(const StepStrategy& strategy, double L);

/// Compares the bound with the observed running minimum at every horizon N
/// up to the trace length, F* replaced by the problem's lower bound. Throws
/// InvalidArgument on a strategy/corollary mismatch, PreconditionViolation
/// when the corollary's precondition fails, UnsupportedProblem for
/// nonsmooth problems or a missing lower bound.
BoundReport certify_run(const RunTrace& trace, Corollary which, double tolerance = 1e-9);

struct SummabilityReport {
  std::size_t N = 0;
  double lhs = 0.0;        // sum_{K<=N} sum_i alpha_{K,i}^3 ||d||^2
  double rhs_lemma = 0.0;  // (1/beta) log(1 + beta sum ||d||^2 / delta)
  double rhs = 0.0;        // (1/beta) log(1 + beta n M^2 (N+1) / delta)
  double slack() const { return rhs - lhs; }
  double relative() const { return slack() / (1.0 + std::abs(rhs)); }
};

/// Adaptive traces only; per-epoch sums suffice so either record level works.
SummabilityReport check_summability_ada(const RunTrace& trace, std::size_t N);

// ---------------------------------------------------------------------------
// Continuous-time objects.

/// Piecewise-affine curve through (tau_K, x_K) with tau_{K+1} - tau_K equal
/// to the step mass of epoch K. The origin is tau_0 = sum_i alpha_{0,i}, so
/// tau_K = (K+1) alpha for constant steps alpha/n.
class Interpolant {
 public:
  Interpolant(std::vector<double> tau, std::vector<Vector> nodes);

  const std::vector<double>& tau() const { return tau_; }
  const std::vector<Vector>& nodes() const { return nodes_; }
  double start() const { return tau_.front(); }
  double end() const { return tau_.back(); }

  /// w(t) for t in [start, end]; exact at breakpoints.
  Vector operator()(double t) const;
  /// Segment K with tau_K <= t < tau_{K+1} (the last segment includes end()).
  std::size_t segment(double t) const;

 private:
  std::vector<double> tau_;
  std::vector<Vector> nodes_;
};

Interpolant interpolant(const RunTrace& trace);

struct GammaInterval {
  std::size_t K = 0;
  double tau_start = 0.0;
  double tau_end = 0.0;
  double gamma = 0.0;        // max{n alpha_{K,1} M, |1 - alpha_{K,1}/alpha_{K,n}|}
  double ratio = 0.0;        // alpha_{K,1} / alpha_{K,n}
  double max_lambda = 0.0;   // max_i n alpha_{K,i} / (tau_{K+1} - tau_K)
  double min_lambda = 0.0;
  bool lambda_ok = true;     // 0 <= lambda_i <= ratio
};

struct GammaTrace {
  std::vector<GammaInterval> intervals;
  bool lambda_ok() const;
  /// First K where gamma increases by more than `tol` relative, if any.
  std::optional<std::size_t> first_increase(double tol = 0.0) const;
};

/// `M` defaults to the problem's constant.
GammaTrace gamma_trace(const RunTrace& trace, std::optional<double> M = std::nullopt);

// ---------------------------------------------------------------------------
// Minimum-norm points and criticality.

struct MinNormOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 10000;
};

/// Minimum-norm point of conv(generators), Wolfe's method. Stops when
/// <v, g - v> >= -tolerance * max(1, max ||g||^2) for every generator g.
Vector min_norm_point(const std::vector<Vector>& generators, const MinNormOptions& options = {});

/// min over g of <v, g - v>, the variational certificate for v.
double variational_gap(const Vector& v, const std::vector<Vector>& generators);

struct CriticalityReport {
  Vector point;
  Vector min_norm;
  double measure = 0.0;  // ||min_norm||
  std::size_t generator_count = 0;
};

CriticalityReport criticality(const FiniteSumProblem& problem, const Vector& x);

struct AptOptions {
  double lyapunov_tol = 1e-10;     // allowed F increase per step, relative to 1 + |F|
  double halving_rel_tol = 0.1;    // |dev_h - dev_{h/2}| <= rel * dev_{h/2} + abs
  double halving_abs_tol = 1e-6;
};

struct AptReport {
  double deviation = 0.0;          // sup_s ||w(t+s) - y_h(s)||
  double deviation_half = 0.0;     // same with step h/2
  bool step_consistent = true;
  double max_value_increase = 0.0; // largest F(y_{k+1}) - F(y_k) along the h path
  bool lyapunov_ok = true;
  std::vector<double> times;       // s grid of the h path
  std::vector<Vector> flow;        // y_h(s)
};

/// Integrates y' = -min_norm_point(generators(y)) from y(0) = w(t) by explicit
/// Euler with step h over [0, T] and compares with the interpolant. One flow
/// stands in for the solution set, so this is exact only where the flow is
/// unique. Requires t >= w.start() and t + T <= w.end().
AptReport apt_deviation(const RunTrace& trace, double t, double T, double h, const AptOptions& options = {});

struct LyapunovReport {
  double max_increase = 0.0;
  std::size_t worst_step = 0;
  bool ok = true;
};

/// F nonincreasing along a path up to `tol * (1 + |F|)` per step.
LyapunovReport lyapunov_check(const FiniteSumProblem& problem, const std::vector<Vector>& path, double tol);

// ---------------------------------------------------------------------------
// Technical lemmas and oracle checks.

struct LemmaCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack() const { return rhs - lhs; }
  bool holds(double tol = 0.0) const { return lhs <= rhs + tol * std::max(1.0, std::abs(rhs)); }
};

/// ||sum a_i||^2 <= m sum ||a_i||^2.
LemmaCheck lemma_norm_sum_check(const std::vector<Vector>& vectors);
/// sum_{i<=m} a_i / (b + c sum_{k<=i} a_k) <= (1/c) log(1 + c sum a_i / b).
LemmaCheck lemma_log_sum_check(const std::vector<double>& a, double b, double c);

/// max over pairs of ||grad F(x) - grad F(y)|| / ||x - y||. Pairs with x == y
/// are rejected.
double lipschitz_gradient_check(const FiniteSumProblem& problem,
                                const std::vector<std::pair<Vector, Vector>>& pairs);

/// Least-squares slope of log(y) against log(x); needs two or more positive points.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace iwr
