// Acceptance criteria, one per command-line argument. Each prints a single
// "PASS <name>: ..." or "FAIL <name>: ..." line and exits 0 on pass.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>

#include <iwr/analysis.hpp>
#include <iwr_cli/cli.hpp>

namespace iwr {
namespace {

// Tolerances, pinned.
constexpr double kClaim1Tol = 1e-12;
constexpr double kClaim2Tol = 1e-9;
constexpr double kBoundTol = 1e-9;
constexpr double kSummabilityTol = 1e-9;
constexpr double kLemmaTol = 1e-12;
constexpr double kAlignedSlack = 1e-12;
constexpr double kFiniteDiffTol = 1e-5;
constexpr double kFiniteDiffStep = 1e-6;
constexpr double kMinNormTol = 1e-6;
constexpr double kCertificateTol = 1e-8;
constexpr double kMedianTol = 1e-2;
constexpr double kCriticalityTol = 1e-2;
constexpr double kGammaReduction = 1e-2;
constexpr double kRatioTol = 1e-3;
constexpr double kSlopeRegressionTol = 1e-2;

// Slopes of log min ||grad F||^2 against log N over [1e2, 1e4], recorded at
// first build on logistic n = 32, p = 5, seed 1.
constexpr double kPinnedSlopeSqrt = -2.8063;
constexpr double kPinnedSlopeCbrt = -1.6599;
constexpr double kPinnedSlopeAdaptive = -1.1749;

constexpr std::size_t kN = 32;
constexpr std::size_t kP = 5;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

std::shared_ptr<const FiniteSumProblem> logistic(std::uint64_t seed = 1) {
  return std::make_shared<const FiniteSumProblem>(make_problem(ProblemKind::logistic, kN, kP, seed));
}

RunTrace run_on(std::shared_ptr<const FiniteSumProblem> problem, const StepStrategy& strategy, std::size_t epochs,
                EvalPointPolicy policy = EvalPointPolicy::incremental(),
                PermutationPolicy perm = PermutationPolicy::identity(), RecordLevel level = RecordLevel::full) {
  RunConfig config;
  config.problem = std::move(problem);
  config.strategy = strategy;
  config.eval_policy = policy;
  config.permutation = perm;
  config.x0 = Vector::Zero(static_cast<Eigen::Index>(config.problem->p()));
  config.epochs = epochs;
  config.record_level = level;
  return run(config);
}

std::vector<std::pair<std::string, EvalPointPolicy>> policy_grid() {
  return {{"full", EvalPointPolicy::full_gradient()},
          {"incremental", EvalPointPolicy::incremental()},
          {"minibatch4", EvalPointPolicy::mini_batch(4)},
          {"async3", EvalPointPolicy::delayed_async(3, 11)},
          {"mix", EvalPointPolicy::convex_mix(13)}};
}

std::vector<std::pair<std::string, StepStrategy>> strategy_grid(double L) {
  return {{"constant", StepStrategy::constant(0.5 / L, kN)},
          {"sqrt", StepStrategy::decreasing_sqrt(kN)},
          {"cbrt", StepStrategy::decreasing_cbrt(L, kN)},
          {"adaptive", StepStrategy::adaptive_default(kN)}};
}

// The corollaries whose step rule matches, with the constant step used for each.
std::vector<std::tuple<std::string, StepStrategy, Corollary>> corollary_pairs(double L) {
  return {{"cor1", StepStrategy::constant(0.1, kN), Corollary::constant_no_L},
          {"cor2", StepStrategy::decreasing_sqrt(kN), Corollary::decreasing_sqrt},
          {"cor3", StepStrategy::constant(0.5 / L, kN), Corollary::constant_with_L},
          {"cor4", StepStrategy::decreasing_cbrt(L, kN), Corollary::decreasing_cbrt},
          {"cor5", StepStrategy::adaptive_default(kN), Corollary::adaptive}};
}

Verdict claim1() {
  const auto prob = logistic();
  MarginReport all;
  for (const auto& [sn, s] : strategy_grid(*prob->L())) {
    for (const auto& [pn, p] : policy_grid()) all.merge(check_claim1(run_on(prob, s, 200, p)));
  }
  return {all.passes(kClaim1Tol), fmt("20 combinations, %zu inner steps, min relative slack %.3e (tol -%.0e)",
                                      all.checked, all.min_relative, kClaim1Tol)};
}

Verdict claim2() {
  const auto prob = logistic();
  MarginReport stated, corrected;
  std::string worst;
  for (const auto& [sn, s] : strategy_grid(*prob->L())) {
    for (const auto& [pn, p] : policy_grid()) {
      const auto r = check_claim2_range(run_on(prob, s, 501, p), 1, 500);
      if (r.stated.min_relative < stated.min_relative) worst = sn + "/" + pn;
      stated.merge(r.stated);
      corrected.merge(r.corrected);
    }
  }
  return {stated.passes(kClaim2Tol),
          fmt("stated form min relative slack %.3e at %s K=%zu (tol -%.0e); corrected form %.3e", stated.min_relative,
              worst.c_str(), stated.worst.epoch, kClaim2Tol, corrected.min_relative)};
}

Verdict corollaries() {
  const auto prob = logistic();
  bool ok = true;
  std::string detail;
  for (const auto& [name, s, which] : corollary_pairs(*prob->L())) {
    const auto trace = run_on(prob, s, 2000, EvalPointPolicy::incremental(), PermutationPolicy::identity(),
                              RecordLevel::epoch_only);
    const auto report = certify_run(trace, which, kBoundTol);
    double min_ratio = std::numeric_limits<double>::infinity();
    for (const auto& row : report.rows) min_ratio = std::min(min_ratio, row.bound / row.observed);
    ok = ok && report.all_pass();
    detail += fmt("%s %s (min bound/observed %.3g) ", name.c_str(), report.all_pass() ? "ok" : "FAILED", min_ratio);
  }
  return {ok, detail + "over N=0..2000"};
}

Verdict summability() {
  const auto trace = run_on(logistic(), StepStrategy::adaptive_default(kN), 2000, EvalPointPolicy::incremental(),
                            PermutationPolicy::identity(), RecordLevel::epoch_only);
  const auto r = check_summability_ada(trace, trace.epochs.size() - 1);
  return {r.relative() >= -kSummabilityTol,
          fmt("N=%zu lhs %.6g, lemma rhs %.6g, bound %.6g, relative slack %.3e", r.N, r.lhs, r.rhs_lemma, r.rhs,
              r.relative())};
}

Vector gaussian(std::mt19937_64& rng, std::size_t p, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(static_cast<Eigen::Index>(p));
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = normal(rng);
  return v;
}

Verdict lemmas() {
  std::mt19937_64 rng(101);
  std::size_t norm_fail = 0, log_fail = 0;
  double worst_norm = std::numeric_limits<double>::infinity(), worst_log = worst_norm;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Vector> vs;
    const std::size_t p = 1 + trial % 6;
    for (int k = 0; k <= trial % 12; ++k) vs.push_back(gaussian(rng, p, 1.0 + trial % 3));
    const auto c = lemma_norm_sum_check(vs);
    if (!c.holds(kLemmaTol)) ++norm_fail;
    worst_norm = std::min(worst_norm, c.slack() / std::max(1.0, c.rhs));
  }
  std::lognormal_distribution<double> logn(0.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(1 + trial % 40);
    for (auto& x : a) x = logn(rng);
    const auto c = lemma_log_sum_check(a, logn(rng), logn(rng));
    if (!c.holds(kLemmaTol)) ++log_fail;
    worst_log = std::min(worst_log, c.slack() / std::max(1.0, c.rhs));
  }
  double aligned_slack = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vector u = gaussian(rng, 1 + trial % 4);
    std::vector<Vector> vs(2 + trial % 7, u);
    aligned_slack = std::max(aligned_slack, std::abs(lemma_norm_sum_check(vs).slack()) / std::max(1.0, u.squaredNorm()));
  }
  return {norm_fail == 0 && log_fail == 0 && aligned_slack <= kAlignedSlack,
          fmt("norm-sum failures %zu/1000 (min rel slack %.3g), log-sum failures %zu/1000 (min rel slack %.3g), "
              "aligned equality slack %.3g",
              norm_fail, worst_norm, log_fail, worst_log, aligned_slack)};
}

Verdict oracles() {
  std::mt19937_64 rng(202);
  double worst_fd = 0.0;
  double worst_ratio = 0.0;
  std::string detail;
  bool ok = true;
  for (auto kind : {ProblemKind::logistic, ProblemKind::sigmoid_nonconvex, ProblemKind::median, ProblemKind::relu_net}) {
    const auto prob = make_problem(kind, kN, kP, 1);
    if (!prob.smooth()) continue;
    double fd = 0.0;
    for (int k = 0; k < 100; ++k) fd = std::max(fd, finite_diff_check(prob, gaussian(rng, kP, 2.0), kFiniteDiffStep));
    std::vector<std::pair<Vector, Vector>> pairs;
    for (int k = 0; k < 1000; ++k) {
      const Vector x = gaussian(rng, kP, 3.0);
      pairs.emplace_back(x, x + gaussian(rng, kP, k % 2 ? 0.01 : 1.0));
    }
    const double ratio = lipschitz_gradient_check(prob, pairs) / *prob.L();
    ok = ok && fd <= kFiniteDiffTol && ratio <= 1.0;
    worst_fd = std::max(worst_fd, fd);
    worst_ratio = std::max(worst_ratio, ratio);
    detail += std::string(to_string(kind)) + " ";
  }
  return {ok, fmt("smooth zoo [%s] max finite-diff error %.3e (tol %.0e), max Lipschitz ratio / L %.4f", detail.c_str(),
                  worst_fd, kFiniteDiffTol, worst_ratio)};
}

// Brute-force min-norm point: dense grid over barycentric weights, refined by
// repeatedly zooming into the best cell.
Vector brute_min_norm(const std::vector<Vector>& gens) {
  const std::size_t m = gens.size();
  if (m == 1) return gens[0];
  const std::size_t dims = m - 1;
  const int steps = dims == 1 ? 2000 : dims == 2 ? 200 : 40;
  std::vector<double> center(dims, 0.5);
  double half = 0.5;
  Vector best = gens[0];
  double best_sq = std::numeric_limits<double>::infinity();
  for (int round = 0; round < 60; ++round) {
    std::vector<double> lam(dims);
    std::vector<int> idx(dims, 0);
    std::vector<double> best_lam = center;
    while (true) {
      double rest = 1.0;
      bool inside = true;
      for (std::size_t d = 0; d < dims; ++d) {
        lam[d] = std::clamp(center[d] - half + 2.0 * half * idx[d] / steps, 0.0, 1.0);
        rest -= lam[d];
      }
      if (rest < 0.0) inside = false;
      if (inside) {
        Vector v = rest * gens[dims];
        for (std::size_t d = 0; d < dims; ++d) v += lam[d] * gens[d];
        const double sq = v.squaredNorm();
        if (sq < best_sq) {
          best_sq = sq;
          best = v;
          best_lam = lam;
        }
      }
      std::size_t d = 0;
      while (d < dims && ++idx[d] > steps) idx[d++] = 0;
      if (d == dims) break;
    }
    center = best_lam;
    half *= 0.5;
  }
  return best;
}

Verdict min_norm() {
  std::mt19937_64 rng(303);
  double worst_dev = 0.0, worst_segment = 0.0, worst_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + trial % 4;
    const std::size_t p = 1 + (trial / 4) % 3;
    const Vector shift = gaussian(rng, p, 0.8);
    std::vector<Vector> gens;
    for (std::size_t k = 0; k < m; ++k) gens.push_back(shift + gaussian(rng, p));
    const Vector v = min_norm_point(gens);
    worst_dev = std::max(worst_dev, (v - brute_min_norm(gens)).norm());
    worst_gap = std::min(worst_gap, variational_gap(v, gens));
    if (m == 2) {
      // Segment a + t (b - a), t in [0, 1].
      const Vector e = gens[1] - gens[0];
      const double t = e.squaredNorm() > 0.0 ? std::clamp(-gens[0].dot(e) / e.squaredNorm(), 0.0, 1.0) : 0.0;
      worst_segment = std::max(worst_segment, (v - (gens[0] + t * e)).norm());
    }
  }
  return {worst_dev <= kMinNormTol && worst_segment <= kMinNormTol && worst_gap >= -kCertificateTol,
          fmt("100 hulls: max deviation from grid search %.3e, from segment formula %.3e (tol %.0e); min variational "
              "gap %.3e (tol -%.0e)",
              worst_dev, worst_segment, kMinNormTol, worst_gap, kCertificateTol)};
}

Verdict median() {
  const auto prob = std::make_shared<const FiniteSumProblem>(make_problem(ProblemKind::median, 101, 1, 1));
  std::vector<double> b(prob->data()->features.data(), prob->data()->features.data() + 101);
  std::nth_element(b.begin(), b.begin() + 50, b.end());
  const double med = b[50];
  const auto trace = run_on(prob, StepStrategy::decreasing_sqrt(101), 10000, EvalPointPolicy::incremental(),
                            PermutationPolicy::identity(), RecordLevel::epoch_only);
  const auto best = static_cast<std::size_t>(std::min_element(trace.values.begin(), trace.values.end()) -
                                             trace.values.begin());
  const double dist = std::abs(trace.points[best](0) - med);
  const double crit = criticality(*prob, trace.points[best]).measure;
  return {dist < kMedianTol && crit <= kCriticalityTol,
          fmt("best iterate K=%zu: |x - median| %.3e (tol %.0e), criticality %.3e (tol %.0e)", best, dist, kMedianTol,
              crit, kCriticalityTol)};
}

Verdict gamma_reduction() {
  const auto trace = run_on(logistic(), StepStrategy::adaptive_default(kN), 10001, EvalPointPolicy::incremental(),
                            PermutationPolicy::identity(), RecordLevel::epoch_only);
  const auto g = gamma_trace(trace);
  const auto& first = g.intervals.front();
  const auto& last = g.intervals.at(10000);
  const double reduction = last.gamma / first.gamma;
  const double ratio_excess = last.ratio - 1.0;
  return {reduction <= kGammaReduction && ratio_excess <= kRatioTol,
          fmt("gamma(tau_0) %.4g, gamma(tau_1e4) %.4g, reduction %.4f (target <= %.0e); step ratio - 1 = %.3e "
              "(tol %.0e)",
              first.gamma, last.gamma, reduction, kGammaReduction, ratio_excess, kRatioTol)};
}

Verdict order_independence() {
  const auto prob = logistic();
  const double L = *prob->L();
  std::vector<std::pair<std::string, PermutationPolicy>> orders;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) orders.emplace_back(fmt("shuffled(%llu)", (unsigned long long)seed),
                                                                       PermutationPolicy::shuffled(seed));
  orders.emplace_back("adversarial", PermutationPolicy::adversarial_max_norm());
  std::size_t claim1_fail = 0, claim2_fail = 0, claim2c_fail = 0, cor_fail = 0, total = 0;
  double claim2_worst = std::numeric_limits<double>::infinity();
  for (const auto& [on, order] : orders) {
    for (const auto& [name, s, which] : corollary_pairs(L)) {
      const auto trace = run_on(prob, s, 501, EvalPointPolicy::incremental(), order);
      ++total;
      if (!check_claim1(trace).passes(kClaim1Tol)) ++claim1_fail;
      const auto c2 = check_claim2_range(trace, 1, 500);
      claim2_worst = std::min(claim2_worst, c2.stated.min_relative);
      if (!c2.stated.passes(kClaim2Tol)) ++claim2_fail;
      if (!c2.corrected.passes(kClaim2Tol)) ++claim2c_fail;
      if (!certify_run(trace, which, kBoundTol).all_pass()) ++cor_fail;
    }
  }
  return {claim1_fail + claim2_fail + cor_fail == 0,
          fmt("%zu runs (11 orders x 5 rules, 500 epochs): claim1 failures %zu, stated claim2 failures %zu (worst "
              "%.3e), corrected claim2 failures %zu, corollary failures %zu",
              total, claim1_fail, claim2_fail, claim2_worst, claim2c_fail, cor_fail)};
}

Verdict slopes() {
  Json base = {{"problem", {{"kind", "logistic"}, {"n", kN}, {"p", kP}, {"seed", 1}}},
               {"strategy", Json::object()},
               {"epochs", 10000},
               {"record_level", "epoch_only"}};
  cli::SweepOptions options;
  options.slope_min = 100;
  options.slope_max = 10000;
  const auto cells =
      cli::run_sweep(base, {cli::parse_axis("strategy.rule=decreasing_sqrt,decreasing_cbrt_with_L,adaptive")}, options);
  const double sqrt_slope = cells.at(0).slope.value_or(NAN);
  const double cbrt_slope = cells.at(1).slope.value_or(NAN);
  const double ada_slope = cells.at(2).slope.value_or(NAN);
  const bool steeper = cbrt_slope < sqrt_slope && ada_slope < sqrt_slope;
  const bool pinned = std::abs(sqrt_slope - kPinnedSlopeSqrt) <= kSlopeRegressionTol &&
                      std::abs(cbrt_slope - kPinnedSlopeCbrt) <= kSlopeRegressionTol &&
                      std::abs(ada_slope - kPinnedSlopeAdaptive) <= kSlopeRegressionTol;
  return {steeper && pinned, fmt("slopes sqrt %.4f, cbrt %.4f, adaptive %.4f; cbrt and adaptive steeper than sqrt: "
                                 "%s; matches pinned values: %s",
                                 sqrt_slope, cbrt_slope, ada_slope, steeper ? "yes" : "no", pinned ? "yes" : "no")};
}

}  // namespace
}  // namespace iwr

int main(int argc, char** argv) {
  using namespace iwr;
  const std::map<std::string, std::function<Verdict()>> criteria = {
      {"claim1", claim1},           {"claim2", claim2},   {"corollaries", corollaries},
      {"summability", summability}, {"lemmas", lemmas},   {"oracles", oracles},
      {"min_norm", min_norm},       {"median", median},   {"gamma", gamma_reduction},
      {"order_independence", order_independence},         {"slopes", slopes}};
  std::vector<std::string> names;
  for (int k = 1; k < argc; ++k) names.emplace_back(argv[k]);
  if (names.empty()) {
    for (const auto& [name, fn] : criteria) names.push_back(name);
  }
  int failures = 0;
  for (const auto& name : names) {
    const auto it = criteria.find(name);
    if (it == criteria.end()) {
      std::printf("FAIL %s: unknown criterion\n", name.c_str());
      ++failures;
      continue;
    }
    Verdict v;
    try {
      v = it->second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    if (!v.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
