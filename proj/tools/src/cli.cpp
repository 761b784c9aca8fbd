#include "iwr_cli/cli.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace iwr::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  throw ConfigError("key '" + key + "': " + what);
}

void reject_unknown(const Json& j, const std::string& prefix, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(prefix.empty() ? "<root>" : prefix.substr(0, prefix.size() - 1), "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) config_error(prefix + it.key(), "unknown key");
  }
}

template <class T>
std::optional<T> opt_field(const Json& j, const std::string& prefix, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    config_error(prefix + key, "wrong type");
  }
}

template <class T>
T field(const Json& j, const std::string& prefix, const char* key, T fallback) {
  return opt_field<T>(j, prefix, key).value_or(fallback);
}

template <class F>
auto parse_enum(const std::string& key, const std::string& text, F parse) {
  try {
    return parse(text);
  } catch (const InvalidArgument& e) {
    config_error(key, e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

template <class Fn>
void write_with(const fs::path& path, Fn fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  fn(out);
}

}  // namespace

// ---------------------------------------------------------------------------

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["problem"] = {{"kind", std::string(to_string(c.problem.kind))},
                  {"n", c.problem.n},
                  {"p", c.problem.p},
                  {"seed", c.problem.seed}};
  Json s;
  s["rule"] = std::string(to_string(c.strategy.rule));
  if (c.strategy.alpha) s["alpha"] = *c.strategy.alpha;
  if (c.strategy.alpha_over_L) s["alpha_over_L"] = *c.strategy.alpha_over_L;
  if (c.strategy.lipschitz) s["lipschitz"] = *c.strategy.lipschitz;
  if (c.strategy.delta) s["delta"] = *c.strategy.delta;
  if (c.strategy.beta) s["beta"] = *c.strategy.beta;
  j["strategy"] = s;
  j["eval_policy"] = eval_policy_to_json(c.eval_policy);
  j["permutation"] = permutation_to_json(c.permutation);
  j["x0"] = {{"kind", c.x0.kind == X0Spec::Kind::zero ? "zero" : "ball"},
             {"radius", c.x0.radius},
             {"seed", c.x0.seed}};
  j["epochs"] = c.epochs;
  j["record_level"] = std::string(to_string(c.record_level));
  j["monitor_radius"] = c.monitor_radius ? Json(*c.monitor_radius) : Json(nullptr);
  j["checks"] = c.checks;
  j["output_dir"] = c.output_dir;
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  reject_unknown(j, "", {"problem", "strategy", "eval_policy", "permutation", "x0", "epochs", "record_level",
                         "monitor_radius", "checks", "output_dir"});
  ExperimentConfig c;

  if (auto it = j.find("problem"); it != j.end()) {
    const Json& pj = *it;
    reject_unknown(pj, "problem.", {"kind", "n", "p", "seed"});
    c.problem.kind = parse_enum("problem.kind", field<std::string>(pj, "problem.", "kind", "logistic"),
                                parse_problem_kind);
    if (c.problem.kind == ProblemKind::custom) config_error("problem.kind", "custom problems cannot be configured");
    c.problem.n = field<std::size_t>(pj, "problem.", "n", c.problem.n);
    c.problem.p = field<std::size_t>(pj, "problem.", "p", c.problem.p);
    c.problem.seed = field<std::uint64_t>(pj, "problem.", "seed", c.problem.seed);
    if (c.problem.n < 1) config_error("problem.n", "must be at least 1");
    if (c.problem.p < 1) config_error("problem.p", "must be at least 1");
  }

  if (auto it = j.find("strategy"); it != j.end()) {
    const Json& sj = *it;
    reject_unknown(sj, "strategy.", {"rule", "alpha", "alpha_over_L", "lipschitz", "delta", "beta"});
    c.strategy.rule =
        parse_enum("strategy.rule", field<std::string>(sj, "strategy.", "rule", "constant"), parse_step_rule);
    c.strategy.alpha = opt_field<double>(sj, "strategy.", "alpha");
    c.strategy.alpha_over_L = opt_field<double>(sj, "strategy.", "alpha_over_L");
    c.strategy.lipschitz = opt_field<double>(sj, "strategy.", "lipschitz");
    c.strategy.delta = opt_field<double>(sj, "strategy.", "delta");
    c.strategy.beta = opt_field<double>(sj, "strategy.", "beta");
  }

  if (auto it = j.find("eval_policy"); it != j.end()) {
    const Json& ej = *it;
    reject_unknown(ej, "eval_policy.", {"rule", "batch", "max_delay", "seed"});
    c.eval_policy.rule =
        parse_enum("eval_policy.rule", field<std::string>(ej, "eval_policy.", "rule", "incremental"), parse_eval_rule);
    c.eval_policy.batch = field<std::size_t>(ej, "eval_policy.", "batch", 1);
    c.eval_policy.max_delay = field<std::size_t>(ej, "eval_policy.", "max_delay", 0);
    c.eval_policy.seed = field<std::uint64_t>(ej, "eval_policy.", "seed", 0);
    if (c.eval_policy.batch < 1) config_error("eval_policy.batch", "must be at least 1");
  }

  if (auto it = j.find("permutation"); it != j.end()) {
    const Json& pj = *it;
    reject_unknown(pj, "permutation.", {"rule", "fixed", "seed"});
    c.permutation.rule = parse_enum("permutation.rule", field<std::string>(pj, "permutation.", "rule", "identity"),
                                    parse_permutation_rule);
    c.permutation.fixed = field<std::vector<std::size_t>>(pj, "permutation.", "fixed", {});
    c.permutation.seed = field<std::uint64_t>(pj, "permutation.", "seed", 0);
  }

  if (auto it = j.find("x0"); it != j.end()) {
    const Json& xj = *it;
    reject_unknown(xj, "x0.", {"kind", "radius", "seed"});
    const auto kind = field<std::string>(xj, "x0.", "kind", "zero");
    if (kind == "zero") {
      c.x0.kind = X0Spec::Kind::zero;
    } else if (kind == "ball") {
      c.x0.kind = X0Spec::Kind::ball;
    } else {
      config_error("x0.kind", "expected 'zero' or 'ball'");
    }
    c.x0.radius = field<double>(xj, "x0.", "radius", 1.0);
    c.x0.seed = field<std::uint64_t>(xj, "x0.", "seed", 0);
    if (!(c.x0.radius >= 0.0)) config_error("x0.radius", "must be nonnegative");
  }

  c.epochs = field<std::size_t>(j, "", "epochs", c.epochs);
  if (c.epochs < 1) config_error("epochs", "must be at least 1");
  c.record_level =
      parse_enum("record_level", field<std::string>(j, "", "record_level", "full"), parse_record_level);
  c.monitor_radius = opt_field<double>(j, "", "monitor_radius");
  c.checks = field<std::vector<std::string>>(j, "", "checks", {});
  for (const auto& name : c.checks) {
    if (name != "all" && std::find(known_checks().begin(), known_checks().end(), name) == known_checks().end()) {
      config_error("checks", "unknown check '" + name + "'");
    }
  }
  c.output_dir = field<std::string>(j, "", "output_dir", c.output_dir);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void apply_override(Json& j, const std::string& dotted_key, const std::string& value) {
  if (dotted_key.empty()) throw ConfigError("empty override key");
  Json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("malformed override key '" + dotted_key + "'");
    if (!node->is_object()) {
      if (!node->is_null()) config_error(dotted_key, "parent is not an object");
      *node = Json::object();
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  Json parsed = Json::parse(value, nullptr, false);
  *node = parsed.is_discarded() ? Json(value) : parsed;
}

void apply_assignment(Json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form key=value");
  apply_override(j, assignment.substr(0, eq), assignment.substr(eq + 1));
}

Vector initial_point(const X0Spec& spec, std::size_t p) {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(p));
  if (spec.kind == X0Spec::Kind::zero || spec.radius == 0.0) return x;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = normal(rng);
  const double norm = x.norm();
  if (norm == 0.0) return x;
  const double r = spec.radius * std::pow(unif(rng), 1.0 / static_cast<double>(p));
  return x * (r / norm);
}

RunConfig build_run_config(const ExperimentConfig& c) {
  RunConfig rc;
  try {
    rc.problem = std::make_shared<const FiniteSumProblem>(make_problem(c.problem.kind, c.problem.n, c.problem.p,
                                                                       c.problem.seed));
  } catch (const InvalidArgument& e) {
    config_error("problem", e.what());
  }
  const auto& prob = *rc.problem;
  const std::size_t n = prob.n();
  const auto& s = c.strategy;
  auto problem_L = [&](const char* key) {
    if (!prob.L()) config_error(key, "the problem is not smooth, so L must be given explicitly");
    return *prob.L();
  };
  try {
    switch (s.rule) {
      case StepRule::constant: {
        if (s.alpha.has_value() == s.alpha_over_L.has_value()) {
          config_error("strategy.alpha", "constant steps need exactly one of alpha, alpha_over_L");
        }
        const double alpha = s.alpha ? *s.alpha : *s.alpha_over_L / problem_L("strategy.alpha_over_L");
        rc.strategy = StepStrategy::constant(alpha, n);
        break;
      }
      case StepRule::decreasing_sqrt:
        rc.strategy = StepStrategy::decreasing_sqrt(n);
        break;
      case StepRule::decreasing_cbrt_with_L:
        rc.strategy = StepStrategy::decreasing_cbrt(s.lipschitz ? *s.lipschitz : problem_L("strategy.lipschitz"), n);
        break;
      case StepRule::adaptive: {
        const double nn = static_cast<double>(n);
        rc.strategy = StepStrategy::adaptive(n, s.delta.value_or(nn * nn * nn), s.beta.value_or(nn * nn));
        break;
      }
    }
  } catch (const InvalidArgument& e) {
    config_error("strategy", e.what());
  }
  rc.eval_policy = c.eval_policy;
  rc.permutation = c.permutation;
  rc.x0 = initial_point(c.x0, prob.p());
  rc.epochs = c.epochs;
  rc.record_level = c.record_level;
  rc.monitor_radius = c.monitor_radius.value_or(std::numeric_limits<double>::infinity());
  try {
    rc.validate();
  } catch (const InvalidArgument& e) {
    const std::string what = e.what();
    config_error(what.find("permutation") != std::string::npos ? "permutation" : "config", what);
  }
  return rc;
}

// ---------------------------------------------------------------------------

RunOutcome cmd_run(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log) {
  const RunConfig rc = build_run_config(config);
  const fs::path dir = out_dir.empty() ? fs::path(config.output_dir) : fs::path(out_dir);
  fs::create_directories(dir);
  const RunTrace trace = run(rc);

  RunOutcome outcome;
  write_text(dir / "config.json", to_json(config).dump(2) + "\n");
  outcome.trace_path = (dir / "trace.txt").string();
  write_trace_file(outcome.trace_path, trace);
  outcome.summary_path = (dir / "summary.csv").string();
  write_with(dir / "summary.csv", [&](std::ostream& out) { write_summary_csv(out, trace); });

  log << "run: " << trace.epochs.size() << " of " << rc.epochs << " epochs, F(x_N) = "
      << format_double(trace.values.back()) << "\n";
  if (trace.radius_exit) log << "run: iterate left the monitored radius at K = " << *trace.radius_exit << "\n";
  if (trace.abort) {
    log << "run: aborted at (K=" << trace.abort->at.epoch << ", i=" << trace.abort->at.inner
        << "): " << trace.abort->reason << "\n";
    outcome.exit_code = 2;
  }
  return outcome;
}

std::string_view to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::skipped: return "skipped";
    case CheckStatus::info: return "info";
  }
  return "skipped";
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names = {"replay", "claim1", "claim2", "descent",     "cor1",
                                                 "cor2",   "cor3",   "cor4",   "cor5",        "summability",
                                                 "gamma",  "ratio",  "criticality"};
  return names;
}

namespace {

CheckResult skipped(const std::string& name, const std::string& why) {
  return {name, CheckStatus::skipped, why, Json::object()};
}

Json margin_json(const MarginReport& m) {
  return {{"checked", m.checked},
          {"min_slack", m.checked ? Json(m.min_slack) : Json(nullptr)},
          {"min_relative", m.checked ? Json(m.min_relative) : Json(nullptr)},
          {"worst_epoch", m.worst.epoch},
          {"worst_inner", m.worst.inner}};
}

std::size_t best_epoch(const RunTrace& trace) {
  std::size_t best = 0;
  for (std::size_t K = 1; K < trace.grad_norm_sq.size(); ++K) {
    if (trace.grad_norm_sq[K] < trace.grad_norm_sq[best]) best = K;
  }
  return best;
}

CheckResult run_check(const RunTrace& trace, const std::string& name, const fs::path& dir) {
  const auto& problem = *trace.config.problem;
  const std::size_t E = trace.epochs.size();
  if (E == 0) return skipped(name, "trace has no completed epoch");

  if (name == "replay") {
    if (!trace.has_inner()) return skipped(name, "needs a full record");
    const auto r = replay(trace);
    CheckResult c{name, r.ok ? CheckStatus::pass : CheckStatus::fail, r.detail, Json::object()};
    if (r.mismatch) c.metrics = {{"epoch", r.mismatch->epoch}, {"inner", r.mismatch->inner}};
    return c;
  }
  if (name == "claim1") {
    if (!trace.has_inner()) return skipped(name, "needs a full record");
    const auto m = check_claim1(trace);
    const bool ok = m.passes(1e-12);
    return {name, ok ? CheckStatus::pass : CheckStatus::fail, "relative slack tolerance 1e-12", margin_json(m)};
  }
  if (name == "claim2" || name == "descent") {
    if (!trace.has_inner()) return skipped(name, "needs a full record");
    if (!problem.smooth()) return skipped(name, "needs a smooth problem");
    if (name == "claim2") {
      if (E < 2) return skipped(name, "needs at least two epochs");
      const auto r = check_claim2_range(trace, 1, E - 1);
      CheckResult c{name, r.stated.passes(1e-9) ? CheckStatus::pass : CheckStatus::fail,
                    "stated right-hand side, slack tolerance 1e-9 (1 + |rhs|)", Json::object()};
      c.metrics["stated"] = margin_json(r.stated);
      c.metrics["corrected"] = margin_json(r.corrected);
      c.metrics["corrected_pass"] = r.corrected.passes(1e-9);
      c.metrics["lex_monotone"] = r.lex_monotone;
      if (!r.lex_monotone) c.detail += "; step sizes are not lexicographically nonincreasing";
      return c;
    }
    const auto m = check_descent_decomposition_range(trace, 0, E - 1);
    return {name, m.passes(1e-9) ? CheckStatus::pass : CheckStatus::fail,
            "slack tolerance 1e-9 (1 + |rhs|)", margin_json(m)};
  }
  if (name.size() == 4 && name.rfind("cor", 0) == 0) {
    const Corollary which = parse_corollary(name);
    try {
      const auto report = certify_run(trace, which);
      write_with(dir / (name + ".csv"), [&](std::ostream& out) { write_bound_csv(out, report); });
      return {name, report.all_pass() ? CheckStatus::pass : CheckStatus::fail, "tolerance 1e-9 relative",
              bound_report_to_json(report)};
    } catch (const PreconditionViolation& e) {
      return skipped(name, std::string("precondition: ") + e.what());
    } catch (const UnsupportedProblem& e) {
      return skipped(name, e.what());
    } catch (const InvalidArgument& e) {
      return skipped(name, e.what());
    }
  }
  if (name == "summability") {
    if (trace.config.strategy.rule != StepRule::adaptive) return skipped(name, "needs the adaptive rule");
    const auto r = check_summability_ada(trace, E - 1);
    return {name, r.relative() >= -1e-9 ? CheckStatus::pass : CheckStatus::fail, "slack tolerance 1e-9",
            {{"N", r.N}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"rhs_lemma", r.rhs_lemma}}};
  }
  if (name == "gamma") {
    const auto g = gamma_trace(trace);
    write_with(dir / "gamma.csv", [&](std::ostream& out) { write_gamma_csv(out, g); });
    const auto inc = g.first_increase(1e-12);
    Json m = {{"gamma_first", g.intervals.front().gamma},
              {"gamma_last", g.intervals.back().gamma},
              {"ratio_last", g.intervals.back().ratio},
              {"first_increase", inc ? Json(*inc) : Json(nullptr)}};
    return {name, g.lambda_ok() ? CheckStatus::pass : CheckStatus::fail, "lambda_i <= alpha_{K,1}/alpha_{K,n}", m};
  }
  if (name == "ratio") {
    const auto r = check_asymptotic_conditions(trace.alpha_first(), trace.alpha_last(), E - 1);
    return {name, CheckStatus::info, "step-size conditions at the last epoch",
            {{"sum_first", r.sum_first}, {"alpha_first", r.alpha_first}, {"ratio", r.ratio},
             {"ratio_ok", r.ratio_ok}, {"vanishing_ok", r.vanishing_ok}}};
  }
  if (name == "criticality") {
    if (!problem.has_generators()) return skipped(name, "problem exposes no generator sets");
    try {
      std::vector<std::pair<std::size_t, CriticalityReport>> rows;
      const std::size_t best = best_epoch(trace);
      rows.emplace_back(best, criticality(problem, trace.points[best]));
      if (best != E) rows.emplace_back(E, criticality(problem, trace.points[E]));
      write_with(dir / "criticality.csv", [&](std::ostream& out) { write_criticality_csv(out, rows); });
      Json m = {{"best_epoch", best}, {"best_measure", rows.front().second.measure},
                {"last_measure", rows.back().second.measure}};
      if (const auto& sol = problem.known_solution()) m["best_distance_to_solution"] = sol->distance(trace.points[best]);
      return {name, CheckStatus::info, "min-norm element of conv(D(x))", m};
    } catch (const UnsupportedProblem& e) {
      return skipped(name, e.what());
    }
  }
  return skipped(name, "unknown check");
}

}  // namespace

std::vector<CheckResult> verify_trace(const RunTrace& trace, const std::vector<std::string>& checks,
                                      const std::string& out_dir) {
  std::vector<std::string> names;
  for (const auto& c : checks) {
    if (c == "all") {
      names.insert(names.end(), known_checks().begin(), known_checks().end());
    } else {
      names.push_back(c);
    }
  }
  if (names.empty()) names = known_checks();
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  std::vector<CheckResult> results;
  std::set<std::string> seen;
  for (const auto& name : names) {
    if (!seen.insert(name).second) continue;
    results.push_back(run_check(trace, name, dir));
  }
  return results;
}

int cmd_verify(const std::string& trace_path, const std::vector<std::string>& checks, const std::string& out_dir,
               std::ostream& log) {
  const RunTrace trace = read_trace_file(trace_path);
  const auto results = verify_trace(trace, checks, out_dir);
  Json report = Json::array();
  bool failed = false;
  for (const auto& r : results) {
    report.push_back({{"check", r.name}, {"status", std::string(to_string(r.status))}, {"detail", r.detail},
                      {"metrics", r.metrics}});
    failed = failed || r.status == CheckStatus::fail;
    log << std::left << std::setw(12) << r.name << ' ' << std::setw(7) << to_string(r.status) << ' ' << r.detail
        << '\n';
  }
  write_text(fs::path(out_dir) / "verify.json", report.dump(2) + "\n");
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------------------

SweepAxis parse_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("axis '" + text + "' is not of the form key=v1,v2");
  SweepAxis axis;
  axis.key = text.substr(0, eq);
  std::string rest = text.substr(eq + 1);
  std::size_t start = 0;
  while (true) {
    const auto comma = rest.find(',', start);
    const std::string v = rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (v.empty()) throw ConfigError("axis '" + axis.key + "' has an empty value");
    axis.values.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return axis;
}

std::vector<std::size_t> log_grid(std::size_t lo, std::size_t hi, std::size_t per_decade) {
  require(lo >= 1 && hi >= lo && per_decade >= 1, "log grid needs 1 <= lo <= hi and per_decade >= 1");
  std::vector<std::size_t> out{lo};
  const double a = std::log10(static_cast<double>(lo));
  const double b = std::log10(static_cast<double>(hi));
  const auto steps = static_cast<std::size_t>(std::ceil((b - a) * static_cast<double>(per_decade) - 1e-9));
  for (std::size_t k = 1; k <= steps; ++k) {
    const double e = std::min(b, a + static_cast<double>(k) / static_cast<double>(per_decade));
    const auto v = static_cast<std::size_t>(std::llround(std::pow(10.0, e)));
    if (v > out.back() && v <= hi) out.push_back(v);
  }
  if (out.back() != hi) out.push_back(hi);
  return out;
}

namespace {

SweepCell run_cell(const Json& base, const std::vector<SweepAxis>& axes, const std::vector<std::size_t>& pick,
                   const SweepOptions& options, std::size_t index) {
  SweepCell cell;
  cell.index = index;
  Json j = base;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    cell.values.push_back(axes[a].values[pick[a]]);
    apply_override(j, axes[a].key, axes[a].values[pick[a]]);
  }
  try {
    const auto config = config_from_json(j);
    const auto rc = build_run_config(config);
    const auto trace = run(rc);
    cell.status = trace.abort ? "aborted" : "ok";
    cell.epochs_run = trace.epochs.size();
    cell.final_value = trace.values.back();
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> running(trace.grad_norm_sq.size());
    for (std::size_t K = 0; K < running.size(); ++K) running[K] = best = std::min(best, trace.grad_norm_sq[K]);
    cell.min_grad_sq = best;
    const std::size_t N_max = running.size() - 1;
    if (N_max >= 1) {
      for (auto N : log_grid(1, N_max, options.points_per_decade)) cell.min_grad_curve.emplace_back(N, running[N]);
    }
    std::vector<double> xs, ys;
    for (const auto& [N, v] : cell.min_grad_curve) {
      if (N >= options.slope_min && N <= options.slope_max && v > 0.0) {
        xs.push_back(static_cast<double>(N));
        ys.push_back(v);
      }
    }
    if (xs.size() >= 2) cell.slope = loglog_slope(xs, ys);
    const auto& problem = *rc.problem;
    if (problem.smooth() && problem.f_star_lower()) {
      const auto cors = matching_corollaries(rc.strategy, *problem.L());
      if (!cors.empty()) {
        cell.certificate = std::string(to_string(cors.front()));
        cell.certificate_pass = certify_run(trace, cors.front()).all_pass();
      }
    }
  } catch (const std::exception& e) {
    cell.status = std::string("error: ") + e.what();
  }
  return cell;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::vector<SweepCell> run_sweep(const Json& base, const std::vector<SweepAxis>& axes, const SweepOptions& options) {
  std::vector<std::vector<std::size_t>> grid{{}};
  for (const auto& axis : axes) {
    if (axis.values.empty()) throw ConfigError("axis '" + axis.key + "' has no values");
    std::vector<std::vector<std::size_t>> next;
    for (const auto& g : grid) {
      for (std::size_t v = 0; v < axis.values.size(); ++v) {
        auto h = g;
        h.push_back(v);
        next.push_back(std::move(h));
      }
    }
    grid = std::move(next);
  }

  std::vector<SweepCell> cells(grid.size());
  std::size_t threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < grid.size(); k = next++) cells[k] = run_cell(base, axes, grid[k], options, k);
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return cells;
}

int cmd_sweep(const Json& base, const std::vector<SweepAxis>& axes, const SweepOptions& options,
              const std::string& out_dir, std::ostream& log) {
  if (axes.empty()) throw ConfigError("sweep needs at least one axis");
  const auto cells = run_sweep(base, axes, options);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_with(dir / "sweep.csv", [&](std::ostream& out) {
    out << "cell";
    for (const auto& a : axes) out << ',' << csv_field(a.key);
    out << ",status,epochs,final_F,min_grad_sq,certificate,certificate_pass,slope\n";
    for (const auto& c : cells) {
      out << c.index;
      for (const auto& v : c.values) out << ',' << csv_field(v);
      out << ',' << csv_field(c.status) << ',' << c.epochs_run << ',' << format_double(c.final_value) << ','
          << format_double(c.min_grad_sq) << ',' << c.certificate << ','
          << (c.certificate_pass ? (*c.certificate_pass ? "1" : "0") : "") << ','
          << (c.slope ? format_double(*c.slope) : "") << '\n';
    }
  });
  write_with(dir / "sweep_curves.csv", [&](std::ostream& out) {
    out << "cell,N,min_grad_sq\n";
    for (const auto& c : cells) {
      for (const auto& [N, v] : c.min_grad_curve) out << c.index << ',' << N << ',' << format_double(v) << '\n';
    }
  });
  int failures = 0;
  for (const auto& c : cells) {
    log << "cell " << c.index << ':';
    for (std::size_t a = 0; a < axes.size(); ++a) log << ' ' << axes[a].key << '=' << c.values[a];
    log << "  " << c.status;
    if (c.slope) log << "  slope " << format_double(*c.slope);
    log << '\n';
    if (c.status.rfind("error", 0) == 0) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

int cmd_report(const std::string& trace_path, const std::string& out_dir, std::ostream& log) {
  const RunTrace trace = read_trace_file(trace_path);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_with(dir / "summary.csv", [&](std::ostream& out) { write_summary_csv(out, trace); });
  const auto& problem = *trace.config.problem;
  const auto& s = trace.config.strategy;
  log << "problem    " << to_string(problem.kind()) << " n=" << problem.n() << " p=" << problem.p()
      << " M=" << format_double(problem.M());
  if (problem.L()) log << " L=" << format_double(*problem.L());
  log << "\nstrategy   " << to_string(s.rule) << "\nepochs     " << trace.epochs.size() << " of "
      << trace.config.epochs << (trace.abort ? " (aborted)" : "") << '\n';
  log << "F(x_0)     " << format_double(trace.values.front()) << "\nF(x_N)     " << format_double(trace.values.back())
      << '\n';
  double best = std::numeric_limits<double>::infinity();
  for (double g : trace.grad_norm_sq) best = std::min(best, g);
  log << "min |d|^2  " << format_double(best) << '\n';
  if (!trace.epochs.empty()) {
    const auto g = gamma_trace(trace);
    write_with(dir / "gamma.csv", [&](std::ostream& out) { write_gamma_csv(out, g); });
    log << "gamma      " << format_double(g.intervals.front().gamma) << " -> "
        << format_double(g.intervals.back().gamma) << '\n';
    if (problem.has_generators()) {
      try {
        std::vector<std::pair<std::size_t, CriticalityReport>> rows;
        for (auto K : log_grid(1, trace.epochs.size(), 4)) rows.emplace_back(K, criticality(problem, trace.points[K]));
        write_with(dir / "criticality.csv", [&](std::ostream& out) { write_criticality_csv(out, rows); });
        log << "criticality at K=" << rows.back().first << ": " << format_double(rows.back().second.measure) << '\n';
      } catch (const UnsupportedProblem& e) {
        log << "criticality skipped: " << e.what() << '\n';
      }
    }
  }
  return 0;
}

}  // namespace iwr::cli
