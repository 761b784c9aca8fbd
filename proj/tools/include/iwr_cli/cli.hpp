#pragma once

// Experiment configuration and the run / verify / sweep / report commands.

#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <iwr/serialization.hpp>

namespace iwr::cli {

/// Malformed configuration; the message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemSpec {
  ProblemKind kind = ProblemKind::logistic;
  std::size_t n = 32;
  std::size_t p = 5;
  std::uint64_t seed = 1;
};

/// Unresolved step strategy; constants that depend on the problem are filled
/// in by build_run_config. `alpha_over_L` sets alpha = c / L.
struct StrategySpec {
  StepRule rule = StepRule::constant;
  std::optional<double> alpha;
  std::optional<double> alpha_over_L;
  std::optional<double> lipschitz;  // defaults to the problem's L
  std::optional<double> delta;      // defaults to n^3
  std::optional<double> beta;       // defaults to n^2
};

struct X0Spec {
  enum class Kind { zero, ball } kind = Kind::zero;
  double radius = 1.0;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  ProblemSpec problem;
  StrategySpec strategy;
  EvalPointPolicy eval_policy;
  PermutationPolicy permutation;
  X0Spec x0;
  std::size_t epochs = 100;
  RecordLevel record_level = RecordLevel::full;
  std::optional<double> monitor_radius;
  std::vector<std::string> checks;
  std::string output_dir = "out";
};

Json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_config(const std::string& path);

/// Sets a dotted key ("strategy.alpha") to `value`, parsed as JSON when it is
/// valid JSON and kept as a string otherwise.
void apply_override(Json& j, const std::string& dotted_key, const std::string& value);
/// "key=value" form of apply_override.
void apply_assignment(Json& j, const std::string& assignment);

/// Resolves problem-dependent constants and builds the engine config.
RunConfig build_run_config(const ExperimentConfig& config);

/// Uniform point in the ball of the given radius, deterministic in the seed.
Vector initial_point(const X0Spec& spec, std::size_t p);

// ---------------------------------------------------------------------------

struct RunOutcome {
  int exit_code = 0;
  std::string trace_path;
  std::string summary_path;
};

/// Executes the run and writes config.json, trace.txt and summary.csv into
/// `out_dir` (config.output_dir when empty). Exit code 0 on completion, 2 on
/// a non-finite abort.
RunOutcome cmd_run(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log);

enum class CheckStatus { pass, fail, skipped, info };
std::string_view to_string(CheckStatus status);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::skipped;
  std::string detail;
  Json metrics = Json::object();
};

/// Every check name cmd_verify understands.
const std::vector<std::string>& known_checks();

/// Runs the named checks ("all" expands to every known check) on a trace.
/// Checks that do not apply are skipped with a reason.
std::vector<CheckResult> verify_trace(const RunTrace& trace, const std::vector<std::string>& checks,
                                      const std::string& out_dir);

/// Writes verify.json into `out_dir`; exit 0 iff no check failed.
int cmd_verify(const std::string& trace_path, const std::vector<std::string>& checks, const std::string& out_dir,
               std::ostream& log);

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

/// "key=v1,v2,..." form.
SweepAxis parse_axis(const std::string& text);

struct SweepOptions {
  std::size_t threads = 0;  // 0: hardware concurrency
  std::size_t slope_min = 100;
  std::size_t slope_max = 10000;
  std::size_t points_per_decade = 8;
};

struct SweepCell {
  std::size_t index = 0;
  std::vector<std::string> values;  // one per axis
  std::string status;               // "ok", "aborted" or "error: ..."
  std::size_t epochs_run = 0;
  double final_value = 0.0;
  double min_grad_sq = 0.0;
  std::string certificate;          // corollary used, empty if none applies
  std::optional<bool> certificate_pass;
  std::optional<double> slope;
  std::vector<std::pair<std::size_t, double>> min_grad_curve;  // (N, min_{K<=N} ||grad F(x_K)||^2)
};

/// One run per grid point (cartesian product of the axes), run concurrently.
std::vector<SweepCell> run_sweep(const Json& base, const std::vector<SweepAxis>& axes, const SweepOptions& options);

/// Writes sweep.csv (one row per cell) and sweep_curves.csv (cell, N, min_grad_sq).
int cmd_sweep(const Json& base, const std::vector<SweepAxis>& axes, const SweepOptions& options,
              const std::string& out_dir, std::ostream& log);

/// Writes summary.csv, gamma.csv and, when the problem exposes generators,
/// criticality.csv at logarithmically spaced epochs; prints a short summary.
int cmd_report(const std::string& trace_path, const std::string& out_dir, std::ostream& log);

/// Integers in [lo, hi] spaced `per_decade` per decade on a log scale,
/// deduplicated, always including lo and hi.
std::vector<std::size_t> log_grid(std::size_t lo, std::size_t hi, std::size_t per_decade);

}  // namespace iwr::cli
