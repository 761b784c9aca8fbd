#pragma once

// The epoch recursion: z_{K,0} = x_K, z_{K,i} = z_{K,i-1} - alpha_{K,i} d_{pi(i)}(zhat_{K,i-1}),
// x_{K+1} = z_{K,n}, with full trace recording and bitwise replay.

#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "iwr/oracles.hpp"
#include "iwr/schedules.hpp"
#include "iwr/steps.hpp"

namespace iwr {

enum class RecordLevel { full, epoch_only };

std::string_view to_string(RecordLevel level);
RecordLevel parse_record_level(std::string_view name);

struct RunConfig {
  std::shared_ptr<const FiniteSumProblem> problem;
  StepStrategy strategy;
  EvalPointPolicy eval_policy;
  PermutationPolicy permutation;
  Vector x0;
  std::size_t epochs = 1;
  RecordLevel record_level = RecordLevel::full;
  /// Iterates with ||x_K|| above this radius are flagged, not stopped.
  double monitor_radius = std::numeric_limits<double>::infinity();

  void validate() const;
};

struct InnerRecord {
  std::size_t component = 0;  // pi_K(i), 0-based
  Weights weights;            // over z_{K,0..i-1}
  Vector eval_point;          // zhat_{K,i-1}
  Vector direction;           // d_{pi(i)}(zhat_{K,i-1})
  double dnorm2 = 0.0;
  double alpha = 0.0;
  Vector point;  // z_{K,i}
  double v = 0.0;  // v_{K,i} (adaptive rule only, 0 otherwise)
};

struct EpochRecord {
  std::size_t K = 0;
  std::vector<std::size_t> order;
  std::vector<InnerRecord> inner;  // empty at RecordLevel::epoch_only
  Vector x_start;
  Vector x_end;
  double alpha_first = 0.0;
  double alpha_last = 0.0;
  double alpha_sum = 0.0;
  double alpha_sq_dnorm_sum = 0.0;    // sum_i alpha_{K,i}^2 ||d||^2
  double alpha_cube_dnorm_sum = 0.0;  // sum_i alpha_{K,i}^3 ||d||^2
  double dnorm2_sum = 0.0;
  double v_end = 0.0;
};

struct AbortInfo {
  StepIndex at;
  std::string reason;
};

struct RunTrace {
  RunConfig config;
  std::vector<Vector> points;         // x_0 .. x_{N}
  std::vector<double> values;         // F(x_K)
  std::vector<double> grad_norm_sq;   // ||(1/n) sum_i d_i(x_K)||^2
  std::vector<EpochRecord> epochs;
  std::optional<AbortInfo> abort;
  std::optional<std::size_t> radius_exit;  // first K with ||x_K|| > monitor_radius
  double max_point_norm = 0.0;

  bool complete() const { return !abort && epochs.size() == config.epochs; }
  bool has_inner() const { return config.record_level == RecordLevel::full; }
  /// history[K][i-1] = alpha_{K,i}; needs a full record.
  StepHistory step_history() const;
  std::vector<double> alpha_first() const;
  std::vector<double> alpha_last() const;
};

/// Thrown when an oracle or update produces a non-finite number.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(StepIndex at, const std::string& what) : std::runtime_error(what), at_(at) {}
  StepIndex at() const { return at_; }

 private:
  StepIndex at_;
};

struct EpochResult {
  Vector x_next;
  EpochRecord record;
};

/// One epoch from x_K. `state` must be consistent with epochs 0..K-1.
EpochResult run_epoch(const RunConfig& config, StepState& state, const Vector& x, std::size_t K);

/// Runs config.epochs epochs. Non-finite values abort the run; the partial
/// trace is returned with `abort` set.
RunTrace run(const RunConfig& config);

struct ReplayReport {
  bool ok = true;
  std::optional<StepIndex> mismatch;
  std::string detail;
};

/// Recomputes every evaluation point, direction, step and iterate from the
/// trace's config and compares bitwise. Needs a full record.
ReplayReport replay(const RunTrace& trace);

struct SummaryRow {
  std::size_t K = 0;
  double value = 0.0;
  double grad_norm_sq = 0.0;
  double min_so_far = 0.0;
  double alpha_first = 0.0;
  double alpha_last = 0.0;
  double v = 0.0;  // accumulator after epoch K
};

std::vector<SummaryRow> summary(const RunTrace& trace);

/// Bitwise equality of two vectors.
bool bitwise_equal(const Vector& a, const Vector& b);

}  // namespace iwr
