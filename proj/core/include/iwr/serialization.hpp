#pragma once

// JSON forms of problems, strategies and policies, and the trace file format:
// one JSON header line followed by CSV blocks (#points, #epochs, #inner).
// Doubles are written with 17 significant digits, so reading a trace back
// reproduces every stored value bit for bit.

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "iwr/analysis.hpp"
#include "iwr/engine.hpp"

namespace iwr {

using Json = nlohmann::json;

/// 17 significant digits; parses back to the same double.
std::string format_double(double value);
/// Strict parse of a full string; accepts inf/nan spellings from format_double.
double parse_double(const std::string& text);

Json problem_to_json(const FiniteSumProblem& problem);
std::shared_ptr<const FiniteSumProblem> problem_from_json(const Json& j);

Json strategy_to_json(const StepStrategy& s);
StepStrategy strategy_from_json(const Json& j);

Json eval_policy_to_json(const EvalPointPolicy& p);
EvalPointPolicy eval_policy_from_json(const Json& j);

Json permutation_to_json(const PermutationPolicy& p);
PermutationPolicy permutation_from_json(const Json& j);

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const Json& j);

void write_trace(std::ostream& out, const RunTrace& trace);
RunTrace read_trace(std::istream& in);
void write_trace_file(const std::string& path, const RunTrace& trace);
RunTrace read_trace_file(const std::string& path);

/// Columns K, F, grad_norm_sq, min_so_far, alpha_first, alpha_last, v; one row per epoch.
void write_summary_csv(std::ostream& out, const RunTrace& trace);

/// Columns N, bound, observed, slack, pass.
void write_bound_csv(std::ostream& out, const BoundReport& report);
Json bound_report_to_json(const BoundReport& report);

/// Columns K, tau_start, tau_end, gamma, ratio, max_lambda, lambda_ok.
void write_gamma_csv(std::ostream& out, const GammaTrace& gamma);

/// Columns K, measure, generator_count, x...
void write_criticality_csv(std::ostream& out, const std::vector<std::pair<std::size_t, CriticalityReport>>& rows);

}  // namespace iwr
