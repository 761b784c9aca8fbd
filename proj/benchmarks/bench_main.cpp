#include <memory>
#include <random>

#include <benchmark/benchmark.h>

#include <iwr/analysis.hpp>

namespace iwr {
namespace {

std::shared_ptr<const FiniteSumProblem> logistic(std::size_t n, std::size_t p) {
  return std::make_shared<const FiniteSumProblem>(make_problem(ProblemKind::logistic, n, p, 1));
}

RunConfig config_for(std::shared_ptr<const FiniteSumProblem> prob, EvalPointPolicy policy, std::size_t epochs) {
  RunConfig c;
  c.strategy = StepStrategy::adaptive_default(prob->n());
  c.x0 = Vector::Zero(static_cast<Eigen::Index>(prob->p()));
  c.problem = std::move(prob);
  c.eval_policy = policy;
  c.epochs = epochs;
  return c;
}

// One epoch per iteration; the argument is n.
void BM_Epoch(benchmark::State& state, EvalPointPolicy policy, RecordLevel level) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto config = config_for(logistic(n, 10), policy, 1);
  config.record_level = level;
  for (auto _ : state) benchmark::DoNotOptimize(run(config));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK_CAPTURE(BM_Epoch, incremental_full, EvalPointPolicy::incremental(), RecordLevel::full)
    ->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK_CAPTURE(BM_Epoch, incremental_lean, EvalPointPolicy::incremental(), RecordLevel::epoch_only)
    ->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK_CAPTURE(BM_Epoch, convex_mix, EvalPointPolicy::convex_mix(1), RecordLevel::full)
    ->RangeMultiplier(4)->Range(16, 1024);

// Argument: number of generators, in dimension 8.
void BM_MinNormPoint(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::vector<Vector> gens(static_cast<std::size_t>(state.range(0)), Vector(8));
  for (auto& g : gens) {
    for (Eigen::Index k = 0; k < 8; ++k) g(k) = 0.5 + normal(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(min_norm_point(gens));
}
BENCHMARK(BM_MinNormPoint)->RangeMultiplier(4)->Range(2, 512);

void BM_Claim1(benchmark::State& state) {
  const auto trace = run(config_for(logistic(64, 10), EvalPointPolicy::incremental(), 50));
  for (auto _ : state) benchmark::DoNotOptimize(check_claim1(trace));
}
BENCHMARK(BM_Claim1);

void BM_Claim2Range(benchmark::State& state) {
  const auto trace = run(config_for(logistic(64, 10), EvalPointPolicy::incremental(), 50));
  for (auto _ : state) benchmark::DoNotOptimize(check_claim2_range(trace, 1, 49));
}
BENCHMARK(BM_Claim2Range);

void BM_CertifyRun(benchmark::State& state) {
  auto config = config_for(logistic(32, 5), EvalPointPolicy::incremental(), 2000);
  config.record_level = RecordLevel::epoch_only;
  const auto trace = run(config);
  for (auto _ : state) benchmark::DoNotOptimize(certify_run(trace, Corollary::adaptive));
}
BENCHMARK(BM_CertifyRun);

}  // namespace
}  // namespace iwr

BENCHMARK_MAIN();
