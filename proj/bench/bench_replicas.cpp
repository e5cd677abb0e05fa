// Serial reference vs OpenMP replica fan-out, plus the single-step cost that
// dominates every Monte Carlo experiment.

#include "saddlenet/analysis.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace saddlenet;

namespace {

RunConfig logistic_template() {
  RunConfig c;
  c.mu = 0.01;
  c.network = build_combination_matrix(Topology::complete(3), AveragingRule{});
  c.problems.assign(3, std::make_shared<LogisticNNProblem>(0.1));
  const Vector u = Vector::Constant(2, 1.0 / std::sqrt(2.0));
  c.noise = NoiseModel({NaturalSampling{}, DirectionalNoise{u, std::sqrt(2.0)}});
  c.initial = Matrix::Zero(3, 2);
  return c;
}

Constants constants() {
  return Constants{.mu = 0.01, .delta = 1.0, .sigma2 = 2.0 / 3.0, .pi_confidence = 0.5,
                   .tau = 0.1, .sigma_u2 = 2.0 / 3.0, .sigma_l2 = 2.0 / 3.0};
}

void BM_Advance(benchmark::State& state) {
  const RunConfig c = logistic_template();
  Simulation sim(c);
  for (auto _ : state) {
    sim.advance();
    benchmark::DoNotOptimize(sim.state().iterates.data());
  }
}
BENCHMARK(BM_Advance);

void BM_StepWithPerturbation(benchmark::State& state) {
  const RunConfig c = logistic_template();
  Simulation sim(c);
  for (auto _ : state) benchmark::DoNotOptimize(sim.step());
}
BENCHMARK(BM_StepWithPerturbation);

void BM_AggregateLoss(benchmark::State& state) {
  const RunConfig c = logistic_template();
  const AggregateCost cost(c.problems, perron_vector(c.network));
  const Vector w = Vector::Constant(2, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(cost.loss(w));
}
BENCHMARK(BM_AggregateLoss);

void escape_kernel(benchmark::State& state, Execution exec) {
  const RunConfig c = logistic_template();
  const auto seeds = derive_seeds(1, static_cast<std::size_t>(state.range(0)));
  EscapeOptions opt;
  opt.horizon = 5000;
  for (auto _ : state) {
    auto stats = empirical_escape_time(c, constants(), ExitCriterion::ball(0.1), seeds, opt, exec);
    benchmark::DoNotOptimize(stats.median);
  }
}

void BM_EscapeSerial(benchmark::State& state) { escape_kernel(state, Execution::serial); }
void BM_EscapeParallel(benchmark::State& state) { escape_kernel(state, Execution::parallel); }
BENCHMARK(BM_EscapeSerial)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EscapeParallel)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
