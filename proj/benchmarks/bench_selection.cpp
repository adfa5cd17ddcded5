// Operator evaluation and integrator step costs against grid size.

#include <benchmark/benchmark.h>

#include <cmath>

#include "selection/dsl.hpp"
#include "selection/engine.hpp"
#include "selection/operators.hpp"
#include "selection/profiles.hpp"

using namespace selection;

namespace {

GridMeasure bump(const Grid& g) {
  return GridMeasure::from_density(g, [&](double x) {
    const double z = (x - 0.5 * (g.lo + g.hi)) / (0.2 * (g.hi - g.lo));
    return std::exp(-z * z) + 0.1;
  });
}

void BM_KernelEval(benchmark::State& state) {
  const double h = 5.0;
  const GridMeasure mu = bump(Grid(-h, h, static_cast<std::size_t>(state.range(0))));
  const OperatorPtr op = make_truncated_kernel(h);
  for (auto _ : state) benchmark::DoNotOptimize(op->values(mu));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KernelEval)->RangeMultiplier(2)->Range(100, 1600)->Complexity();

void BM_PreyPredatorEval(benchmark::State& state) {
  const GridMeasure mu = bump(Grid(0.0, 1.0, static_cast<std::size_t>(state.range(0))));
  const OperatorPtr op = make_prey_predator(sqrt_decreasing_profile(1.0, 1.5), 0.8, 0.7, 0.51);
  for (auto _ : state) benchmark::DoNotOptimize(op->values(mu));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PreyPredatorEval)->RangeMultiplier(2)->Range(100, 1600)->Complexity();

void BM_DslPreyPredatorEval(benchmark::State& state) {
  const GridMeasure mu = bump(Grid(0.0, 1.0, static_cast<std::size_t>(state.range(0))));
  dsl::Environment env = dsl::standard_environment();
  env.add_function("a", sqrt_decreasing_profile(1.0, 1.5).eval);
  const OperatorPtr op =
      dsl::make_dsl_operator("a(x) + 0.8*window(mu, x - 0.51, x) - 0.7*window(mu, x, x + 0.51)", env, 0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(op->values(mu));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DslPreyPredatorEval)->RangeMultiplier(2)->Range(100, 1600)->Complexity();

void BM_CannibalismStep(benchmark::State& state) {
  const GridMeasure mu = bump(Grid(0.0, 1.0, static_cast<std::size_t>(state.range(0))));
  const OperatorPtr op = make_cannibalism(3.0, 0.8, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(step_exponential(mu, op->evaluate(mu), 1e-3));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CannibalismStep)->RangeMultiplier(2)->Range(100, 1600)->Complexity();

}  // namespace

BENCHMARK_MAIN();
