#include <benchmark/benchmark.h>

#include <vector>

#include "codesign/chain.hpp"
#include "codesign/cost.hpp"
#include "codesign/optimize.hpp"
#include "codesign/simulate.hpp"

using namespace codesign;

namespace {

// Demand 0.8..1.2 on a 0.1 grid; the tank size sets the state count.
QuantizedDemandModel spread_demand(std::size_t T) {
  QuantizedDemandModel d{0.1, T, std::vector<std::vector<double>>(T, std::vector<double>(13, 0.0))};
  for (auto& row : d.probs)
    for (int t = 8; t <= 12; ++t) row[static_cast<std::size_t>(t)] = 0.2;
  return d;
}

GeometryRule spread_rule() {
  GeometryRule r;
  r.delta_x = 0.1;
  r.zeta = 20;
  return r;
}

struct Instance {
  explicit Instance(double V, std::size_t T = 1)
      : demand(spread_demand(T)),
        price(PriceModel::constant(T, 20.0, 10.0)),
        spec(spread_rule().build(V, demand)),
        policy(ThresholdPolicy::constant(spec, 20.0)) {}
  QuantizedDemandModel demand;
  PriceModel price;
  ChainSpec spec;
  ThresholdPolicy policy;
};

const CostParams kParams{1.0, 0.0, CapitalCost::per_unit(10000.0)};

}  // namespace

static void BM_BuildChain(benchmark::State& state) {
  const Instance inst(static_cast<double>(state.range(0)) / 10.0, static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(build_chain(inst.demand, inst.price, inst.spec, inst.policy));
  state.counters["states"] = static_cast<double>(inst.spec.num_states());
}
BENCHMARK(BM_BuildChain)->Args({96, 1})->Args({300, 1})->Args({96, 24})->Unit(benchmark::kMicrosecond);

static void BM_Stationary(benchmark::State& state) {
  const Instance inst(static_cast<double>(state.range(0)) / 10.0);
  const auto P = build_chain(inst.demand, inst.price, inst.spec, inst.policy);
  const auto method = state.range(1) ? SolveMethod::sparse : SolveMethod::dense;
  for (auto _ : state) benchmark::DoNotOptimize(stationary(P, method));
  state.counters["states"] = static_cast<double>(P.size());
  state.SetLabel(state.range(1) ? "sparse" : "dense");
}
BENCHMARK(BM_Stationary)
    ->ArgsProduct({{50, 96, 200, 300}, {0, 1}})
    ->Unit(benchmark::kMicrosecond);

static void BM_StationarySparseLarge(benchmark::State& state) {
  const Instance inst(9.6, static_cast<std::size_t>(state.range(0)));
  const auto P = build_chain(inst.demand, inst.price, inst.spec, inst.policy);
  for (auto _ : state) benchmark::DoNotOptimize(stationary(P, SolveMethod::sparse));
  state.counters["states"] = static_cast<double>(P.size());
}
BENCHMARK(BM_StationarySparseLarge)->Arg(24)->Arg(96)->Unit(benchmark::kMillisecond);

static void BM_PolicyObjective(benchmark::State& state) {
  const Instance inst(static_cast<double>(state.range(0)) / 10.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        policy_objective(inst.policy, inst.demand, inst.price, inst.spec, kParams, StationaryMethod::numeric));
}
BENCHMARK(BM_PolicyObjective)->Arg(96)->Arg(300)->Unit(benchmark::kMicrosecond);

static void BM_ClosedFormObjective(benchmark::State& state) {
  const QuantizedDemandModel demand{1.0, 1, {{0.0, 1.0}}};
  const auto price = PriceModel::constant(1, 20.0, 10.0);
  GeometryRule rule;
  rule.zeta = 2;
  const auto spec = rule.build(8.0, demand);
  const auto policy = ThresholdPolicy::constant(spec, 20.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        policy_objective(policy, demand, price, spec, kParams, StationaryMethod::closed_form_example1));
}
BENCHMARK(BM_ClosedFormObjective);

static void BM_Simulate(benchmark::State& state) {
  const Instance inst(9.6);
  const auto N = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(simulate(inst.policy, inst.demand, inst.price, inst.spec, kParams, N, 0, 1));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_Simulate)->Arg(175200)->Unit(benchmark::kMillisecond);

static void BM_OptimizeTank(benchmark::State& state) {
  const Instance inst(9.6);
  OptimizeOptions opts;
  opts.spsa.iterations = static_cast<std::size_t>(state.range(0));
  opts.spsa.restarts = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(optimize_policy_for_tank(9.6, inst.demand, inst.price, spread_rule(), kParams, opts));
}
BENCHMARK(BM_OptimizeTank)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
