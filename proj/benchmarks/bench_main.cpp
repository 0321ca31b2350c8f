#include <capi/core_set.hpp>
#include <capi/exact_oracle.hpp>
#include <capi/measure.hpp>
#include <capi/mdp_io.hpp>
#include <capi/planner.hpp>
#include <capi/random_mdp.hpp>
#include <capi/recursive_policy.hpp>
#include <capi/rng.hpp>

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

using namespace capi;

namespace {

std::vector<Eigen::VectorXd> random_features(std::size_t count, Eigen::Index dim, std::uint64_t seed) {
  StreamRng rng(seed, 0);
  std::vector<Eigen::VectorXd> out(count, Eigen::VectorXd(dim));
  for (auto& phi : out) {
    for (Eigen::Index i = 0; i < dim; ++i) phi[i] = 2.0 * rng.uniform() - 1.0;
    phi.normalize();
  }
  return out;
}

MdpInstance five_state() { return load_instance(std::string(CAPI_DATA_DIR) + "/five_state.json"); }

void BM_CoreSetAppend(benchmark::State& state) {
  const auto dim = static_cast<Eigen::Index>(state.range(0));
  const auto feats = random_features(256, dim, 1);
  for (auto _ : state) {
    CoreSet core(static_cast<std::size_t>(dim), 0.01);
    for (std::size_t i = 0; i < feats.size(); ++i) core.append(i, 0, feats[i]);
    benchmark::DoNotOptimize(core.size());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(feats.size()));
}
BENCHMARK(BM_CoreSetAppend)->Arg(8)->Arg(32)->Arg(128);

void BM_CoreSetLse(benchmark::State& state) {
  const auto dim = static_cast<Eigen::Index>(state.range(0));
  const auto feats = random_features(64, dim, 2);
  CoreSet core(static_cast<std::size_t>(dim), 0.01);
  std::vector<double> qbar;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    core.append(i, 0, feats[i]);
    qbar.push_back(static_cast<double>(i % 7));
  }
  const auto probe = random_features(1, dim, 3).front();
  for (auto _ : state) benchmark::DoNotOptimize(core.lse(qbar, probe));
}
BENCHMARK(BM_CoreSetLse)->Arg(8)->Arg(32)->Arg(128);

void BM_ExactOptimal(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const TabularMdp mdp = random_mdp(n, 4, 0.9, 5);
  for (auto _ : state) benchmark::DoNotOptimize(exact_optimal(mdp).v_star);
}
BENCHMARK(BM_ExactOptimal)->Arg(8)->Arg(64)->Arg(256);

void BM_Measure(benchmark::State& state) {
  const MdpInstance inst = five_state();
  Simulator sim(inst.mdp, 1, AccessModel::kRandom);
  const PolicyFn policy = [](StateId s) { return static_cast<ActionId>(s % 2); };
  const StatePredicate all = [](StateId) { return true; };
  MeasureOptions options;
  options.n_override = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(measure(sim, 0, 0, policy, all, 0.5, 0.05, options));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Measure)->Arg(100)->Arg(1000);

void BM_EvaluateRecursive(benchmark::State& state) {
  const MdpInstance inst = five_state();
  Simulator sim(inst.mdp, 1);
  PlannerConfig config;
  config.n_override = 200;
  const PlanResult result = plan(sim, *inst.features, inst.features->param_bound(), config);
  const ReplayEvaluator eval(result.policy);
  StateId s = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval.evaluate(result.policy.root(), s, *inst.features));
    s = (s + 1) % inst.mdp->n_states();
  }
  state.counters["records"] = static_cast<double>(result.policy.records().size());
}
BENCHMARK(BM_EvaluateRecursive);

void BM_Plan(benchmark::State& state) {
  const MdpInstance inst = five_state();
  PlannerConfig config;
  config.n_override = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    Simulator sim(inst.mdp, seed++);
    benchmark::DoNotOptimize(plan(sim, *inst.features, inst.features->param_bound(), config).stats);
  }
}
BENCHMARK(BM_Plan)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
