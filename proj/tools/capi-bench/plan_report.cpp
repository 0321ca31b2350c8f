#include "plan_report.hpp"

#include <capi/errors.hpp>
#include <capi/exact_oracle.hpp>
#include <capi/recursive_policy.hpp>
#include <capi/simulator.hpp>

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>

namespace capi_bench {

using nlohmann::json;

double instance_epsilon(const capi::MdpInstance& instance) {
  const auto it = instance.meta.find("epsilon");
  return it != instance.meta.end() && it->is_number() ? it->get<double>() : 0.0;
}

std::size_t thread_cap(std::size_t wanted) {
  const char* raw = std::getenv("CAPI_PLANNER_THREADS");
  if (raw == nullptr) return std::max<std::size_t>(wanted, 1);
  char* end = nullptr;
  const unsigned long long cap = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0' || cap == 0) return std::max<std::size_t>(wanted, 1);
  return std::max<std::size_t>(1, std::min<std::size_t>(wanted, cap));
}

PlanReport run_plan(const capi::MdpInstance& instance, const std::string& instance_name,
                    std::uint64_t seed, const capi::PlannerConfig& config) {
  if (!instance.features) throw capi::InvalidParams("instance has no feature map");
  const capi::FeatureMap& features = *instance.features;
  capi::Simulator sim(instance.mdp, seed);

  const auto start = std::chrono::steady_clock::now();
  capi::PlanResult result = capi::plan(sim, features, features.param_bound(), config);
  const auto stop = std::chrono::steady_clock::now();

  const capi::TabularMdp& mdp = *instance.mdp;
  capi::TablePolicy dense = capi::TablePolicy::constant(mdp.n_states());
  const capi::ReplayEvaluator evaluator(result.policy);
  for (capi::StateId s = 0; s < mdp.n_states(); ++s) {
    dense.action_of[s] = evaluator.evaluate(result.policy.root(), s, features);
  }
  const double gap = capi::suboptimality(mdp, dense, mdp.initial_state());

  const capi::PlannerStats& st = result.stats;
  const double eps_plus_omega = config.epsilon + config.omega;
  const double bound = capi::suboptimality_bound(eps_plus_omega, st.d_tilde, mdp.gamma());
  const double q_bound = capi::query_bound(st.d_tilde, st.horizon, st.episodes);

  json record = {
      {"instance", instance_name},
      {"seed", seed},
      {"omega", config.omega},
      {"delta", config.delta},
      {"epsilon", config.epsilon},
      {"H", st.horizon},
      {"n", st.episodes},
      {"lambda", st.lambda},
      {"d_tilde", st.d_tilde},
      {"zeta", st.zeta},
      {"queries_total", st.queries_total},
      {"query_bound", q_bound},
      {"query_budget", st.query_budget},
      {"measure_success_count", st.measure_success_count},
      {"discover_count", st.discover_count},
      {"core_set_max", st.core_set_max},
      {"registry_size", st.registry_size},
      {"iterations", st.iterations},
      {"records", result.policy.records().size()},
      {"policy", dense.action_of},
      {"suboptimality_at_s0", gap},
      {"bound_lemma9", bound},
      {"delta_H", capi::delta_l(st.horizon, eps_plus_omega, st.d_tilde, mdp.gamma())},
      {"bound_satisfied", gap <= bound},
      {"accounting_satisfied",
       static_cast<double>(st.queries_total) <= q_bound &&
           static_cast<double>(st.measure_success_count) <=
               st.d_tilde * static_cast<double>(st.horizon) &&
           static_cast<double>(st.discover_count) <= st.d_tilde &&
           static_cast<double>(st.core_set_max) <= st.d_tilde},
  };
  if (st.unsound) record["unsound"] = true;
  if (config.debug_certify) {
    const capi::CertificationStats& c = st.certification;
    record["certification"] = {{"replay_checks", c.replay_checks},
                               {"inverse_checks", c.inverse_checks},
                               {"level_checks", c.level_checks},
                               {"measure_errors_checked", c.measure_errors_checked},
                               {"measure_errors_above_omega", c.measure_errors_above_omega},
                               {"accuracy_premise_held", c.accuracy_premise_held}};
  }
  const double ms = std::chrono::duration<double, std::milli>(stop - start).count();
  return PlanReport{std::move(record), ms, std::move(result.policy)};
}

}  // namespace capi_bench
