#include "commands.hpp"

#include "plan_report.hpp"

#include <capi/capi.hpp>
#include <capi/errors.hpp>
#include <capi/exact_oracle.hpp>
#include <capi/hard_instances.hpp>
#include <capi/mdp_io.hpp>
#include <capi/random_mdp.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace capi_bench {

using nlohmann::json;

namespace {

/// Stdout or a file, one JSON record per line.
class RecordSink {
 public:
  explicit RecordSink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open " + path);
    }
  }
  void write(const json& record) { stream() << record.dump() << '\n'; }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string instance_name(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

json values_of(const std::vector<double>& v) { return json(v); }

}  // namespace

int solve_exact(const SolveExactOptions& options) {
  const capi::MdpInstance instance = capi::load_instance(options.mdp_path);
  const capi::TabularMdp& mdp = *instance.mdp;
  const capi::OptimalSolution optimal = capi::exact_optimal(mdp);
  json q = json::array();
  for (capi::StateId s = 0; s < mdp.n_states(); ++s) {
    const auto row = optimal.q_star.row(s);
    q.push_back(std::vector<double>(row.begin(), row.end()));
  }
  RecordSink sink(options.out);
  sink.write({{"instance", instance_name(options.mdp_path)},
              {"gamma", mdp.gamma()},
              {"v_star", values_of(optimal.v_star)},
              {"pi_star", optimal.pi_star.action_of},
              {"q_star", std::move(q)},
              {"v_star_s0", optimal.v_star[mdp.initial_state()]},
              {"improvement_rounds", optimal.improvement_rounds}});
  return 0;
}

int run_capi(const RunCapiOptions& options) {
  const capi::NoiseModel noise =
      options.noise == "adversarial" ? capi::NoiseModel::kAdversarial : capi::NoiseModel::kUniform;
  std::vector<std::pair<std::string, capi::UpdateRule>> rules;
  if (options.mode == "api" || options.mode == "both") rules.emplace_back("api", capi::UpdateRule::kApi);
  if (options.mode == "capi" || options.mode == "both") rules.emplace_back("capi", capi::UpdateRule::kCapi);

  std::optional<capi::MdpInstance> loaded;
  if (!options.mdp_path.empty()) loaded = capi::load_instance(options.mdp_path);

  RecordSink sink(options.out);
  for (std::size_t i = 0; i < options.seeds; ++i) {
    const std::uint64_t seed = options.seed_start + i;
    capi::TabularMdp base = loaded ? *loaded->mdp
                                   : capi::random_mdp(options.states, options.actions, options.gamma, seed);
    if (options.gamma_override) base = base.with_gamma(*options.gamma_override);
    auto mdp = std::make_shared<const capi::TabularMdp>(std::move(base));
    const double gamma = mdp->gamma();
    const capi::OptimalSolution optimal = capi::exact_optimal(*mdp);

    capi::CapiRunConfig config;
    config.gamma = gamma;
    config.omega = options.omega;
    config.iterations = options.iterations;
    const std::size_t iterations =
        options.iterations ? *options.iterations : capi::auto_iterations(options.omega, gamma);
    const double bound = 5.0 * options.omega / (1.0 - gamma);

    json record = {{"instance", loaded ? instance_name(options.mdp_path)
                                       : "random-" + std::to_string(options.states) + "x" +
                                             std::to_string(options.actions)},
                   {"seed", seed},
                   {"gamma", gamma},
                   {"omega", options.omega},
                   {"iterations", iterations},
                   {"noise", options.noise},
                   {"capi_bound", bound}};
    for (const auto& [name, rule] : rules) {
      config.rule = rule;
      const auto oracle = capi::noisy_exact_oracle(mdp, options.omega, noise, seed);
      const capi::TablePolicy result =
          capi::run_capi(oracle, mdp->n_states(), mdp->n_actions(),
                         capi::TablePolicy::constant(mdp->n_states()), config);
      const auto gaps = capi::suboptimality_gaps(*mdp, optimal, result);
      const double worst = *std::max_element(gaps.begin(), gaps.end());
      record[name + "_policy"] = result.action_of;
      record[name + "_suboptimality_max"] = worst;
      record[name + "_suboptimality_at_s0"] = gaps[mdp->initial_state()];
      if (rule == capi::UpdateRule::kCapi) record["capi_bound_satisfied"] = worst <= bound;
    }
    sink.write(record);
  }
  return 0;
}

namespace {

capi::PlannerConfig planner_config(double omega, double delta, double budget_multiplier,
                                   std::optional<std::size_t> n_override, bool debug_certify,
                                   double epsilon, std::size_t threads) {
  capi::PlannerConfig config;
  config.omega = omega;
  config.delta = delta;
  config.budget_multiplier = budget_multiplier;
  config.n_override = n_override;
  config.debug_certify = debug_certify;
  config.epsilon = epsilon;
  config.threads = threads;
  return config;
}

}  // namespace

int plan(const PlanOptions& options) {
  const capi::MdpInstance instance = capi::load_instance(options.mdp_path);
  const double epsilon = options.epsilon ? *options.epsilon : instance_epsilon(instance);
  const auto config = planner_config(options.omega, options.delta, options.budget_multiplier,
                                     options.n_override, options.debug_certify, epsilon,
                                     thread_cap(options.threads));
  PlanReport report = run_plan(instance, instance_name(options.mdp_path), options.seed, config);
  if (!options.policy_out.empty()) {
    std::ofstream file(options.policy_out);
    if (!file) throw std::runtime_error("cannot open " + options.policy_out);
    file << report.policy.to_json().dump() << '\n';
  }
  RecordSink sink(options.out);
  sink.write(report.record);
  return 0;
}

int gen_hard(const GenHardOptions& options) {
  capi::MdpInstance instance;
  if (options.family == "linear") {
    capi::HardLinearSpec spec;
    spec.d = options.d;
    spec.gamma = options.gamma;
    spec.Delta = options.Delta;
    const std::size_t k = options.d - 2;
    if (options.beta == "random") {
      spec.beta = capi::random_beta(k, options.seed);
    } else {
      std::size_t index = 0;
      try {
        index = std::stoull(options.beta);
      } catch (const std::exception&) {
        throw capi::InvalidParams("--beta must be an index or 'random'");
      }
      spec.beta = capi::beta_from_index(k, index);
    }
    capi::HardLinearInstance hard = capi::make_hard_linear(spec);
    instance.mdp = hard.mdp;
    instance.features = std::move(hard.features);
    instance.meta = {{"family", "hard_linear"},
                     {"beta", spec.beta},
                     {"Delta", spec.Delta},
                     {"epsilon", 0.0},
                     {"actions", hard.actions}};
  } else {
    capi::BanditInstance bandit = capi::make_bandit_mdp(options.optimal_action, options.k,
                                                        options.alpha_prime, options.gamma,
                                                        options.looping);
    instance.mdp = bandit.mdp;
    instance.features = std::move(bandit.features);
    instance.meta = {{"family", options.looping ? "bandit_looping" : "bandit"},
                     {"optimal_action", options.optimal_action},
                     {"alpha_prime", options.alpha_prime},
                     {"features_note", "one-hot stand-in, not a lower-bound feature map"}};
  }
  RecordSink sink(options.out);
  sink.write(capi::to_json(instance));
  return 0;
}

int bench(const BenchOptions& options) {
  struct Task {
    std::size_t instance;
    double omega;
    double delta;
    std::uint64_t seed;
  };
  std::vector<capi::MdpInstance> instances;
  for (const auto& path : options.instances) instances.push_back(capi::load_instance(path));

  std::vector<Task> tasks;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (double omega : options.omegas) {
      for (double delta : options.deltas) {
        for (std::size_t k = 0; k < options.seeds; ++k) tasks.push_back({i, omega, delta, options.seed_start + k});
      }
    }
  }

  std::vector<std::optional<PlanReport>> reports(tasks.size());
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      try {
        const Task& task = tasks[t];
        const capi::MdpInstance& instance = instances[task.instance];
        const double epsilon = options.epsilon ? *options.epsilon : instance_epsilon(instance);
        const auto config = planner_config(task.omega, task.delta, options.budget_multiplier,
                                           options.n_override, options.debug_certify, epsilon, 1);
        reports[t] = run_plan(instance, instance_name(options.instances[task.instance]), task.seed, config);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
      }
    }
  };
  const std::size_t wanted =
      options.jobs > 0 ? options.jobs : std::max(1U, std::thread::hardware_concurrency());
  const std::size_t jobs = std::min(thread_cap(wanted), std::max<std::size_t>(tasks.size(), 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  RecordSink sink(options.out);
  std::optional<std::ofstream> csv;
  if (!options.csv.empty()) {
    csv.emplace(options.csv);
    if (!*csv) throw std::runtime_error("cannot open " + options.csv);
    *csv << "instance,seed,omega,delta,queries_total,measure_success_count,discover_count,"
            "core_set_max,suboptimality_at_s0,bound_lemma9,bound_satisfied,wall_time_ms\n";
    csv->precision(17);
  }
  for (const auto& report : reports) {
    const json& r = report->record;
    sink.write(r);
    if (csv) {
      *csv << r["instance"].get<std::string>() << ',' << r["seed"].get<std::uint64_t>() << ','
           << r["omega"].get<double>() << ',' << r["delta"].get<double>() << ','
           << r["queries_total"].get<std::size_t>() << ','
           << r["measure_success_count"].get<std::size_t>() << ','
           << r["discover_count"].get<std::size_t>() << ',' << r["core_set_max"].get<std::size_t>()
           << ',' << r["suboptimality_at_s0"].get<double>() << ','
           << r["bound_lemma9"].get<double>() << ','
           << (r["bound_satisfied"].get<bool>() ? "true" : "false") << ',' << report->wall_time_ms
           << '\n';
    }
  }

  // One summary record per (instance, omega, delta) group, in task order.
  for (std::size_t start = 0; start < tasks.size(); start += options.seeds) {
    std::size_t failures = 0;
    bool accounting = true;
    for (std::size_t t = start; t < start + options.seeds; ++t) {
      const json& r = reports[t]->record;
      if (!r["bound_satisfied"].get<bool>()) ++failures;
      accounting = accounting && r["accounting_satisfied"].get<bool>();
    }
    const Task& task = tasks[start];
    const double runs = static_cast<double>(options.seeds);
    const double rate = static_cast<double>(failures) / runs;
    const double allowed = task.delta + 3.0 * std::sqrt(task.delta * (1.0 - task.delta) / runs);
    json summary = {{"summary", true},
                    {"instance", instance_name(options.instances[task.instance])},
                    {"omega", task.omega},
                    {"delta", task.delta},
                    {"runs", options.seeds},
                    {"bound_failures", failures},
                    {"failure_rate", rate},
                    {"failure_rate_allowed", allowed},
                    {"failure_rate_ok", rate <= allowed},
                    {"accounting_satisfied", accounting}};
    if (options.n_override) summary["unsound"] = true;
    sink.write(summary);
  }
  return 0;
}

}  // namespace capi_bench
