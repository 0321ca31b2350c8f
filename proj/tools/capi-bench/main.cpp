#include "commands.hpp"

#include <capi/errors.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kUsageError = 2;
constexpr int kBudgetExceeded = 3;
constexpr int kCertificationFailed = 4;

}  // namespace

int main(int argc, char** argv) {
  using namespace capi_bench;
  CLI::App app{"Confident approximate policy iteration: planners, oracles and sweeps"};
  app.require_subcommand(1);

  SolveExactOptions solve;
  auto* solve_cmd = app.add_subcommand("solve-exact", "Exact optimal values and policy of an MDP");
  solve_cmd->add_option("mdp", solve.mdp_path, "MDP instance JSON")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--out", solve.out, "Write records here instead of stdout");

  RunCapiOptions capi;
  auto* capi_cmd = app.add_subcommand("run-capi", "Policy iteration with a noisy exact oracle");
  capi_cmd->add_option("--mdp", capi.mdp_path, "MDP instance JSON (default: random per seed)")
      ->check(CLI::ExistingFile);
  capi_cmd->add_option("--states", capi.states, "Random instance state count")->check(CLI::PositiveNumber);
  capi_cmd->add_option("--actions", capi.actions, "Random instance action count")->check(CLI::PositiveNumber);
  capi_cmd->add_option("--gamma", capi.gamma, "Random instance discount")->check(CLI::Range(0.0, 1.0));
  capi_cmd->add_option("--gamma-override", capi.gamma_override, "Replace the instance discount");
  capi_cmd->add_option("--omega", capi.omega, "Oracle accuracy")->check(CLI::PositiveNumber);
  capi_cmd->add_option("--iterations", capi.iterations, "Iteration count (default ceil(ln omega / ln gamma))");
  capi_cmd->add_option("--noise", capi.noise, "Oracle noise model")
      ->check(CLI::IsMember({"uniform", "adversarial"}));
  capi_cmd->add_option("--mode", capi.mode, "Update rule")->check(CLI::IsMember({"api", "capi", "both"}));
  capi_cmd->add_option("--seeds", capi.seeds, "Number of seeds")->check(CLI::PositiveNumber);
  capi_cmd->add_option("--seed-start", capi.seed_start, "First seed");
  capi_cmd->add_option("--out", capi.out, "Write records here instead of stdout");

  PlanOptions plan_opts;
  auto* plan_cmd = app.add_subcommand("plan", "Run the local-access planner once");
  plan_cmd->add_option("mdp", plan_opts.mdp_path, "MDP instance JSON with features")
      ->required()
      ->check(CLI::ExistingFile);
  plan_cmd->add_option("--omega", plan_opts.omega, "Accuracy parameter")->check(CLI::PositiveNumber);
  plan_cmd->add_option("--delta", plan_opts.delta, "Failure probability")->check(CLI::Range(0.0, 1.0));
  plan_cmd->add_option("--seed", plan_opts.seed, "Simulator seed");
  plan_cmd->add_option("--budget-multiplier", plan_opts.budget_multiplier, "Query cap multiple")
      ->check(CLI::PositiveNumber);
  plan_cmd->add_option("--n-override", plan_opts.n_override, "Episodes per measurement (unsound)")
      ->check(CLI::PositiveNumber);
  plan_cmd->add_flag("--debug-certify", plan_opts.debug_certify, "Check invariants against exact oracles");
  plan_cmd->add_option("--epsilon", plan_opts.epsilon, "Realizability error (default: instance meta)");
  plan_cmd->add_option("--threads", plan_opts.threads, "Measure worker threads")->check(CLI::PositiveNumber);
  plan_cmd->add_option("--policy-out", plan_opts.policy_out, "Save the recursive policy JSON");
  plan_cmd->add_option("--out", plan_opts.out, "Write records here instead of stdout");

  GenHardOptions hard;
  auto* hard_cmd = app.add_subcommand("gen-hard", "Generate a hard instance");
  hard_cmd->add_option("--family", hard.family, "Instance family")->check(CLI::IsMember({"linear", "bandit"}));
  hard_cmd->add_option("--d", hard.d, "Feature dimension (linear)")->check(CLI::Range(3, 1 << 20));
  hard_cmd->add_option("--gamma", hard.gamma, "Discount factor")->check(CLI::Range(0.0, 1.0));
  hard_cmd->add_option("--Delta", hard.Delta, "Gap parameter (linear)");
  hard_cmd->add_option("--beta", hard.beta, "Sign-vector index of beta, or 'random'");
  hard_cmd->add_option("--seed", hard.seed, "Seed for --beta random");
  hard_cmd->add_option("--k", hard.k, "Action count (bandit)")->check(CLI::PositiveNumber);
  hard_cmd->add_option("--optimal-action", hard.optimal_action, "Rewarding action (bandit)");
  hard_cmd->add_option("--alpha-prime", hard.alpha_prime, "Reward of the rewarding action (bandit)");
  hard_cmd->add_flag("--looping", hard.looping, "Return to s0 after every step (bandit)");
  hard_cmd->add_option("--out", hard.out, "Write the instance here instead of stdout");

  BenchOptions sweep;
  auto* bench_cmd = app.add_subcommand("bench", "Sweep planner runs over seeds and parameters");
  bench_cmd->add_option("instances", sweep.instances, "MDP instance JSON files")
      ->required()
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--seeds", sweep.seeds, "Seeds per configuration")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed-start", sweep.seed_start, "First seed");
  bench_cmd->add_option("--omega", sweep.omegas, "Accuracy values")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--delta", sweep.deltas, "Failure probabilities")->check(CLI::Range(0.0, 1.0));
  bench_cmd->add_option("--budget-multiplier", sweep.budget_multiplier, "Query cap multiple")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--n-override", sweep.n_override, "Episodes per measurement (unsound)")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_flag("--debug-certify", sweep.debug_certify, "Check invariants against exact oracles");
  bench_cmd->add_option("--epsilon", sweep.epsilon, "Realizability error (default: instance meta)");
  bench_cmd->add_option("--jobs", sweep.jobs, "Parallel runs (default: hardware concurrency)");
  bench_cmd->add_option("--csv", sweep.csv, "CSV summary path");
  bench_cmd->add_option("--out", sweep.out, "Write records here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*solve_cmd) return solve_exact(solve);
    if (*capi_cmd) return run_capi(capi);
    if (*plan_cmd) return plan(plan_opts);
    if (*hard_cmd) return gen_hard(hard);
    if (*bench_cmd) return bench(sweep);
  } catch (const capi::QueryBudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return kBudgetExceeded;
  } catch (const capi::CertificationFailure& e) {
    std::cerr << "certification failed: " << e.what() << '\n';
    return kCertificationFailed;
  } catch (const capi::InvalidParams& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsageError;
}
