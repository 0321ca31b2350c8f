#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace capi_bench {

struct SolveExactOptions {
  std::string mdp_path;
  std::string out;
};

struct RunCapiOptions {
  std::string mdp_path;  ///< empty: a fresh random MDP per seed
  std::size_t states = 8;
  std::size_t actions = 4;
  double gamma = 0.9;
  std::optional<double> gamma_override;
  double omega = 0.1;
  std::optional<std::size_t> iterations;
  std::string noise = "uniform";
  std::string mode = "capi";
  std::size_t seeds = 1;
  std::uint64_t seed_start = 0;
  std::string out;
};

struct PlanOptions {
  std::string mdp_path;
  double omega = 0.5;
  double delta = 0.1;
  std::uint64_t seed = 1;
  double budget_multiplier = 2.0;
  std::optional<std::size_t> n_override;
  bool debug_certify = false;
  std::optional<double> epsilon;
  std::size_t threads = 1;
  std::string policy_out;
  std::string out;
};

struct GenHardOptions {
  std::string family = "linear";
  std::size_t d = 5;
  double gamma = 0.75;
  double Delta = 0.05;
  std::string beta = "0";  ///< sign-vector index or "random"
  std::uint64_t seed = 0;
  std::size_t k = 4;
  std::size_t optimal_action = 0;
  double alpha_prime = 1.0;
  bool looping = false;
  std::string out;
};

struct BenchOptions {
  std::vector<std::string> instances;
  std::size_t seeds = 10;
  std::uint64_t seed_start = 1;
  std::vector<double> omegas{0.5};
  std::vector<double> deltas{0.1};
  double budget_multiplier = 2.0;
  std::optional<std::size_t> n_override;
  bool debug_certify = false;
  std::optional<double> epsilon;
  std::size_t jobs = 0;  ///< 0: hardware concurrency
  std::string csv;
  std::string out;
};

int solve_exact(const SolveExactOptions& options);
int run_capi(const RunCapiOptions& options);
int plan(const PlanOptions& options);
int gen_hard(const GenHardOptions& options);
int bench(const BenchOptions& options);

}  // namespace capi_bench
