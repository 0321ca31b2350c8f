#pragma once

#include "capi/mdp.hpp"
#include "capi/recursive_policy.hpp"
#include "capi/simulator.hpp"

#include <cstddef>
#include <optional>

namespace capi {

struct PlannerConfig {
  double omega = 0.5;
  double delta = 0.1;
  /// Hard query cap as a multiple of d_tilde H n H.
  double budget_multiplier = 2.0;
  /// Replaces the Measure episode count (voids the guarantees).
  std::optional<std::size_t> n_override;
  std::size_t threads = 1;
  /// Tabular-only invariant checks against exact oracles; violations throw
  /// CertificationFailure.
  bool debug_certify = false;
  /// Realizability error of the instance, used only for the Delta_l checks.
  double epsilon = 0.0;
};

struct CertificationStats {
  std::size_t replay_checks = 0;      ///< evaluate calls compared with dense snapshots
  std::size_t inverse_checks = 0;     ///< incremental inverses compared with direct ones
  std::size_t level_checks = 0;       ///< (iteration, level, state) Delta_l checks performed
  std::size_t measure_errors_checked = 0;
  std::size_t measure_errors_above_omega = 0;
  /// False once some Measure estimate missed its accuracy; Delta_l checks
  /// stop from that point on.
  bool accuracy_premise_held = true;
};

struct PlannerStats {
  std::size_t queries_total = 0;
  std::size_t measure_success_count = 0;
  std::size_t discover_count = 0;
  std::size_t core_set_max = 0;
  std::size_t iterations = 0;
  std::size_t horizon = 0;
  std::size_t episodes = 0;
  double lambda = 0.0;
  double d_tilde = 0.0;
  double zeta = 0.0;
  std::size_t registry_size = 0;
  std::size_t query_budget = 0;
  bool unsound = false;
  CertificationStats certification;
};

struct PlanResult {
  RecursivePolicy policy;
  PlannerStats stats;
};

/// Leveled confident policy iteration over a local-access simulator.
///
/// Builds per-level core sets C_0..C_H with measured q-values, updates
/// pi_{l+1} from the least-squares estimate at level l, and returns pi_H
/// once no level has an unmeasured pair. Throws QueryBudgetExceeded when the
/// next Measure call could exceed the cap.
PlanResult plan(Simulator& sim, const FeatureMap& features, double B, const PlannerConfig& config);

/// 8 (eps + omega)(sqrt(d_tilde) + 1) sum_{j<l} gamma^j + gamma^l / (1 - gamma).
double delta_l(std::size_t l, double eps_plus_omega, double d_tilde, double gamma);

/// 9 (eps + omega)(sqrt(d_tilde) + 1) / (1 - gamma).
double suboptimality_bound(double eps_plus_omega, double d_tilde, double gamma);

/// d_tilde H n H: the query accounting bound of a complete run.
double query_bound(double d_tilde, std::size_t horizon, std::size_t episodes);

/// Upper bound d_tilde (H + 1) + d_tilde + 1 on main-loop iterations.
double iteration_bound(double d_tilde, std::size_t horizon);

}  // namespace capi
