#pragma once

#include "capi/mdp.hpp"

#include <vector>

namespace capi {

struct PolicyValues {
  std::vector<double> v;
  ActionValues q;
};

/// Solves (I - gamma P_pi) v = r_pi directly (LU with partial pivoting) and
/// derives q(s, a) = r(s, a) + gamma sum_s' P(s'|s, a) v(s').
PolicyValues exact_values(const TabularMdp& mdp, const TablePolicy& policy);

struct OptimalSolution {
  std::vector<double> v_star;
  ActionValues q_star;
  TablePolicy pi_star;
  std::size_t improvement_rounds = 0;
};

/// Exact policy iteration from the constant-0 policy. Among actions whose
/// optimal value is within 1e-10 of the best, the lowest index is reported.
OptimalSolution exact_optimal(const TabularMdp& mdp);

/// v*(state) - v^pi(state).
double suboptimality(const TabularMdp& mdp, const TablePolicy& policy, StateId state);
/// Per-state gaps v* - v^pi given a precomputed optimal solution.
std::vector<double> suboptimality_gaps(const TabularMdp& mdp, const OptimalSolution& optimal,
                                       const TablePolicy& policy);

struct FitOptions {
  std::size_t max_policies = std::size_t{1} << 20;
  std::size_t subgradient_iterations = 2000;
  /// Per-policy refinement stops once the fit error reaches this value.
  double tolerance = 1e-9;
};

/// Upper bound on the uniform policy value-function approximation error of
/// (mdp, features): for every deterministic policy, a feasible theta with
/// ||theta|| <= B is found (projected least squares, refined by projected
/// subgradient descent on the max-abs residual) and its worst residual is
/// kept; the maximum over policies is returned. Any feasible theta gives an
/// upper bound, so the result never underestimates up to solver tolerance.
/// Throws TooManyPolicies if n_actions^n_states exceeds max_policies.
double fit_qpi_error_upper_bound(const TabularMdp& mdp, const FeatureMap& features,
                                 const FitOptions& options = {});

}  // namespace capi
