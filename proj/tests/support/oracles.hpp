#pragma once

// Reference implementations used only by tests. They deliberately avoid the
// library's solvers: values come from fixed-point iteration, optima from
// exhaustive enumeration, inverses from a full-pivot LU.

#include <capi/mdp.hpp>
#include <capi/mdp_io.hpp>

#include <Eigen/Core>

#include <memory>
#include <string>
#include <vector>

namespace oracle {

/// Iterative policy evaluation until the sup-norm update falls below tol.
std::vector<double> iterate_values(const capi::TabularMdp& mdp, const capi::TablePolicy& policy,
                                   double tol = 1e-13);
capi::ActionValues iterate_q(const capi::TabularMdp& mdp, const capi::TablePolicy& policy,
                             double tol = 1e-13);

/// Bellman-optimality value iteration.
std::vector<double> value_iteration(const capi::TabularMdp& mdp, double tol = 1e-13);

/// Element-wise max of v^pi over every deterministic policy.
std::vector<double> brute_force_optimal(const capi::TabularMdp& mdp);

/// (lambda I + sum phi phi^T)^{-1} by full-pivot LU.
Eigen::MatrixXd gram_inverse(const std::vector<Eigen::VectorXd>& features, double lambda);

/// s0 -> s1 deterministically, s1 absorbing; r(s0, .) = r0, r(s1, .) = r1.
std::shared_ptr<const capi::TabularMdp> chain_mdp(std::size_t n_actions, double gamma, double r0,
                                                  double r1);
/// One state, n_actions actions, deterministic reward per action.
std::shared_ptr<const capi::TabularMdp> one_state_mdp(std::vector<double> rewards, double gamma);

std::string data_path(const std::string& name);
capi::MdpInstance load_data(const std::string& name);

}  // namespace oracle
