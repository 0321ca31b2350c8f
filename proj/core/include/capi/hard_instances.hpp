#pragma once

#include "capi/mdp.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace capi {

/// Two-state linear MDP with sign-vector actions.
struct HardLinearSpec {
  std::vector<double> beta;  ///< entries +-1/sqrt(d-2)
  double gamma = 0.75;
  double Delta = 0.0;
  std::size_t d = 3;

  /// Throws InvalidParams on a violated constraint.
  void validate() const;
};

struct HardLinearInstance {
  std::shared_ptr<const TabularMdp> mdp;
  FeatureMap features;
  std::vector<std::vector<double>> actions;  ///< action a as a (d-2)-vector
};

inline constexpr std::size_t kMaxSignDimension = 16;

/// All sign vectors of length k scaled by 1/sqrt(k), in binary order
/// (bit i of the index set means coordinate i is negative).
std::vector<std::vector<double>> sign_vector_actions(std::size_t k);

/// beta equal to the sign vector with the given index.
std::vector<double> beta_from_index(std::size_t k, std::size_t index);
std::vector<double> random_beta(std::size_t k, std::uint64_t seed);

/// s0 = state 0, s1 = state 1 (absorbing). phi(s0, a) = (1, 0, a),
/// phi(s1, .) = e_2; r(s0, .) = 1, r(s1, .) = 0;
/// P(s0 | s0, a) = gamma + Delta beta^T a. Without an explicit action subset
/// the full sign-vector family is used, limited to d - 2 <= kMaxSignDimension.
HardLinearInstance make_hard_linear(const HardLinearSpec& spec,
                                    std::optional<std::vector<std::vector<double>>> actions = {});

/// Parameter norm bound for every policy's q-function on the instance.
double hard_linear_param_bound(const HardLinearSpec& spec);

/// v^pi(s0) = 1 / (1 - gamma^2 - gamma Delta pi^T beta).
double analytic_value(const HardLinearSpec& spec, double pi_beta_dot);

/// v*(s0) - v^pi(s0).
double analytic_gap(const HardLinearSpec& spec, double pi_beta_dot);

struct ErrDecomposition {
  std::vector<double> err;
  double total = 0.0;
};

/// Per-coordinate sign disagreement of the action the policy plays at s0.
ErrDecomposition err_decomposition(const TablePolicy& policy, const std::vector<double>& beta,
                                   const std::vector<std::vector<double>>& actions);

struct BanditInstance {
  std::shared_ptr<const TabularMdp> mdp;
  FeatureMap features;  ///< one-hot stand-in
};

/// Reward alpha_prime on (s0, i), zero elsewhere. looping: every transition
/// returns to s0; otherwise s0 moves to the absorbing s1.
BanditInstance make_bandit_mdp(std::size_t i, std::size_t k, double alpha_prime, double gamma,
                               bool looping);

}  // namespace capi
