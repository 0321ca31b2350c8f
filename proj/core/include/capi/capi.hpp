#pragma once

#include "capi/mdp.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

namespace capi {

/// Greedy update: argmax_a q_hat(s, a), lowest index on ties.
TablePolicy api_update(const ActionValues& q_hat);

/// Confident update. Switches state s to the greedy action only when s is
/// not fixed and q_hat(s, prev(s)) + omega < max_a q_hat(s, a) - omega;
/// otherwise keeps prev(s). A null `s_fix` means no state is fixed.
TablePolicy capi_update(const ActionValues& q_hat, const TablePolicy& prev,
                        const StatePredicate& s_fix, double omega);

/// ceil(ln omega / ln gamma), clamped to at least 1.
std::size_t auto_iterations(double omega, double gamma);

enum class UpdateRule { kApi, kCapi };

using EstimateOracle = std::function<ActionValues(const TablePolicy&)>;

struct CapiRunConfig {
  double gamma = 0.9;
  double omega = 0.1;
  /// Unset means auto_iterations(omega, gamma).
  std::optional<std::size_t> iterations;
  UpdateRule rule = UpdateRule::kCapi;
  StatePredicate s_fix;
};

/// Alternates estimate and update for the configured number of rounds and
/// returns the last policy.
TablePolicy run_capi(const EstimateOracle& estimate, std::size_t n_states, std::size_t n_actions,
                     const TablePolicy& initial, const CapiRunConfig& config);

enum class NoiseModel {
  kUniform,      ///< i.i.d. uniform on [-omega, omega] per (s, a) per call
  kAdversarial,  ///< +omega on the evaluated policy's action, -omega on the true best
};

/// Estimate oracle returning the exact q^pi perturbed by at most omega.
EstimateOracle noisy_exact_oracle(std::shared_ptr<const TabularMdp> mdp, double omega,
                                  NoiseModel noise, std::uint64_t seed);

}  // namespace capi
