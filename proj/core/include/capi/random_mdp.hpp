#pragma once

#include "capi/mdp.hpp"

#include <cstdint>

namespace capi {

struct RandomMdpOptions {
  /// Fraction of next states with nonzero mass per row (at least one).
  double support_fraction = 1.0;
  bool bernoulli_rewards = false;
};

/// Seeded random tabular MDP with initial state 0. Used by tests and the
/// benchmark harness; the same seed always yields the same instance.
TabularMdp random_mdp(std::size_t n_states, std::size_t n_actions, double gamma,
                      std::uint64_t seed, const RandomMdpOptions& options = {});

/// Uniformly random deterministic policy.
TablePolicy random_policy(std::size_t n_states, std::size_t n_actions, std::uint64_t seed);

}  // namespace capi
