#include "capi/random_mdp.hpp"

#include "capi/rng.hpp"

#include <algorithm>
#include <numeric>

namespace capi {

TabularMdp random_mdp(std::size_t n_states, std::size_t n_actions, double gamma,
                      std::uint64_t seed, const RandomMdpOptions& options) {
  StreamRng rng(seed, 0x6d6470);
  std::vector<double> transition(n_states * n_actions * n_states, 0.0);
  std::vector<RewardSpec> rewards(n_states * n_actions);
  const auto support = std::max<std::size_t>(
      1, static_cast<std::size_t>(options.support_fraction * static_cast<double>(n_states)));

  std::vector<StateId> order(n_states);
  for (std::size_t row = 0; row < n_states * n_actions; ++row) {
    std::iota(order.begin(), order.end(), StateId{0});
    // Fisher-Yates with our own stream so instances do not depend on the
    // standard library's shuffle implementation.
    for (std::size_t i = n_states; i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng() % i);
      std::swap(order[i - 1], order[j]);
    }
    double total = 0.0;
    double* out = transition.data() + row * n_states;
    for (std::size_t k = 0; k < support; ++k) {
      const double w = 0.05 + rng.uniform();
      out[order[k]] = w;
      total += w;
    }
    for (std::size_t k = 0; k < support; ++k) out[order[k]] /= total;
    // Push the rounding residue into the first support entry.
    const double residue = 1.0 - std::accumulate(out, out + n_states, 0.0);
    out[order[0]] += residue;

    const double r = rng.uniform();
    rewards[row] = options.bernoulli_rewards ? RewardSpec::bernoulli(r) : RewardSpec::deterministic(r);
  }
  return TabularMdp(n_states, n_actions, gamma, 0, std::move(transition), std::move(rewards));
}

TablePolicy random_policy(std::size_t n_states, std::size_t n_actions, std::uint64_t seed) {
  StreamRng rng(seed, 0x706f6c);
  TablePolicy policy = TablePolicy::constant(n_states);
  for (auto& a : policy.action_of) a = static_cast<ActionId>(rng() % n_actions);
  return policy;
}

}  // namespace capi
