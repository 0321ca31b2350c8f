#include "capi/capi.hpp"

#include "capi/errors.hpp"
#include "capi/exact_oracle.hpp"
#include "capi/rng.hpp"

#include <cmath>

namespace capi {

TablePolicy api_update(const ActionValues& q_hat) {
  TablePolicy out = TablePolicy::constant(q_hat.n_states());
  for (StateId s = 0; s < q_hat.n_states(); ++s) out.action_of[s] = argmax_lowest(q_hat.row(s));
  return out;
}

TablePolicy capi_update(const ActionValues& q_hat, const TablePolicy& prev,
                        const StatePredicate& s_fix, double omega) {
  if (!(omega > 0.0)) throw InvalidParams("omega must be positive");
  prev.validate(q_hat.n_states(), q_hat.n_actions());
  TablePolicy out = prev;
  for (StateId s = 0; s < q_hat.n_states(); ++s) {
    if (s_fix && s_fix(s)) continue;
    const auto row = q_hat.row(s);
    const ActionId greedy = argmax_lowest(row);
    if (row[prev(s)] + omega < row[greedy] - omega) out.action_of[s] = greedy;
  }
  return out;
}

std::size_t auto_iterations(double omega, double gamma) {
  if (!(omega > 0.0) || !(gamma > 0.0 && gamma < 1.0)) {
    throw InvalidParams("auto iteration count needs omega > 0 and gamma in (0, 1)");
  }
  if (omega >= 1.0) return 1;
  const double ratio = std::log(omega) / std::log(gamma);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio)));
}

TablePolicy run_capi(const EstimateOracle& estimate, std::size_t n_states, std::size_t n_actions,
                     const TablePolicy& initial, const CapiRunConfig& config) {
  initial.validate(n_states, n_actions);
  const std::size_t rounds = config.iterations.value_or(auto_iterations(config.omega, config.gamma));
  TablePolicy policy = initial;
  for (std::size_t i = 0; i < rounds; ++i) {
    const ActionValues q_hat = estimate(policy);
    if (q_hat.n_states() != n_states || q_hat.n_actions() != n_actions) {
      throw LengthMismatch("estimate oracle returned a table of the wrong shape");
    }
    policy = config.rule == UpdateRule::kApi ? api_update(q_hat)
                                              : capi_update(q_hat, policy, config.s_fix, config.omega);
  }
  return policy;
}

EstimateOracle noisy_exact_oracle(std::shared_ptr<const TabularMdp> mdp, double omega,
                                  NoiseModel noise, std::uint64_t seed) {
  if (!(omega >= 0.0)) throw InvalidParams("noise level must be non-negative");
  auto calls = std::make_shared<std::uint64_t>(0);
  return [mdp = std::move(mdp), omega, noise, seed, calls](const TablePolicy& policy) {
    PolicyValues exact = exact_values(*mdp, policy);
    ActionValues q = exact.q;
    if (noise == NoiseModel::kUniform) {
      StreamRng rng(seed, 0x6e6f6973, (*calls)++);
      for (StateId s = 0; s < q.n_states(); ++s) {
        for (ActionId a = 0; a < q.n_actions(); ++a) q(s, a) += omega * (2.0 * rng.uniform() - 1.0);
      }
    } else {
      for (StateId s = 0; s < q.n_states(); ++s) {
        const ActionId best = argmax_lowest(exact.q.row(s));
        const ActionId current = policy(s);
        q(s, current) += omega;
        if (best != current) q(s, best) -= omega;
      }
    }
    return q;
  };
}

}  // namespace capi
