#include "capi/hard_instances.hpp"

#include "capi/errors.hpp"
#include "capi/rng.hpp"

#include <cmath>
#include <string>

namespace capi {

void HardLinearSpec::validate() const {
  if (d < 3) throw InvalidParams("hard linear instance needs d >= 3");
  if (beta.size() != d - 2) throw InvalidParams("beta must have d - 2 entries");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d - 2));
  double norm_sq = 0.0;
  for (double b : beta) {
    if (std::abs(std::abs(b) - scale) > 1e-12) throw InvalidParams("beta entries must be +-1/sqrt(d-2)");
    norm_sq += b * b;
  }
  if (std::abs(std::sqrt(norm_sq) - 1.0) > 1e-12) throw InvalidParams("beta must have unit norm");
  if (!(gamma >= 7.0 / 12.0 && gamma < 1.0)) throw InvalidParams("gamma must lie in [7/12, 1)");
  if (!(Delta >= 0.0 && Delta <= 0.2 * (1.0 - gamma) + 1e-12)) {
    throw InvalidParams("Delta must lie in [0, 0.2 (1 - gamma)]");
  }
}

std::vector<std::vector<double>> sign_vector_actions(std::size_t k) {
  if (k == 0 || k > kMaxSignDimension) {
    throw TooManyActions("sign-vector family needs 1 <= d - 2 <= " + std::to_string(kMaxSignDimension));
  }
  std::vector<std::vector<double>> actions;
  actions.reserve(std::size_t{1} << k);
  for (std::size_t index = 0; index < (std::size_t{1} << k); ++index) {
    actions.push_back(beta_from_index(k, index));
  }
  return actions;
}

std::vector<double> beta_from_index(std::size_t k, std::size_t index) {
  if (k == 0 || k >= 64 || index >= (std::size_t{1} << k)) throw InvalidParams("sign index out of range");
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  std::vector<double> v(k);
  for (std::size_t i = 0; i < k; ++i) v[i] = ((index >> i) & 1U) ? -scale : scale;
  return v;
}

std::vector<double> random_beta(std::size_t k, std::uint64_t seed) {
  StreamRng rng(seed, 0x62657461);
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  std::vector<double> v(k);
  for (auto& x : v) x = (rng() & 1U) ? -scale : scale;
  return v;
}

double hard_linear_param_bound(const HardLinearSpec& spec) {
  return 1.0 + spec.gamma / (1.0 - spec.gamma * spec.gamma - spec.gamma * spec.Delta);
}

HardLinearInstance make_hard_linear(const HardLinearSpec& spec,
                                    std::optional<std::vector<std::vector<double>>> actions) {
  spec.validate();
  const std::size_t k = spec.d - 2;
  std::vector<std::vector<double>> action_set =
      actions ? std::move(*actions) : sign_vector_actions(k);
  if (action_set.empty()) throw InvalidParams("action set is empty");
  for (const auto& a : action_set) {
    if (a.size() != k) throw InvalidParams("actions must have d - 2 entries");
  }
  const std::size_t n_actions = action_set.size();
  const std::size_t d = spec.d;

  std::vector<double> transition(2 * n_actions * 2, 0.0);
  std::vector<RewardSpec> rewards;
  rewards.reserve(2 * n_actions);
  std::vector<double> phi(2 * n_actions * d, 0.0);
  for (ActionId a = 0; a < n_actions; ++a) {
    double dot = 0.0;
    for (std::size_t i = 0; i < k; ++i) dot += spec.beta[i] * action_set[a][i];
    const double stay = spec.gamma + spec.Delta * dot;
    if (stay < 0.0 || stay > 1.0) throw InvalidModel("transition probability outside [0, 1]");
    transition[(0 * n_actions + a) * 2 + 0] = stay;
    transition[(0 * n_actions + a) * 2 + 1] = 1.0 - stay;
    double* f = phi.data() + (0 * n_actions + a) * d;
    f[0] = 1.0;
    for (std::size_t i = 0; i < k; ++i) f[2 + i] = action_set[a][i];
  }
  for (ActionId a = 0; a < n_actions; ++a) rewards.push_back(RewardSpec::deterministic(1.0));
  for (ActionId a = 0; a < n_actions; ++a) {
    transition[(1 * n_actions + a) * 2 + 1] = 1.0;
    rewards.push_back(RewardSpec::deterministic(0.0));
    phi[(1 * n_actions + a) * d + 1] = 1.0;
  }
  double feature_bound = 1.0;
  for (const auto& a : action_set) {
    double sq = 1.0;
    for (double x : a) sq += x * x;
    feature_bound = std::max(feature_bound, std::sqrt(sq));
  }
  auto mdp = std::make_shared<const TabularMdp>(2, n_actions, spec.gamma, 0, std::move(transition),
                                                std::move(rewards));
  FeatureMap features(2, n_actions, d, std::move(phi), feature_bound, hard_linear_param_bound(spec));
  return HardLinearInstance{std::move(mdp), std::move(features), std::move(action_set)};
}

double analytic_value(const HardLinearSpec& spec, double pi_beta_dot) {
  if (std::abs(pi_beta_dot) > 1.0 + 1e-12) throw InvalidParams("pi^T beta must lie in [-1, 1]");
  return 1.0 / (1.0 - spec.gamma * spec.gamma - spec.gamma * spec.Delta * pi_beta_dot);
}

double analytic_gap(const HardLinearSpec& spec, double pi_beta_dot) {
  const double g = spec.gamma;
  const double base = 1.0 - g * g;
  return g * spec.Delta * (1.0 - pi_beta_dot) /
         ((base - g * spec.Delta) * (base - g * spec.Delta * pi_beta_dot));
}

ErrDecomposition err_decomposition(const TablePolicy& policy, const std::vector<double>& beta,
                                   const std::vector<std::vector<double>>& actions) {
  const ActionId a = policy(0);
  if (a >= actions.size()) throw std::out_of_range("policy action outside the action set");
  const auto& chosen = actions[a];
  if (chosen.size() != beta.size()) throw LengthMismatch("action and beta lengths differ");
  ErrDecomposition out;
  out.err.resize(beta.size());
  for (std::size_t i = 0; i < beta.size(); ++i) {
    out.err[i] = (std::signbit(chosen[i]) != std::signbit(beta[i])) ? 1.0 : 0.0;
    out.total += out.err[i];
  }
  return out;
}

BanditInstance make_bandit_mdp(std::size_t i, std::size_t k, double alpha_prime, double gamma,
                               bool looping) {
  if (k == 0 || i >= k) throw InvalidParams("optimal action must be below the action count");
  if (!(alpha_prime >= 0.0 && alpha_prime <= 1.0)) throw InvalidParams("alpha' must lie in [0, 1]");
  std::vector<double> transition(2 * k * 2, 0.0);
  std::vector<RewardSpec> rewards;
  rewards.reserve(2 * k);
  for (ActionId a = 0; a < k; ++a) {
    transition[(0 * k + a) * 2 + (looping ? 0 : 1)] = 1.0;
    rewards.push_back(RewardSpec::deterministic(a == i ? alpha_prime : 0.0));
  }
  for (ActionId a = 0; a < k; ++a) {
    transition[(1 * k + a) * 2 + (looping ? 0 : 1)] = 1.0;
    rewards.push_back(RewardSpec::deterministic(0.0));
  }
  auto mdp = std::make_shared<const TabularMdp>(2, k, gamma, 0, std::move(transition), std::move(rewards));
  const double B = std::sqrt(static_cast<double>(2 * k)) / (1.0 - gamma);
  return BanditInstance{std::move(mdp), FeatureMap::one_hot(2, k, B)};
}

}  // namespace capi
