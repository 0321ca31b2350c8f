#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace capi {

using StateId = std::size_t;
using ActionId = std::size_t;

using StatePredicate = std::function<bool(StateId)>;
using PolicyFn = std::function<ActionId(StateId)>;

enum class RewardKind { kDeterministic, kBernoulli };

/// Reward distribution of one state-action pair; support is always [0, 1].
struct RewardSpec {
  RewardKind kind = RewardKind::kDeterministic;
  double value = 0.0;

  static RewardSpec deterministic(double v) { return {RewardKind::kDeterministic, v}; }
  static RewardSpec bernoulli(double p) { return {RewardKind::kBernoulli, p}; }

  double mean() const noexcept { return value; }
  /// Draws a reward given a uniform variate in [0, 1).
  double sample(double u) const noexcept {
    if (kind == RewardKind::kDeterministic) return value;
    return u < value ? 1.0 : 0.0;
  }

  bool operator==(const RewardSpec&) const = default;
};

/// Finite discounted MDP with dense transition table P[s][a][s'].
///
/// Immutable after construction; all invariants are checked by the
/// constructor and violations raise InvalidModel.
class TabularMdp {
 public:
  TabularMdp(std::size_t n_states, std::size_t n_actions, double gamma,
             StateId initial_state, std::vector<double> transition,
             std::vector<RewardSpec> rewards);

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_actions() const noexcept { return n_actions_; }
  double gamma() const noexcept { return gamma_; }
  StateId initial_state() const noexcept { return initial_state_; }

  double transition(StateId s, ActionId a, StateId next) const {
    return transition_[index(s, a) * n_states_ + next];
  }
  std::span<const double> transition_row(StateId s, ActionId a) const {
    return {transition_.data() + index(s, a) * n_states_, n_states_};
  }
  const RewardSpec& reward(StateId s, ActionId a) const { return rewards_[index(s, a)]; }
  double mean_reward(StateId s, ActionId a) const { return rewards_[index(s, a)].mean(); }

  /// Inverse-CDF draw of the next state for a uniform variate in [0, 1).
  StateId sample_next(StateId s, ActionId a, double u) const;

  TabularMdp with_gamma(double gamma) const;

  bool operator==(const TabularMdp& other) const {
    return n_states_ == other.n_states_ && n_actions_ == other.n_actions_ &&
           gamma_ == other.gamma_ && initial_state_ == other.initial_state_ &&
           transition_ == other.transition_ && rewards_ == other.rewards_;
  }

 private:
  std::size_t index(StateId s, ActionId a) const noexcept { return s * n_actions_ + a; }
  void validate() const;

  std::size_t n_states_;
  std::size_t n_actions_;
  double gamma_;
  StateId initial_state_;
  std::vector<double> transition_;
  std::vector<RewardSpec> rewards_;
  std::vector<double> cumulative_;
};

/// Feature map phi(s, a) in R^d with norm bound L and parameter bound B.
class FeatureMap {
 public:
  FeatureMap(std::size_t n_states, std::size_t n_actions, std::size_t dim,
             std::vector<double> phi, double feature_bound, double param_bound);

  /// phi(s, a) = e_{s * n_actions + a}.
  static FeatureMap one_hot(std::size_t n_states, std::size_t n_actions, double param_bound);

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_actions() const noexcept { return n_actions_; }
  std::size_t dim() const noexcept { return dim_; }
  double feature_bound() const noexcept { return feature_bound_; }
  double param_bound() const noexcept { return param_bound_; }

  Eigen::Map<const Eigen::VectorXd> operator()(StateId s, ActionId a) const {
    return Eigen::Map<const Eigen::VectorXd>(
        phi_.data() + (s * n_actions_ + a) * dim_, static_cast<Eigen::Index>(dim_));
  }

  double max_norm() const;
  const std::vector<double>& raw() const noexcept { return phi_; }

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::size_t dim_;
  std::vector<double> phi_;
  double feature_bound_;
  double param_bound_;
};

/// Deterministic stationary memoryless policy.
struct TablePolicy {
  std::vector<ActionId> action_of;

  static TablePolicy constant(std::size_t n_states, ActionId action = 0) {
    return TablePolicy{std::vector<ActionId>(n_states, action)};
  }

  ActionId operator()(StateId s) const { return action_of.at(s); }
  std::size_t size() const noexcept { return action_of.size(); }
  /// Throws InvalidModel when the policy does not fit the MDP shape.
  void validate(std::size_t n_states, std::size_t n_actions) const;

  bool operator==(const TablePolicy&) const = default;
};

/// Dense per-(s, a) table of reals, e.g. an action-value function.
class ActionValues {
 public:
  ActionValues() = default;
  ActionValues(std::size_t n_states, std::size_t n_actions, double fill = 0.0)
      : n_states_(n_states), n_actions_(n_actions), values_(n_states * n_actions, fill) {}

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_actions() const noexcept { return n_actions_; }

  double& operator()(StateId s, ActionId a) { return values_[s * n_actions_ + a]; }
  double operator()(StateId s, ActionId a) const { return values_[s * n_actions_ + a]; }
  std::span<const double> row(StateId s) const {
    return {values_.data() + s * n_actions_, n_actions_};
  }

 private:
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<double> values_;
};

/// Lowest index attaining the maximum (strict comparison).
ActionId argmax_lowest(std::span<const double> values);

}  // namespace capi
