#include "capi/mdp.hpp"

#include "capi/errors.hpp"

#include <cmath>
#include <string>

namespace capi {

namespace {

constexpr double kRowSumTolerance = 1e-12;
constexpr double kFeatureNormSlack = 1e-9;

std::string pair_name(StateId s, ActionId a) {
  return "(" + std::to_string(s) + ", " + std::to_string(a) + ")";
}

}  // namespace

TabularMdp::TabularMdp(std::size_t n_states, std::size_t n_actions, double gamma,
                       StateId initial_state, std::vector<double> transition,
                       std::vector<RewardSpec> rewards)
    : n_states_(n_states),
      n_actions_(n_actions),
      gamma_(gamma),
      initial_state_(initial_state),
      transition_(std::move(transition)),
      rewards_(std::move(rewards)) {
  validate();
  cumulative_.resize(transition_.size());
  for (std::size_t row = 0; row < n_states_ * n_actions_; ++row) {
    double acc = 0.0;
    for (std::size_t next = 0; next < n_states_; ++next) {
      acc += transition_[row * n_states_ + next];
      cumulative_[row * n_states_ + next] = acc;
    }
  }
}

void TabularMdp::validate() const {
  if (n_states_ == 0 || n_actions_ == 0) {
    throw InvalidModel("MDP needs at least one state and one action");
  }
  if (!(gamma_ > 0.0 && gamma_ < 1.0)) {
    throw InvalidModel("discount must lie in (0, 1), got " + std::to_string(gamma_));
  }
  if (initial_state_ >= n_states_) throw InvalidModel("initial state out of range");
  if (transition_.size() != n_states_ * n_actions_ * n_states_) {
    throw InvalidModel("transition table has wrong size");
  }
  if (rewards_.size() != n_states_ * n_actions_) throw InvalidModel("reward table has wrong size");

  for (StateId s = 0; s < n_states_; ++s) {
    for (ActionId a = 0; a < n_actions_; ++a) {
      double sum = 0.0;
      for (double p : transition_row(s, a)) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw InvalidModel("negative or non-finite probability at " + pair_name(s, a));
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        throw InvalidModel("transition row " + pair_name(s, a) + " sums to " +
                           std::to_string(sum));
      }
      const double r = reward(s, a).value;
      if (!(r >= 0.0 && r <= 1.0)) {
        throw InvalidModel("reward parameter outside [0, 1] at " + pair_name(s, a));
      }
    }
  }
}

StateId TabularMdp::sample_next(StateId s, ActionId a, double u) const {
  const double* cum = cumulative_.data() + index(s, a) * n_states_;
  // Rows sum to 1 only up to rounding, so the last positive entry absorbs the tail.
  StateId last_positive = 0;
  for (StateId next = 0; next < n_states_; ++next) {
    if (transition_[index(s, a) * n_states_ + next] > 0.0) {
      last_positive = next;
      if (u < cum[next]) return next;
    }
  }
  return last_positive;
}

TabularMdp TabularMdp::with_gamma(double gamma) const {
  return TabularMdp(n_states_, n_actions_, gamma, initial_state_, transition_, rewards_);
}

FeatureMap::FeatureMap(std::size_t n_states, std::size_t n_actions, std::size_t dim,
                       std::vector<double> phi, double feature_bound, double param_bound)
    : n_states_(n_states),
      n_actions_(n_actions),
      dim_(dim),
      phi_(std::move(phi)),
      feature_bound_(feature_bound),
      param_bound_(param_bound) {
  if (dim_ == 0) throw InvalidModel("feature dimension must be positive");
  if (phi_.size() != n_states_ * n_actions_ * dim_) {
    throw InvalidModel("feature table has wrong size");
  }
  if (!(feature_bound_ > 0.0) || !(param_bound_ > 0.0)) {
    throw InvalidModel("feature bound L and parameter bound B must be positive");
  }
  const double norm = max_norm();
  if (norm > feature_bound_ + kFeatureNormSlack) {
    throw InvalidModel("feature norm " + std::to_string(norm) + " exceeds bound L=" +
                       std::to_string(feature_bound_));
  }
}

FeatureMap FeatureMap::one_hot(std::size_t n_states, std::size_t n_actions, double param_bound) {
  const std::size_t dim = n_states * n_actions;
  std::vector<double> phi(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) phi[i * dim + i] = 1.0;
  return FeatureMap(n_states, n_actions, dim, std::move(phi), 1.0, param_bound);
}

double FeatureMap::max_norm() const {
  double best = 0.0;
  for (StateId s = 0; s < n_states_; ++s) {
    for (ActionId a = 0; a < n_actions_; ++a) best = std::max(best, (*this)(s, a).norm());
  }
  return best;
}

void TablePolicy::validate(std::size_t n_states, std::size_t n_actions) const {
  if (action_of.size() != n_states) throw InvalidModel("policy size does not match state count");
  for (ActionId a : action_of) {
    if (a >= n_actions) throw InvalidModel("policy action index out of range");
  }
}

ActionId argmax_lowest(std::span<const double> values) {
  ActionId best = 0;
  for (ActionId a = 1; a < values.size(); ++a) {
    if (values[a] > values[best]) best = a;
  }
  return best;
}

}  // namespace capi
