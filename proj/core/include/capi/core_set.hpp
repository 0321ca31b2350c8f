#pragma once

#include "capi/mdp.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace capi {

struct CorePair {
  StateId state;
  ActionId action;
  bool operator==(const CorePair&) const = default;
};

/// Ordered core set C with its regularized Gram matrix
/// V(C) = lambda I + sum_i phi_i phi_i^T and an incrementally maintained
/// inverse.
///
/// The inverse is updated by Sherman-Morrison on append and remove. Every
/// kRefreshInterval rank-one updates it is recomputed directly; the two must
/// agree to kInverseTolerance (Frobenius) or NumericalBreakdown is thrown.
class CoreSet {
 public:
  static constexpr std::size_t kRefreshInterval = 64;
  static constexpr double kInverseTolerance = 1e-8;
  static constexpr double kCoverSlack = 1e-12;

  CoreSet(std::size_t dim, double lambda);

  /// Rebuilds a core set from its pairs and a stored inverse (V is
  /// recomputed from the features; the inverse is taken as given).
  static CoreSet from_snapshot(std::size_t dim, double lambda, std::vector<CorePair> pairs,
                               std::vector<Eigen::VectorXd> features, Eigen::MatrixXd v_inverse);

  void append(StateId s, ActionId a, const Eigen::Ref<const Eigen::VectorXd>& phi);
  void append(StateId s, ActionId a, const FeatureMap& features) { append(s, a, features(s, a)); }

  /// Rank-one downdate removing the first occurrence of (s, a).
  /// Throws NotPresent or NumericalBreakdown (denominator <= 1e-12).
  void remove(StateId s, ActionId a);

  /// <phi, V^{-1} sum_i phi_i qbar_i>; 0 for the empty core set.
  double lse(std::span<const double> qbar, const Eigen::Ref<const Eigen::VectorXd>& phi) const;
  /// V^{-1} sum_i phi_i qbar_i.
  Eigen::VectorXd theta(std::span<const double> qbar) const;

  /// ||phi||^2_{V^{-1}}.
  double weighted_norm_sq(const Eigen::Ref<const Eigen::VectorXd>& phi) const;
  bool in_action_cover(const Eigen::Ref<const Eigen::VectorXd>& phi) const {
    return weighted_norm_sq(phi) <= 1.0 + kCoverSlack;
  }
  bool in_action_cover(StateId s, ActionId a, const FeatureMap& features) const {
    return in_action_cover(features(s, a));
  }
  /// Every action at s is action-covered.
  bool in_cover(StateId s, const FeatureMap& features) const;

  bool contains(StateId s, ActionId a) const;
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  double lambda() const noexcept { return lambda_; }
  const std::vector<CorePair>& pairs() const noexcept { return pairs_; }
  const std::vector<Eigen::VectorXd>& features() const noexcept { return features_; }
  const Eigen::MatrixXd& v_matrix() const noexcept { return v_; }
  const Eigen::MatrixXd& v_inverse() const noexcept { return v_inv_; }

  /// ||V V^{-1} - I||_F.
  double inverse_residual() const;
  /// ||V^{-1}_incremental - V^{-1}_direct||_F.
  double inverse_drift() const;
  Eigen::MatrixXd direct_inverse() const;

  /// When set, the drift check runs after every rank-one update.
  void set_verify_each_update(bool on) noexcept { verify_each_update_ = on; }
  std::size_t drift_checks() const noexcept { return drift_checks_; }

 private:
  void after_update();

  std::size_t dim_;
  double lambda_;
  std::vector<CorePair> pairs_;
  std::vector<Eigen::VectorXd> features_;
  Eigen::MatrixXd v_;
  Eigen::MatrixXd v_inv_;
  std::size_t updates_since_refresh_ = 0;
  std::size_t drift_checks_ = 0;
  bool verify_each_update_ = false;
};

/// Size bound 4 d ln(1 + 4 L^2 / lambda) on any core set built from
/// uncovered appends.
double d_tilde(double d, double feature_bound, double lambda);

}  // namespace capi
