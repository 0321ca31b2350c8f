#include "capi/core_set.hpp"

#include "capi/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace capi {

namespace {
constexpr double kDowndateFloor = 1e-12;
}

CoreSet::CoreSet(std::size_t dim, double lambda) : dim_(dim), lambda_(lambda) {
  if (dim_ == 0) throw InvalidParams("core set dimension must be positive");
  if (!(lambda_ > 0.0)) throw InvalidParams("ridge parameter must be positive");
  const auto d = static_cast<Eigen::Index>(dim_);
  v_ = lambda_ * Eigen::MatrixXd::Identity(d, d);
  v_inv_ = (1.0 / lambda_) * Eigen::MatrixXd::Identity(d, d);
}

CoreSet CoreSet::from_snapshot(std::size_t dim, double lambda, std::vector<CorePair> pairs,
                               std::vector<Eigen::VectorXd> features, Eigen::MatrixXd v_inverse) {
  if (pairs.size() != features.size()) throw LengthMismatch("pairs and features differ in length");
  const auto d = static_cast<Eigen::Index>(dim);
  if (v_inverse.rows() != d || v_inverse.cols() != d) throw LengthMismatch("inverse has wrong shape");
  CoreSet core(dim, lambda);
  for (const Eigen::VectorXd& phi : features) core.v_.noalias() += phi * phi.transpose();
  core.pairs_ = std::move(pairs);
  core.features_ = std::move(features);
  core.v_inv_ = std::move(v_inverse);
  return core;
}

void CoreSet::append(StateId s, ActionId a, const Eigen::Ref<const Eigen::VectorXd>& phi) {
  if (static_cast<std::size_t>(phi.size()) != dim_) throw LengthMismatch("feature has wrong dimension");
  const Eigen::VectorXd u = v_inv_ * phi;
  const double denom = 1.0 + phi.dot(u);
  v_.noalias() += phi * phi.transpose();
  v_inv_.noalias() -= (u * u.transpose()) / denom;
  pairs_.push_back({s, a});
  features_.emplace_back(phi);
  after_update();
}

void CoreSet::remove(StateId s, ActionId a) {
  const auto it = std::find(pairs_.begin(), pairs_.end(), CorePair{s, a});
  if (it == pairs_.end()) {
    throw NotPresent("pair (" + std::to_string(s) + ", " + std::to_string(a) +
                     ") is not in the core set");
  }
  const auto idx = static_cast<std::size_t>(it - pairs_.begin());
  const Eigen::VectorXd phi = features_[idx];
  // 1 - phi^T V^{-1} phi cancels when phi is nearly uncovered by the rest of
  // the core set; one refinement step against V keeps u accurate.
  Eigen::VectorXd u = v_inv_ * phi;
  u += v_inv_ * (phi - v_ * u);
  const double denom = 1.0 - phi.dot(u);
  if (!(denom > kDowndateFloor)) {
    throw NumericalBreakdown("rank-one downdate denominator " + std::to_string(denom));
  }
  v_.noalias() -= phi * phi.transpose();
  v_inv_.noalias() += (u * u.transpose()) / denom;
  pairs_.erase(it);
  features_.erase(features_.begin() + static_cast<std::ptrdiff_t>(idx));
  after_update();
}

void CoreSet::after_update() {
  const bool refresh_due = ++updates_since_refresh_ >= kRefreshInterval;
  if (verify_each_update_ || refresh_due) {
    Eigen::MatrixXd direct = direct_inverse();
    const double drift = (direct - v_inv_).norm();
    ++drift_checks_;
    if (!(drift <= kInverseTolerance)) {
      std::ostringstream message;
      message << "incremental inverse drifted by " << std::scientific << drift << " after "
              << pairs_.size() << " pairs";
      throw NumericalBreakdown(message.str());
    }
    if (refresh_due) {
      v_inv_ = std::move(direct);
      updates_since_refresh_ = 0;
    }
  }
}

Eigen::MatrixXd CoreSet::direct_inverse() const {
  const auto d = static_cast<Eigen::Index>(dim_);
  return v_.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
}

double CoreSet::inverse_residual() const {
  const auto d = static_cast<Eigen::Index>(dim_);
  return (v_ * v_inv_ - Eigen::MatrixXd::Identity(d, d)).norm();
}

double CoreSet::inverse_drift() const { return (direct_inverse() - v_inv_).norm(); }

Eigen::VectorXd CoreSet::theta(std::span<const double> qbar) const {
  if (qbar.size() != pairs_.size()) {
    throw LengthMismatch("qbar has " + std::to_string(qbar.size()) + " entries for " +
                         std::to_string(pairs_.size()) + " core pairs");
  }
  Eigen::VectorXd moment = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < pairs_.size(); ++i) moment += features_[i] * qbar[i];
  return v_inv_ * moment;
}

double CoreSet::lse(std::span<const double> qbar, const Eigen::Ref<const Eigen::VectorXd>& phi) const {
  if (pairs_.empty()) {
    if (!qbar.empty()) throw LengthMismatch("qbar given for an empty core set");
    return 0.0;
  }
  return phi.dot(theta(qbar));
}

double CoreSet::weighted_norm_sq(const Eigen::Ref<const Eigen::VectorXd>& phi) const {
  return phi.dot(v_inv_ * phi);
}

bool CoreSet::in_cover(StateId s, const FeatureMap& features) const {
  for (ActionId a = 0; a < features.n_actions(); ++a) {
    if (!in_action_cover(features(s, a))) return false;
  }
  return true;
}

bool CoreSet::contains(StateId s, ActionId a) const {
  return std::find(pairs_.begin(), pairs_.end(), CorePair{s, a}) != pairs_.end();
}

double d_tilde(double d, double feature_bound, double lambda) {
  if (!(d > 0.0) || !(feature_bound > 0.0) || !(lambda > 0.0)) {
    throw InvalidParams("d_tilde needs positive d, L and lambda");
  }
  return 4.0 * d * std::log(1.0 + 4.0 * feature_bound * feature_bound / lambda);
}

}  // namespace capi
