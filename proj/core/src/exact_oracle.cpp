#include "capi/exact_oracle.hpp"

#include "capi/errors.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace capi {

namespace {

constexpr double kTieTolerance = 1e-10;

ActionValues q_from_v(const TabularMdp& mdp, const Eigen::VectorXd& v) {
  ActionValues q(mdp.n_states(), mdp.n_actions());
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    for (ActionId a = 0; a < mdp.n_actions(); ++a) {
      double expected = 0.0;
      const auto row = mdp.transition_row(s, a);
      for (StateId next = 0; next < row.size(); ++next) expected += row[next] * v[next];
      q(s, a) = mdp.mean_reward(s, a) + mdp.gamma() * expected;
    }
  }
  return q;
}

}  // namespace

PolicyValues exact_values(const TabularMdp& mdp, const TablePolicy& policy) {
  policy.validate(mdp.n_states(), mdp.n_actions());
  const auto n = static_cast<Eigen::Index>(mdp.n_states());
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs(n);
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    const ActionId a = policy(s);
    const auto row = mdp.transition_row(s, a);
    for (StateId next = 0; next < row.size(); ++next) {
      system(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(next)) -= mdp.gamma() * row[next];
    }
    rhs[static_cast<Eigen::Index>(s)] = mdp.mean_reward(s, a);
  }
  const Eigen::VectorXd v = system.partialPivLu().solve(rhs);
  if (!v.allFinite()) throw SingularSystem("policy evaluation system is singular");

  PolicyValues out{std::vector<double>(v.data(), v.data() + v.size()), q_from_v(mdp, v)};
  return out;
}

OptimalSolution exact_optimal(const TabularMdp& mdp) {
  OptimalSolution out;
  TablePolicy policy = TablePolicy::constant(mdp.n_states());
  PolicyValues values = exact_values(mdp, policy);

  // Switch only on strict improvement beyond the tie tolerance, which makes
  // the iteration terminate even when several actions are optimal.
  for (;;) {
    ++out.improvement_rounds;
    bool changed = false;
    for (StateId s = 0; s < mdp.n_states(); ++s) {
      const auto row = values.q.row(s);
      const ActionId best = argmax_lowest(row);
      if (row[best] > row[policy(s)] + kTieTolerance) {
        policy.action_of[s] = best;
        changed = true;
      }
    }
    if (!changed) break;
    values = exact_values(mdp, policy);
  }

  for (StateId s = 0; s < mdp.n_states(); ++s) {
    const auto row = values.q.row(s);
    const double best = row[argmax_lowest(row)];
    for (ActionId a = 0; a < row.size(); ++a) {
      if (row[a] >= best - kTieTolerance) {
        policy.action_of[s] = a;
        break;
      }
    }
  }
  values = exact_values(mdp, policy);
  out.v_star = std::move(values.v);
  out.q_star = std::move(values.q);
  out.pi_star = std::move(policy);
  return out;
}

std::vector<double> suboptimality_gaps(const TabularMdp& mdp, const OptimalSolution& optimal,
                                       const TablePolicy& policy) {
  const PolicyValues values = exact_values(mdp, policy);
  std::vector<double> gaps(mdp.n_states());
  for (StateId s = 0; s < mdp.n_states(); ++s) gaps[s] = optimal.v_star[s] - values.v[s];
  return gaps;
}

double suboptimality(const TabularMdp& mdp, const TablePolicy& policy, StateId state) {
  if (state >= mdp.n_states()) throw std::out_of_range("state index out of range");
  return suboptimality_gaps(mdp, exact_optimal(mdp), policy)[state];
}

namespace {

Eigen::VectorXd project_to_ball(Eigen::VectorXd theta, double radius) {
  const double norm = theta.norm();
  if (norm > radius) theta *= radius / norm;
  return theta;
}

double fit_one_policy(const Eigen::MatrixXd& design,
                      const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>& cod,
                      const Eigen::VectorXd& target, double radius, const FitOptions& options) {
  Eigen::VectorXd theta = project_to_ball(cod.solve(target), radius);
  Eigen::VectorXd residual = target - design * theta;
  double best = residual.cwiseAbs().maxCoeff();
  if (best <= options.tolerance) return best;

  const double row_scale = std::max(design.rowwise().norm().maxCoeff(), 1e-12);
  for (std::size_t k = 0; k < options.subgradient_iterations; ++k) {
    Eigen::Index worst = 0;
    residual.cwiseAbs().maxCoeff(&worst);
    // Subgradient of max_i |r_i| w.r.t. theta is -sign(r_w) phi_w.
    const double sign = residual[worst] >= 0.0 ? 1.0 : -1.0;
    const double step = best / (row_scale * row_scale) / std::sqrt(static_cast<double>(k) + 1.0);
    theta = project_to_ball(theta + step * sign * design.row(worst).transpose(), radius);
    residual = target - design * theta;
    best = std::min(best, residual.cwiseAbs().maxCoeff());
    if (best <= options.tolerance) break;
  }
  return best;
}

}  // namespace

double fit_qpi_error_upper_bound(const TabularMdp& mdp, const FeatureMap& features,
                                 const FitOptions& options) {
  if (features.n_states() != mdp.n_states() || features.n_actions() != mdp.n_actions()) {
    throw InvalidModel("feature map shape does not match MDP");
  }
  const double log_count =
      static_cast<double>(mdp.n_states()) * std::log(static_cast<double>(mdp.n_actions()));
  if (log_count > std::log(static_cast<double>(options.max_policies)) + 1e-12) {
    throw TooManyPolicies("n_actions^n_states deterministic policies exceed the enumeration guard");
  }

  const auto rows = static_cast<Eigen::Index>(mdp.n_states() * mdp.n_actions());
  Eigen::MatrixXd design(rows, static_cast<Eigen::Index>(features.dim()));
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    for (ActionId a = 0; a < mdp.n_actions(); ++a) {
      design.row(static_cast<Eigen::Index>(s * mdp.n_actions() + a)) = features(s, a).transpose();
    }
  }
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);

  TablePolicy policy = TablePolicy::constant(mdp.n_states());
  double worst = 0.0;
  Eigen::VectorXd target(rows);
  for (;;) {
    const PolicyValues values = exact_values(mdp, policy);
    for (StateId s = 0; s < mdp.n_states(); ++s) {
      for (ActionId a = 0; a < mdp.n_actions(); ++a) {
        target[static_cast<Eigen::Index>(s * mdp.n_actions() + a)] = values.q(s, a);
      }
    }
    worst = std::max(worst, fit_one_policy(design, cod, target, features.param_bound(), options));

    // Mixed-radix increment over all deterministic policies.
    std::size_t pos = 0;
    while (pos < policy.size() && ++policy.action_of[pos] == mdp.n_actions()) {
      policy.action_of[pos++] = 0;
    }
    if (pos == policy.size()) break;
  }
  return worst;
}

}  // namespace capi
