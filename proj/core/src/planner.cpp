#include "capi/planner.hpp"

#include "capi/core_set.hpp"
#include "capi/errors.hpp"
#include "capi/exact_oracle.hpp"
#include "capi/measure.hpp"

#include <cmath>
#include <cstdint>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

namespace capi {

double delta_l(std::size_t l, double eps_plus_omega, double d_tilde, double gamma) {
  double geometric = 0.0;
  double power = 1.0;
  for (std::size_t j = 0; j < l; ++j) {
    geometric += power;
    power *= gamma;
  }
  return 8.0 * eps_plus_omega * (std::sqrt(d_tilde) + 1.0) * geometric + power / (1.0 - gamma);
}

double suboptimality_bound(double eps_plus_omega, double d_tilde, double gamma) {
  return 9.0 * eps_plus_omega * (std::sqrt(d_tilde) + 1.0) / (1.0 - gamma);
}

double query_bound(double d_tilde, std::size_t horizon, std::size_t episodes) {
  const auto h = static_cast<double>(horizon);
  return d_tilde * h * static_cast<double>(episodes) * h;
}

double iteration_bound(double d_tilde, std::size_t horizon) {
  return d_tilde * static_cast<double>(horizon + 1) + d_tilde + 1.0;
}

namespace {

/// Per-state cache for a callable that stays fixed during one Measure call.
class StateMemo {
 public:
  StateMemo(std::size_t n_states, bool concurrent)
      : values_(n_states, kUnknown), concurrent_(concurrent) {}

  template <typename F>
  std::int64_t get(StateId s, F&& compute) {
    if (s >= values_.size()) throw std::out_of_range("state index out of range");
    if (!concurrent_) {
      if (values_[s] == kUnknown) values_[s] = compute();
      return values_[s];
    }
    {
      std::shared_lock lock(mutex_);
      if (values_[s] != kUnknown) return values_[s];
    }
    const std::int64_t value = compute();
    std::unique_lock lock(mutex_);
    values_[s] = value;
    return value;
  }

 private:
  static constexpr std::int64_t kUnknown = -1;
  std::vector<std::int64_t> values_;
  bool concurrent_;
  std::shared_mutex mutex_;
};

struct Level {
  CoreSet core;
  std::vector<std::optional<double>> qbar;
  std::vector<std::size_t> registry_index;  // aligned with core.pairs()
  RegistryMask mask;
  std::int64_t policy = kBasePolicy;

  bool has_pending() const {
    for (const auto& q : qbar) {
      if (!q) return true;
    }
    return false;
  }
};

/// Dense oracle bookkeeping for debug certification on tabular instances.
class Certifier {
 public:
  Certifier(const TabularMdp& mdp, const FeatureMap& features, std::size_t levels,
            const PlannerConfig& config, double d_tilde, CertificationStats& stats)
      : mdp_(mdp),
        features_(features),
        config_(config),
        d_tilde_(d_tilde),
        stats_(stats),
        optimal_(exact_optimal(mdp)),
        base_(TablePolicy::constant(mdp.n_states())),
        settled_(levels, std::vector<std::optional<ActionId>>(mdp.n_states())) {}

  const TablePolicy& snapshot(std::int64_t record) const {
    return record == kBasePolicy ? base_ : snapshots_[static_cast<std::size_t>(record)];
  }

  /// Dense version of a new record, built from the live core sets.
  void add_snapshot(const PolicyRecord& record, const CoreSet& level_core,
                    const CoreSet& next_core, double omega) {
    const TablePolicy& update = snapshot(record.parent_update);
    const TablePolicy& merge = snapshot(record.parent_merge);
    TablePolicy dense = TablePolicy::constant(mdp_.n_states());
    std::vector<double> q_hat(mdp_.n_actions());
    for (StateId s = 0; s < mdp_.n_states(); ++s) {
      if (next_core.in_cover(s, features_)) {
        dense.action_of[s] = merge.action_of[s];
        continue;
      }
      const ActionId previous = update.action_of[s];
      dense.action_of[s] = previous;
      if (!level_core.in_cover(s, features_)) continue;
      for (ActionId a = 0; a < mdp_.n_actions(); ++a) q_hat[a] = features_(s, a).dot(record.theta);
      const ActionId greedy = argmax_lowest(q_hat);
      if (q_hat[previous] + omega < q_hat[greedy] - omega) dense.action_of[s] = greedy;
    }
    snapshots_.push_back(std::move(dense));
  }

  void check_replay(std::int64_t record, StateId s, ActionId replayed) {
    ++stats_.replay_checks;
    const ActionId expected = snapshot(record).action_of[s];
    if (replayed != expected) {
      throw CertificationFailure("replayed policy " + std::to_string(record) + " plays " +
                                 std::to_string(replayed) + " at state " + std::to_string(s) +
                                 ", dense snapshot plays " + std::to_string(expected));
    }
  }

  void check_measure(std::int64_t record, StateId s, ActionId a, double q_tilde) {
    const PolicyValues truth = exact_values(mdp_, snapshot(record));
    ++stats_.measure_errors_checked;
    if (std::abs(q_tilde - truth.q(s, a)) > config_.omega) {
      ++stats_.measure_errors_above_omega;
      stats_.accuracy_premise_held = false;
    }
  }

  void check_iteration(const std::vector<Level>& levels) {
    const double gamma = mdp_.gamma();
    for (std::size_t l = 0; l < levels.size(); ++l) {
      if (levels[l].core.size() > d_tilde_) {
        throw CertificationFailure("core set at level " + std::to_string(l) + " exceeds d_tilde");
      }
      const TablePolicy& policy = snapshot(levels[l].policy);
      std::optional<std::vector<double>> gaps;
      const double allowed = delta_l(l, config_.epsilon + config_.omega, d_tilde_, gamma) + 1e-6;
      for (StateId s = 0; s < mdp_.n_states(); ++s) {
        if (!levels[l].core.in_cover(s, features_)) continue;
        auto& settled = settled_[l][s];
        if (settled && *settled != policy.action_of[s]) {
          throw CertificationFailure("policy at level " + std::to_string(l) +
                                     " changed its action at covered state " + std::to_string(s));
        }
        settled = policy.action_of[s];
        if (!stats_.accuracy_premise_held) continue;
        if (!gaps) gaps = suboptimality_gaps(mdp_, optimal_, policy);
        ++stats_.level_checks;
        if ((*gaps)[s] > allowed) {
          throw CertificationFailure("policy at level " + std::to_string(l) + " is " +
                                     std::to_string((*gaps)[s]) + "-suboptimal at covered state " +
                                     std::to_string(s) + ", allowed " + std::to_string(allowed));
        }
      }
    }
  }

 private:
  const TabularMdp& mdp_;
  const FeatureMap& features_;
  const PlannerConfig& config_;
  double d_tilde_;
  CertificationStats& stats_;
  OptimalSolution optimal_;
  TablePolicy base_;
  std::vector<TablePolicy> snapshots_;
  std::vector<std::vector<std::optional<ActionId>>> settled_;
};

std::vector<LevelState> frontier_of(const std::vector<Level>& levels) {
  std::vector<LevelState> frontier;
  frontier.reserve(levels.size());
  for (const auto& level : levels) frontier.push_back({level.mask, level.core.v_inverse()});
  return frontier;
}

}  // namespace

PlanResult plan(Simulator& sim, const FeatureMap& features, double B, const PlannerConfig& config) {
  const TabularMdp& mdp = sim.mdp();
  const double omega = config.omega;
  const double gamma = mdp.gamma();
  if (!(omega > 0.0)) throw InvalidParams("omega must be positive");
  if (!(config.delta > 0.0 && config.delta <= 1.0)) throw InvalidParams("delta must lie in (0, 1]");
  if (!(B > 0.0)) throw InvalidParams("parameter bound must be positive");
  if (!(config.budget_multiplier > 0.0)) throw InvalidParams("budget multiplier must be positive");
  if (features.n_states() != mdp.n_states() || features.n_actions() != mdp.n_actions()) {
    throw LengthMismatch("feature map shape differs from the MDP");
  }
  const StateId s0 = mdp.initial_state();
  if (!sim.is_seen(s0)) throw AccessViolation("initial state has not been seen");

  PlannerStats stats;
  stats.horizon = horizon(omega, gamma);
  stats.lambda = omega * omega / (B * B);
  stats.d_tilde = d_tilde(static_cast<double>(features.dim()), features.feature_bound(), stats.lambda);
  stats.zeta = config.delta / (stats.d_tilde * static_cast<double>(stats.horizon));
  stats.episodes = config.n_override ? *config.n_override : num_episodes(omega, gamma, stats.zeta);
  stats.unsound = config.n_override.has_value();
  const double budget =
      config.budget_multiplier * query_bound(stats.d_tilde, stats.horizon, stats.episodes);
  stats.query_budget = static_cast<std::size_t>(std::floor(budget));
  const std::size_t H = stats.horizon;
  const std::size_t queries_at_start = sim.query_count();

  RecursivePolicy policy(features.dim(), mdp.n_actions(), H + 1, omega, stats.lambda);
  std::vector<Level> levels;
  levels.reserve(H + 1);
  for (std::size_t l = 0; l <= H; ++l) {
    levels.push_back(Level{CoreSet(features.dim(), stats.lambda), {}, {}, RegistryMask{}, kBasePolicy});
    levels.back().core.set_verify_each_update(config.debug_certify);
  }

  std::optional<Certifier> certifier;
  if (config.debug_certify) {
    certifier.emplace(mdp, features, H + 1, config, stats.d_tilde, stats.certification);
  }

  auto append_pair = [&](std::size_t l, StateId s, ActionId a) {
    Level& level = levels[l];
    std::size_t index = 0;
    if (auto found = policy.find_registry(s, a)) {
      index = *found;
    } else {
      index = policy.add_registry_entry(s, a, features(s, a));
    }
    level.core.append(s, a, features);
    level.qbar.emplace_back();
    level.registry_index.push_back(index);
    level.mask.set(index);
    stats.core_set_max = std::max(stats.core_set_max, level.core.size());
  };

  const double max_iterations = iteration_bound(stats.d_tilde, H);
  const bool concurrent = config.threads > 1;

  while (true) {
    ++stats.iterations;
    if (config.debug_certify && static_cast<double>(stats.iterations) > max_iterations) {
      throw CertificationFailure("main loop exceeded its iteration bound");
    }

    // Make sure s0 is covered at level 0.
    std::optional<ActionId> uncovered_at_s0;
    for (ActionId a = 0; a < mdp.n_actions(); ++a) {
      if (!levels[0].core.in_action_cover(s0, a, features)) {
        uncovered_at_s0 = a;
        break;
      }
    }
    if (uncovered_at_s0) {
      append_pair(0, s0, *uncovered_at_s0);
      if (certifier) certifier->check_iteration(levels);
      continue;
    }

    std::size_t l_min = H;
    for (std::size_t l = 0; l < H; ++l) {
      if (levels[l].has_pending()) {
        l_min = l;
        break;
      }
    }
    for (std::size_t l = 0; l < l_min; ++l) {
      if (levels[l].core.empty()) {
        throw CertificationFailure("level " + std::to_string(l) + " is empty below l_min");
      }
    }
    if (config.debug_certify) {
      for (std::size_t l = 1; l <= l_min; ++l) {
        for (const auto& entry : policy.registry()) {
          if (levels[l].core.in_action_cover(entry.feature) !=
              levels[0].core.in_action_cover(entry.feature)) {
            throw CertificationFailure("action covers of levels 0 and " + std::to_string(l) +
                                       " differ");
          }
        }
      }
    }

    if (l_min == H) {
      if (levels[H].core.size() != policy.registry().size()) {
        throw CertificationFailure("final core set does not hold the whole registry");
      }
      policy.set_final_inverse(levels[H].core.v_inverse());
      policy.set_root(levels[H].policy);
      stats.registry_size = policy.registry().size();
      stats.queries_total = sim.query_count() - queries_at_start;
      if (certifier) {
        const ReplayEvaluator final_eval(policy);
        for (StateId s = 0; s < mdp.n_states(); ++s) {
          certifier->check_replay(policy.root(), s, final_eval.evaluate(policy.root(), s, features));
        }
        stats.certification.inverse_checks += final_eval.downdates();
        for (const auto& level : levels) stats.certification.inverse_checks += level.core.drift_checks();
      }
      return PlanResult{std::move(policy), stats};
    }

    Level& level = levels[l_min];
    std::size_t m = 0;
    while (level.qbar[m]) ++m;
    const CorePair pair = level.core.pairs()[m];

    const std::size_t spent = sim.query_count() - queries_at_start;
    if (static_cast<double>(spent + stats.episodes * H) > budget) {
      throw QueryBudgetExceeded("next Measure call could exceed the query budget of " +
                                std::to_string(stats.query_budget));
    }

    const std::int64_t record = level.policy;
    ReplayEvaluator evaluator(policy, frontier_of(levels));
    evaluator.set_verify_inverses(config.debug_certify);
    StateMemo action_memo(mdp.n_states(), concurrent);
    StateMemo cover_memo(mdp.n_states(), concurrent);
    std::mutex certify_mutex;
    const PolicyFn pi = [&](StateId s) {
      return static_cast<ActionId>(action_memo.get(s, [&] {
        const ActionId a = evaluator.evaluate(record, s, features);
        if (certifier) {
          std::lock_guard lock(certify_mutex);
          certifier->check_replay(record, s, a);
        }
        return static_cast<std::int64_t>(a);
      }));
    };
    const CoreSet& cover_core = level.core;
    const StatePredicate in_cover = [&](StateId s) {
      return cover_memo.get(s, [&] { return std::int64_t{cover_core.in_cover(s, features) ? 1 : 0}; }) != 0;
    };

    MeasureOptions options;
    options.n_override = stats.episodes;
    options.threads = config.threads;
    const MeasureResult result =
        measure(sim, pair.state, pair.action, pi, in_cover, omega, stats.zeta, options);
    if (certifier) stats.certification.inverse_checks += evaluator.downdates();

    if (const auto* discover = std::get_if<MeasureDiscover>(&result)) {
      ++stats.discover_count;
      std::optional<ActionId> action;
      for (ActionId a = 0; a < mdp.n_actions(); ++a) {
        if (!levels[0].core.in_action_cover(discover->state, a, features)) {
          action = a;
          break;
        }
      }
      if (!action) throw CertificationFailure("discovered state is already covered at level 0");
      append_pair(0, discover->state, *action);
      if (certifier) certifier->check_iteration(levels);
      continue;
    }

    const double q_tilde = std::get<MeasureSuccess>(result).q_tilde;
    ++stats.measure_success_count;
    if (certifier) certifier->check_measure(record, pair.state, pair.action, q_tilde);
    if (level.qbar[m]) throw CertificationFailure("measured value overwritten");
    level.qbar[m] = q_tilde;

    if (!level.has_pending()) {
      std::vector<double> qbar;
      qbar.reserve(level.qbar.size());
      for (const auto& q : level.qbar) qbar.push_back(*q);
      Level& next = levels[l_min + 1];
      const std::int64_t merged =
          merge_policies(policy, next.policy, level.core.theta(qbar), l_min, level.policy,
                         level.mask, next.mask);
      if (certifier) {
        certifier->add_snapshot(policy.records().back(), level.core, next.core, omega);
        next.policy = merged;
        ReplayEvaluator check(policy, frontier_of(levels));
        check.set_verify_inverses(true);
        for (StateId s = 0; s < mdp.n_states(); ++s) {
          certifier->check_replay(merged, s, check.evaluate(merged, s, features));
        }
        stats.certification.inverse_checks += check.downdates();
      }
      next.policy = merged;
      for (std::size_t i = 0; i < level.core.size(); ++i) {
        const CorePair p = level.core.pairs()[i];
        if (!next.core.contains(p.state, p.action)) append_pair(l_min + 1, p.state, p.action);
      }
    }
    if (certifier) certifier->check_iteration(levels);
  }
}

}  // namespace capi
