#include "capi/simulator.hpp"

#include "capi/errors.hpp"

#include <stdexcept>
#include <string>

namespace capi {

Transition sample_step(const TabularMdp& mdp, StateId s, ActionId a, StreamRng& rng) {
  const double u_next = rng.uniform();
  const double u_reward = rng.uniform();
  return {mdp.sample_next(s, a, u_next), mdp.reward(s, a).sample(u_reward)};
}

EpisodeRecord roll_episode(const TabularMdp& mdp, StreamRng rng, StateId s, ActionId a,
                           const PolicyFn& policy, std::size_t horizon,
                           const StatePredicate& filter) {
  EpisodeRecord record;
  Trajectory trajectory;
  trajectory.rewards.reserve(horizon);
  record.returned_states.reserve(horizon);

  Transition step = sample_step(mdp, s, a, rng);
  ++record.queries;
  record.returned_states.push_back(step.next_state);
  trajectory.rewards.push_back(step.reward);

  for (std::size_t h = 1; h < horizon; ++h) {
    const StateId state = step.next_state;
    if (filter && !filter(state)) {
      record.outcome = Escaped{state};
      return record;
    }
    const ActionId action = policy(state);
    step = sample_step(mdp, state, action, rng);
    ++record.queries;
    record.returned_states.push_back(step.next_state);
    trajectory.rewards.push_back(step.reward);
  }
  record.outcome = std::move(trajectory);
  return record;
}

Simulator::Simulator(std::shared_ptr<const TabularMdp> mdp, std::uint64_t seed,
                     AccessModel access)
    : mdp_(std::move(mdp)), seed_(seed), access_(access) {
  if (!mdp_) throw InvalidParams("simulator needs an MDP");
  seen_.assign(mdp_->n_states(), false);
  mark_seen(mdp_->initial_state());
}

void Simulator::mark_seen(StateId s) {
  if (!seen_[s]) {
    seen_[s] = true;
    ++seen_count_;
  }
}

void Simulator::check_query(StateId s, ActionId a) const {
  if (s >= mdp_->n_states()) {
    throw std::out_of_range("state index " + std::to_string(s) + " out of range");
  }
  if (a >= mdp_->n_actions()) {
    throw std::out_of_range("action index " + std::to_string(a) + " out of range");
  }
  if (access_ == AccessModel::kLocal && !seen_[s]) {
    throw AccessViolation("query at unseen state " + std::to_string(s));
  }
}

Transition Simulator::query(StateId s, ActionId a) {
  check_query(s, a);
  StreamRng rng(seed_, 0, direct_queries_++);
  const Transition t = sample_step(*mdp_, s, a, rng);
  ++query_count_;
  mark_seen(t.next_state);
  return t;
}

void Simulator::commit(const EpisodeRecord& record) {
  for (StateId s : record.returned_states) mark_seen(s);
  query_count_ += record.queries;
}

EpisodeOutcome sample_episode_prefix(Simulator& sim, StateId s, ActionId a,
                                     const PolicyFn& policy, std::size_t horizon,
                                     const StatePredicate& seen_filter) {
  if (horizon == 0) throw InvalidParams("horizon must be positive");
  sim.check_query(s, a);
  const std::uint64_t block = sim.reserve_stream_block();
  EpisodeRecord record =
      roll_episode(sim.mdp(), sim.episode_stream(block, 0), s, a, policy, horizon, seen_filter);
  sim.commit(record);
  return std::move(record.outcome);
}

}  // namespace capi
