#pragma once

#include "capi/mdp.hpp"
#include "capi/rng.hpp"

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

namespace capi {

enum class AccessModel {
  kLocal,   ///< queries only at s0 or states previously returned
  kRandom,  ///< generative model: any state may be queried
};

struct Transition {
  StateId next_state;
  double reward;
};

/// One simulator step. Consumes exactly two draws from the stream.
Transition sample_step(const TabularMdp& mdp, StateId s, ActionId a, StreamRng& rng);

struct Trajectory {
  std::vector<double> rewards;
};
struct Escaped {
  StateId state;
};
using EpisodeOutcome = std::variant<Trajectory, Escaped>;

/// Result of a rollout computed without touching simulator bookkeeping.
struct EpisodeRecord {
  EpisodeOutcome outcome;
  std::vector<StateId> returned_states;  ///< every next state the simulator produced
  std::size_t queries = 0;
};

/// Rolls (s, a), then follows `policy` for up to horizon - 1 more steps.
/// Stops with Escaped at the first visited state failing `filter`, checked
/// before acting there. Pure function of its arguments.
EpisodeRecord roll_episode(const TabularMdp& mdp, StreamRng rng, StateId s, ActionId a,
                           const PolicyFn& policy, std::size_t horizon,
                           const StatePredicate& filter);

/// Query-metered simulator over a shared immutable MDP.
///
/// Under local access a query (s, a) is accepted only if s is the initial
/// state or was previously returned. Every accepted step increments the
/// query counter by one. Single-threaded; create one per worker.
class Simulator {
 public:
  Simulator(std::shared_ptr<const TabularMdp> mdp, std::uint64_t seed,
            AccessModel access = AccessModel::kLocal);

  const TabularMdp& mdp() const noexcept { return *mdp_; }
  const std::shared_ptr<const TabularMdp>& shared_mdp() const noexcept { return mdp_; }
  AccessModel access_model() const noexcept { return access_; }
  std::uint64_t seed() const noexcept { return seed_; }

  Transition query(StateId s, ActionId a);

  bool is_seen(StateId s) const { return s < seen_.size() && seen_[s]; }
  std::size_t seen_count() const noexcept { return seen_count_; }
  std::size_t query_count() const noexcept { return query_count_; }

  /// Throws IndexError-style std::out_of_range or AccessViolation.
  void check_query(StateId s, ActionId a) const;

  /// Reserves a fresh block of keyed episode streams.
  std::uint64_t reserve_stream_block() noexcept { return next_block_++; }
  StreamRng episode_stream(std::uint64_t block, std::uint64_t episode) const noexcept {
    return StreamRng(seed_, block, episode);
  }

  /// Applies the bookkeeping of an episode produced by roll_episode.
  void commit(const EpisodeRecord& record);

 private:
  void mark_seen(StateId s);

  std::shared_ptr<const TabularMdp> mdp_;
  std::uint64_t seed_;
  AccessModel access_;
  std::vector<bool> seen_;
  std::size_t seen_count_ = 0;
  std::size_t query_count_ = 0;
  std::uint64_t direct_queries_ = 0;
  std::uint64_t next_block_ = 1;  // block 0 serves direct queries
};

/// Shared rollout kernel: checks access for (s, a), rolls one episode on a
/// fresh stream block and commits its bookkeeping to `sim`.
EpisodeOutcome sample_episode_prefix(Simulator& sim, StateId s, ActionId a,
                                     const PolicyFn& policy, std::size_t horizon,
                                     const StatePredicate& seen_filter);

}  // namespace capi
