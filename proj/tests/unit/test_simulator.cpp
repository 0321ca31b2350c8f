#include "oracles.hpp"

#include <capi/errors.hpp>
#include <capi/random_mdp.hpp>
#include <capi/simulator.hpp>

#include <doctest.h>

#include <memory>
#include <stdexcept>

using namespace capi;

namespace {

const PolicyFn kFirstAction = [](StateId) { return ActionId{0}; };
const StatePredicate kEverywhere = [](StateId) { return true; };

}  // namespace

TEST_SUITE("mdp_core") {
  TEST_CASE("one-state query") {
    Simulator sim(oracle::one_state_mdp({1.0}, 0.9), 3);
    CHECK(sim.query_count() == 0);
    const Transition t = sim.query(0, 0);
    CHECK(t.next_state == 0);
    CHECK(t.reward == 1.0);
    CHECK(sim.query_count() == 1);
  }

  TEST_CASE("local access rejects unseen states") {
    Simulator sim(oracle::chain_mdp(2, 0.5, 1.0, 0.0), 3);
    CHECK(sim.is_seen(0));
    CHECK_FALSE(sim.is_seen(1));
    CHECK_THROWS_AS(sim.query(1, 0), AccessViolation);
    CHECK(sim.query_count() == 0);
    CHECK(sim.query(0, 1).next_state == 1);
    CHECK(sim.is_seen(1));
    CHECK_NOTHROW(sim.query(1, 0));
    CHECK(sim.query_count() == 2);
    CHECK(sim.seen_count() == 2);
  }

  TEST_CASE("index errors and random access") {
    Simulator local(oracle::chain_mdp(2, 0.5, 1.0, 0.0), 3);
    CHECK_THROWS_AS(local.query(0, 2), std::out_of_range);
    CHECK_THROWS_AS(local.query(5, 0), std::out_of_range);
    Simulator random(oracle::chain_mdp(2, 0.5, 1.0, 0.0), 3, AccessModel::kRandom);
    CHECK_NOTHROW(random.query(1, 0));
  }

  TEST_CASE("Bernoulli rewards average to their parameter") {
    auto mdp = std::make_shared<const TabularMdp>(1, 1, 0.9, 0, std::vector<double>{1.0},
                                                  std::vector<RewardSpec>{RewardSpec::bernoulli(0.5)});
    Simulator sim(mdp, 17);
    double total = 0.0;
    for (int i = 0; i < 10000; ++i) total += sim.query(0, 0).reward;
    CHECK(total / 10000 == doctest::Approx(0.5).epsilon(0.04));
    CHECK(std::abs(total / 10000 - 0.5) <= 0.02);
  }

  TEST_CASE("episode prefixes") {
    SUBCASE("one state, horizon 3") {
      Simulator sim(oracle::one_state_mdp({1.0}, 0.9), 1);
      const auto out = sample_episode_prefix(sim, 0, 0, kFirstAction, 3, kEverywhere);
      REQUIRE(std::holds_alternative<Trajectory>(out));
      CHECK(std::get<Trajectory>(out).rewards == std::vector<double>{1.0, 1.0, 1.0});
      CHECK(sim.query_count() == 3);
    }
    SUBCASE("escape to a filtered state after one query") {
      Simulator sim(oracle::chain_mdp(1, 0.5, 1.0, 0.0), 1);
      const auto out = sample_episode_prefix(sim, 0, 0, kFirstAction, 5, [](StateId s) { return s == 0; });
      REQUIRE(std::holds_alternative<Escaped>(out));
      CHECK(std::get<Escaped>(out).state == 1);
      CHECK(sim.query_count() == 1);
      CHECK(sim.is_seen(1));
    }
    SUBCASE("horizon 1 is a single query") {
      Simulator sim(oracle::chain_mdp(1, 0.5, 0.25, 0.0), 1);
      const auto out = sample_episode_prefix(sim, 0, 0, kFirstAction, 1, [](StateId) { return false; });
      REQUIRE(std::holds_alternative<Trajectory>(out));
      CHECK(std::get<Trajectory>(out).rewards == std::vector<double>{0.25});
      CHECK(sim.query_count() == 1);
    }
    SUBCASE("horizon 0 is rejected") {
      Simulator sim(oracle::one_state_mdp({1.0}, 0.9), 1);
      CHECK_THROWS_AS(sample_episode_prefix(sim, 0, 0, kFirstAction, 0, kEverywhere), InvalidParams);
    }
    SUBCASE("start state must be seen") {
      Simulator sim(oracle::chain_mdp(1, 0.5, 1.0, 0.0), 1);
      CHECK_THROWS_AS(sample_episode_prefix(sim, 1, 0, kFirstAction, 2, kEverywhere), AccessViolation);
    }
  }

  TEST_CASE("metering, seen-set monotonicity and determinism") {
    auto mdp = std::make_shared<const TabularMdp>(random_mdp(12, 3, 0.9, 77, {0.25, true}));
    Simulator a(mdp, 99);
    Simulator b(mdp, 99);
    StreamRng choice(4, 4);
    std::size_t accepted = 0;
    std::size_t seen_before = a.seen_count();
    std::vector<StateId> frontier{0};
    for (int i = 0; i < 3000; ++i) {
      const StateId s = frontier[choice() % frontier.size()];
      const ActionId act = choice() % 3;
      const Transition ta = a.query(s, act);
      const Transition tb = b.query(s, act);
      ++accepted;
      CHECK(ta.next_state == tb.next_state);
      CHECK(ta.reward == tb.reward);
      if (!std::count(frontier.begin(), frontier.end(), ta.next_state)) frontier.push_back(ta.next_state);
      REQUIRE(a.seen_count() >= seen_before);
      seen_before = a.seen_count();
      REQUIRE(a.is_seen(0));
      if (i % 7 == 0) {
        const PolicyFn pi = [](StateId s) { return static_cast<ActionId>(s % 3); };
        const auto before = a.query_count();
        const auto ea = sample_episode_prefix(a, s, act, pi, 6, kEverywhere);
        const auto eb = sample_episode_prefix(b, s, act, pi, 6, kEverywhere);
        CHECK(std::get<Trajectory>(ea).rewards == std::get<Trajectory>(eb).rewards);
        accepted += a.query_count() - before;
        CHECK(a.query_count() - before == 6);
      }
    }
    CHECK(a.query_count() == accepted);
    CHECK(b.query_count() == accepted);
    CHECK(a.seen_count() == frontier.size());
  }

  TEST_CASE("roll_episode is pure") {
    const TabularMdp mdp = random_mdp(5, 2, 0.8, 3);
    const PolicyFn pi = [](StateId s) { return static_cast<ActionId>(s % 2); };
    const auto r1 = roll_episode(mdp, StreamRng(1, 2, 3), 0, 1, pi, 8, kEverywhere);
    const auto r2 = roll_episode(mdp, StreamRng(1, 2, 3), 0, 1, pi, 8, kEverywhere);
    CHECK(r1.returned_states == r2.returned_states);
    CHECK(r1.queries == 8);
    CHECK(r1.returned_states.size() == 8);
  }
}
