#include "oracles.hpp"

#include <capi/errors.hpp>
#include <capi/recursive_policy.hpp>
#include <capi/rng.hpp>

#include <doctest.h>

#include <functional>

using namespace capi;

namespace {

/// Random registry over a feature map plus a grown history of merge records.
struct History {
  FeatureMap features;
  RecursivePolicy policy;
  std::vector<std::vector<std::size_t>> live;  // registry indices per level
  std::vector<std::int64_t> current;           // policy index per level
};

FeatureMap random_features(std::size_t n_states, std::size_t n_actions, std::size_t d, std::uint64_t seed) {
  StreamRng rng(seed, 1);
  std::vector<double> phi(n_states * n_actions * d);
  for (auto& x : phi) x = 2.0 * rng.uniform() - 1.0;
  return FeatureMap(n_states, n_actions, d, std::move(phi), std::sqrt(static_cast<double>(d)), 1.0);
}

RegistryMask mask_of(const std::vector<std::size_t>& members, std::size_t bits) {
  RegistryMask m(bits);
  for (auto i : members) m.set(i);
  return m;
}

Eigen::MatrixXd inverse_of(const RecursivePolicy& policy, const RegistryMask& mask) {
  std::vector<Eigen::VectorXd> feats;
  for (std::size_t i = 0; i < policy.registry().size(); ++i) {
    if (mask.test(i)) feats.push_back(policy.registry()[i].feature);
  }
  if (feats.empty()) {
    const auto d = static_cast<Eigen::Index>(policy.dim());
    return (1.0 / policy.lambda()) * Eigen::MatrixXd::Identity(d, d);
  }
  return oracle::gram_inverse(feats, policy.lambda());
}

/// Direct transcription of the merge rule with freshly inverted Gram matrices.
ActionId reference(const RecursivePolicy& policy, const FeatureMap& features, std::int64_t record, StateId s) {
  if (record == kBasePolicy) return 0;
  const PolicyRecord& r = policy.records()[static_cast<std::size_t>(record)];
  auto covered = [&](const RegistryMask& mask) {
    const Eigen::MatrixXd inv = inverse_of(policy, mask);
    for (ActionId a = 0; a < features.n_actions(); ++a) {
      const Eigen::VectorXd phi = features(s, a);
      if (phi.dot(inv * phi) > 1.0 + 1e-12) return false;
    }
    return true;
  };
  if (covered(r.next_mask)) return reference(policy, features, r.parent_merge, s);
  const ActionId previous = reference(policy, features, r.parent_update, s);
  if (!covered(r.level_mask)) return previous;
  std::vector<double> q(features.n_actions());
  for (ActionId a = 0; a < features.n_actions(); ++a) q[a] = features(s, a).dot(r.theta);
  const ActionId greedy = argmax_lowest(q);
  return q[previous] + policy.omega() < q[greedy] - policy.omega() ? greedy : previous;
}

History grow_history(std::uint64_t seed, std::size_t records) {
  const std::size_t n_states = 400;
  const std::size_t n_actions = 3;
  const std::size_t d = 3;
  History h{random_features(n_states, n_actions, d, seed), RecursivePolicy(d, n_actions, 4, 0.05, 0.4), {}, {}};
  h.live.assign(4, {});
  h.current.assign(4, kBasePolicy);
  StreamRng rng(seed, 2);
  for (std::size_t i = 0; i < 12; ++i) {
    const StateId s = rng() % n_states;
    const ActionId a = rng() % n_actions;
    if (h.policy.find_registry(s, a)) continue;
    h.policy.add_registry_entry(s, a, h.features(s, a));
  }
  const std::size_t bits = h.policy.registry().size();
  for (std::size_t r = 0; r < records; ++r) {
    // Grow random levels, keeping every level's set append-only.
    for (std::size_t l = 0; l < 4; ++l) {
      if (rng.uniform() < 0.5) {
        const std::size_t idx = rng() % bits;
        if (std::find(h.live[l].begin(), h.live[l].end(), idx) == h.live[l].end()) h.live[l].push_back(idx);
      }
    }
    const std::size_t level = rng() % 3;
    Eigen::VectorXd theta(3);
    for (Eigen::Index k = 0; k < 3; ++k) theta[k] = 4.0 * rng.uniform() - 2.0;
    h.current[level + 1] = merge_policies(h.policy, h.current[level + 1], theta, level, h.current[level],
                                          mask_of(h.live[level], bits), mask_of(h.live[level + 1], bits));
  }
  return h;
}

}  // namespace

TEST_SUITE("qpi_planner") {
  TEST_CASE("registry masks") {
    RegistryMask m(70);
    m.set(0);
    m.set(5);
    m.set(69);
    CHECK(m.test(5));
    CHECK_FALSE(m.test(6));
    CHECK_FALSE(m.test(500));
    CHECK(m.count() == 3);
    const std::string hex = m.to_hex();
    CHECK(hex.size() == 18);
    CHECK(hex.back() == '1');
    CHECK(RegistryMask::from_hex(hex, 70) == m);
    CHECK(RegistryMask::from_hex("21", 8).test(0));
    CHECK(RegistryMask::from_hex("21", 8).test(5));
    CHECK_THROWS_AS(RegistryMask::from_hex("zz", 8), InvalidModel);
    CHECK_THROWS_AS(RegistryMask::from_hex("100", 8), InvalidModel);
    RegistryMask small(70);
    small.set(5);
    CHECK(small.is_subset_of(m));
    CHECK_FALSE(m.is_subset_of(small));
    m.reset(69);
    CHECK(m.count() == 2);
  }

  TEST_CASE("base policy plays the first action") {
    const FeatureMap features = random_features(20, 3, 3, 1);
    RecursivePolicy policy(3, 3, 4, 0.1, 0.5);
    for (StateId s = 0; s < 20; ++s) CHECK(evaluate_recursive(policy, s, features) == 0);
  }

  TEST_CASE("merge with an empty next cover is the confident update") {
    const FeatureMap hot = FeatureMap::one_hot(3, 2, 1.0);
    RecursivePolicy policy(6, 2, 3, 0.1, 0.01);
    RegistryMask level_mask;
    for (StateId s = 0; s < 3; ++s) {
      for (ActionId a = 0; a < 2; ++a) level_mask.set(policy.add_registry_entry(s, a, hot(s, a)));
    }
    Eigen::VectorXd theta(6);
    theta << 0.0, 1.0, 0.0, 0.15, 0.5, 0.0;
    const auto root = merge_policies(policy, kBasePolicy, theta, 0, kBasePolicy, level_mask, RegistryMask{});
    policy.set_root(root);
    LevelState full{level_mask, oracle::gram_inverse({hot(0, 0), hot(0, 1), hot(1, 0), hot(1, 1), hot(2, 0), hot(2, 1)}, 0.01)};
    LevelState empty{RegistryMask{}, 100.0 * Eigen::MatrixXd::Identity(6, 6)};
    const ReplayEvaluator eval(policy, {full, empty, empty});
    CHECK(eval.evaluate(root, 0, hot) == 1);  // gap 1 > 2 omega
    CHECK(eval.evaluate(root, 1, hot) == 0);  // gap 0.15 < 2 omega
    CHECK(eval.evaluate(root, 2, hot) == 0);  // greedy is already action 0
  }

  TEST_CASE("merge with a full next cover keeps the old policy") {
    const FeatureMap hot = FeatureMap::one_hot(2, 2, 1.0);
    RecursivePolicy policy(4, 2, 3, 0.1, 0.01);
    RegistryMask all;
    for (StateId s = 0; s < 2; ++s) {
      for (ActionId a = 0; a < 2; ++a) all.set(policy.add_registry_entry(s, a, hot(s, a)));
    }
    Eigen::VectorXd switch_all(4);
    switch_all << 0.0, 1.0, 0.0, 1.0;
    const auto first = merge_policies(policy, kBasePolicy, switch_all, 0, kBasePolicy, all, RegistryMask{});
    const auto second = merge_policies(policy, first, -switch_all, 0, kBasePolicy, all, all);
    const ReplayEvaluator eval(policy, std::vector<LevelState>(3, LevelState{all, oracle::gram_inverse({hot(0, 0), hot(0, 1), hot(1, 0), hot(1, 1)}, 0.01)}));
    for (StateId s = 0; s < 2; ++s) {
      CHECK(eval.evaluate(first, s, hot) == 1);
      CHECK(eval.evaluate(second, s, hot) == 1);
    }
  }

  TEST_CASE("replay matches the dense reference on random histories") {
    std::size_t switched = 0;
    std::size_t kept = 0;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const History h = grow_history(seed, 25);
      const std::size_t bits = h.policy.registry().size();
      std::vector<LevelState> frontier;
      for (const auto& members : h.live) {
        const RegistryMask m = mask_of(members, bits);
        frontier.push_back({m, inverse_of(h.policy, m)});
      }
      const ReplayEvaluator eval(h.policy, frontier);
      StreamRng rng(seed, 3);
      for (int probe = 0; probe < 2500; ++probe) {
        const StateId s = rng() % h.features.n_states();
        const auto record = static_cast<std::int64_t>(rng() % h.policy.records().size());
        const ActionId expected = reference(h.policy, h.features, record, s);
        REQUIRE(eval.evaluate(record, s, h.features) == expected);
        const ActionId base = reference(h.policy, h.features, h.policy.records()[record].parent_update, s);
        (expected == base ? kept : switched) += 1;
      }
    }
    CHECK(switched > 0);
    CHECK(kept > 0);
  }

  TEST_CASE("final-policy replay starts from the stored inverse") {
    History h = grow_history(9, 20);
    const std::size_t bits = h.policy.registry().size();
    RegistryMask all(bits);
    for (std::size_t i = 0; i < bits; ++i) all.set(i);
    h.policy.set_final_inverse(inverse_of(h.policy, all));
    h.policy.set_root(h.current[3]);
    const ReplayEvaluator eval(h.policy);
    for (StateId s = 0; s < h.features.n_states(); ++s) {
      REQUIRE(evaluate_recursive(h.policy, s, h.features) == reference(h.policy, h.features, h.policy.root(), s));
    }
    for (StateId s = 0; s < 20; ++s) eval.evaluate(h.policy.root(), s, h.features);
    CHECK(eval.downdates() > 0);
  }

  TEST_CASE("serialization round trip is byte-identical") {
    History h = grow_history(3, 15);
    const std::size_t bits = h.policy.registry().size();
    RegistryMask all(bits);
    for (std::size_t i = 0; i < bits; ++i) all.set(i);
    h.policy.set_final_inverse(inverse_of(h.policy, all));
    h.policy.set_root(h.current[3]);
    const std::string text = h.policy.to_json().dump();
    const RecursivePolicy back = RecursivePolicy::from_json(nlohmann::json::parse(text));
    CHECK(back.to_json().dump() == text);
    for (StateId s = 0; s < h.features.n_states(); ++s) {
      CHECK(evaluate_recursive(back, s, h.features) == evaluate_recursive(h.policy, s, h.features));
    }
    auto broken = nlohmann::json::parse(text);
    broken["records"][0]["parent_update"] = 5;
    CHECK_THROWS_AS(RecursivePolicy::from_json(broken), InvalidModel);
    broken = nlohmann::json::parse(text);
    broken["format"] = "other";
    CHECK_THROWS_AS(RecursivePolicy::from_json(broken), InvalidModel);
  }

  TEST_CASE("record validation") {
    RecursivePolicy policy(2, 2, 3, 0.1, 0.5);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(merge_policies(policy, 0, theta, 0, kBasePolicy, {}, {}), InvalidModel);
    CHECK_THROWS_AS(merge_policies(policy, kBasePolicy, theta, 2, kBasePolicy, {}, {}), InvalidModel);
    CHECK_THROWS_AS(merge_policies(policy, kBasePolicy, Eigen::VectorXd::Zero(3), 0, kBasePolicy, {}, {}), LengthMismatch);
    CHECK_THROWS_AS(merge_policies(policy, kBasePolicy, theta, 0, kBasePolicy, RegistryMask(4), {}), InvalidModel);
    CHECK_THROWS_AS(policy.set_root(3), InvalidModel);
    CHECK_THROWS_AS(RecursivePolicy(2, 2, 1, 0.1, 0.5), InvalidParams);
  }

  TEST_CASE("replay rejects a frontier older than the record") {
    const FeatureMap hot = FeatureMap::one_hot(2, 1, 1.0);
    RecursivePolicy policy(2, 1, 2, 0.1, 0.5);
    RegistryMask m;
    m.set(policy.add_registry_entry(0, 0, hot(0, 0)));
    const auto r = merge_policies(policy, kBasePolicy, Eigen::VectorXd::Zero(2), 0, kBasePolicy, m, {});
    const LevelState empty{RegistryMask{}, 2.0 * Eigen::MatrixXd::Identity(2, 2)};
    const ReplayEvaluator eval(policy, {empty, empty});
    CHECK_THROWS_AS(eval.evaluate(r, 0, hot), InvalidModel);
    CHECK_THROWS_AS(ReplayEvaluator(policy, {empty}), LengthMismatch);
  }
}
