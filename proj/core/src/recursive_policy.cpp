#include "capi/recursive_policy.hpp"

#include "capi/errors.hpp"

#include <bit>
#include <string>

namespace capi {

using nlohmann::json;

void RegistryMask::set(std::size_t i) {
  if (i >= bits_) {
    bits_ = i + 1;
    words_.resize((bits_ + 63) / 64, 0);
  }
  words_[i / 64] |= std::uint64_t{1} << (i % 64);
}

std::size_t RegistryMask::count() const noexcept {
  std::size_t total = 0;
  for (auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

bool RegistryMask::is_subset_of(const RegistryMask& other) const noexcept {
  for (std::size_t w = 0; w < words_.size(); ++w) {
    const std::uint64_t theirs = w < other.words_.size() ? other.words_[w] : 0;
    if ((words_[w] & ~theirs) != 0) return false;
  }
  return true;
}

bool RegistryMask::operator==(const RegistryMask& other) const noexcept {
  return is_subset_of(other) && other.is_subset_of(*this);
}

std::string RegistryMask::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  const std::size_t digits = std::max<std::size_t>(1, (bits_ + 3) / 4);
  std::string out(digits, '0');
  for (std::size_t k = 0; k < digits; ++k) {
    unsigned nibble = 0;
    for (unsigned b = 0; b < 4; ++b) nibble |= (test(4 * k + b) ? 1U : 0U) << b;
    out[digits - 1 - k] = kDigits[nibble];
  }
  return out;
}

RegistryMask RegistryMask::from_hex(std::string_view hex, std::size_t bits) {
  RegistryMask mask(bits);
  const std::size_t digits = hex.size();
  for (std::size_t k = 0; k < digits; ++k) {
    const char c = hex[digits - 1 - k];
    unsigned nibble = 0;
    if (c >= '0' && c <= '9') {
      nibble = static_cast<unsigned>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      nibble = static_cast<unsigned>(c - 'a' + 10);
    } else if (c >= 'A' && c <= 'F') {
      nibble = static_cast<unsigned>(c - 'A' + 10);
    } else {
      throw InvalidModel("bad hex digit in registry mask");
    }
    for (unsigned b = 0; b < 4; ++b) {
      if ((nibble >> b) & 1U) {
        if (4 * k + b >= bits) throw InvalidModel("registry mask wider than the registry");
        mask.set(4 * k + b);
      }
    }
  }
  return mask;
}

RecursivePolicy::RecursivePolicy(std::size_t dim, std::size_t n_actions, std::size_t levels,
                                 double omega, double lambda)
    : dim_(dim), n_actions_(n_actions), levels_(levels), omega_(omega), lambda_(lambda) {
  if (dim_ == 0 || n_actions_ == 0 || levels_ < 2) {
    throw InvalidParams("recursive policy needs positive dimension, actions and >= 2 levels");
  }
  const auto d = static_cast<Eigen::Index>(dim_);
  final_inverse_ = (1.0 / lambda_) * Eigen::MatrixXd::Identity(d, d);
}

std::size_t RecursivePolicy::add_registry_entry(StateId s, ActionId a, Eigen::VectorXd feature) {
  if (static_cast<std::size_t>(feature.size()) != dim_) {
    throw LengthMismatch("registry feature has wrong dimension");
  }
  if (find_registry(s, a)) throw InvalidParams("registry already holds this pair");
  registry_.push_back({s, a, std::move(feature)});
  return registry_.size() - 1;
}

std::optional<std::size_t> RecursivePolicy::find_registry(StateId s, ActionId a) const {
  for (std::size_t i = 0; i < registry_.size(); ++i) {
    if (registry_[i].state == s && registry_[i].action == a) return i;
  }
  return std::nullopt;
}

std::int64_t RecursivePolicy::append_record(PolicyRecord record) {
  const auto index = static_cast<std::int64_t>(records_.size());
  if (record.parent_update >= index || record.parent_merge >= index ||
      record.parent_update < kBasePolicy || record.parent_merge < kBasePolicy) {
    throw InvalidModel("record parents must precede the record");
  }
  if (record.level + 1 >= levels_) throw InvalidModel("record level out of range");
  if (static_cast<std::size_t>(record.theta.size()) != dim_) {
    throw LengthMismatch("record theta has wrong dimension");
  }
  if (record.level_mask.size() > registry_.size() || record.next_mask.size() > registry_.size()) {
    throw InvalidModel("record mask exceeds the registry");
  }
  records_.push_back(std::move(record));
  return index;
}

void RecursivePolicy::set_root(std::int64_t index) {
  if (index < kBasePolicy || index >= static_cast<std::int64_t>(records_.size())) {
    throw InvalidModel("root index out of range");
  }
  root_ = index;
}

void RecursivePolicy::set_final_inverse(Eigen::MatrixXd v_inverse) {
  const auto d = static_cast<Eigen::Index>(dim_);
  if (v_inverse.rows() != d || v_inverse.cols() != d) throw LengthMismatch("inverse has wrong shape");
  final_inverse_ = std::move(v_inverse);
}

json RecursivePolicy::to_json() const {
  json registry = json::array();
  for (const auto& entry : registry_) {
    registry.push_back({{"state", entry.state},
                        {"action", entry.action},
                        {"phi", std::vector<double>(entry.feature.data(),
                                                    entry.feature.data() + entry.feature.size())}});
  }
  json records = json::array();
  for (const auto& r : records_) {
    records.push_back({{"theta", std::vector<double>(r.theta.data(), r.theta.data() + r.theta.size())},
                       {"level", r.level},
                       {"parent_update", r.parent_update},
                       {"parent_merge", r.parent_merge},
                       {"mask_level", r.level_mask.to_hex()},
                       {"mask_next", r.next_mask.to_hex()}});
  }
  std::vector<double> inverse;
  inverse.reserve(dim_ * dim_);
  for (Eigen::Index i = 0; i < final_inverse_.rows(); ++i) {
    for (Eigen::Index k = 0; k < final_inverse_.cols(); ++k) inverse.push_back(final_inverse_(i, k));
  }
  return {{"format", "capi-recursive-policy/1"},
          {"dim", dim_},
          {"n_actions", n_actions_},
          {"levels", levels_},
          {"omega", omega_},
          {"lambda", lambda_},
          {"root", root_},
          {"registry", std::move(registry)},
          {"records", std::move(records)},
          {"final_inverse", std::move(inverse)}};
}

RecursivePolicy RecursivePolicy::from_json(const json& j) {
  try {
    if (j.value("format", std::string{}) != "capi-recursive-policy/1") {
      throw InvalidModel("unknown recursive policy format");
    }
    RecursivePolicy policy(j.at("dim").get<std::size_t>(), j.at("n_actions").get<std::size_t>(),
                           j.at("levels").get<std::size_t>(), j.at("omega").get<double>(),
                           j.at("lambda").get<double>());
    const auto d = static_cast<Eigen::Index>(policy.dim_);
    for (const json& e : j.at("registry")) {
      const auto phi = e.at("phi").get<std::vector<double>>();
      if (phi.size() != policy.dim_) throw LengthMismatch("registry feature has wrong dimension");
      policy.add_registry_entry(e.at("state").get<StateId>(), e.at("action").get<ActionId>(),
                                Eigen::Map<const Eigen::VectorXd>(phi.data(), d));
    }
    const std::size_t bits = policy.registry_.size();
    for (const json& r : j.at("records")) {
      const auto theta = r.at("theta").get<std::vector<double>>();
      if (theta.size() != policy.dim_) throw LengthMismatch("record theta has wrong dimension");
      PolicyRecord record;
      record.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), d);
      record.level = r.at("level").get<std::size_t>();
      record.parent_update = r.at("parent_update").get<std::int64_t>();
      record.parent_merge = r.at("parent_merge").get<std::int64_t>();
      record.level_mask = RegistryMask::from_hex(r.at("mask_level").get<std::string>(), bits);
      record.next_mask = RegistryMask::from_hex(r.at("mask_next").get<std::string>(), bits);
      policy.append_record(std::move(record));
    }
    const auto inverse = j.at("final_inverse").get<std::vector<double>>();
    if (inverse.size() != policy.dim_ * policy.dim_) throw LengthMismatch("final inverse has wrong size");
    Eigen::MatrixXd m(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) m(i, k) = inverse[static_cast<std::size_t>(i * d + k)];
    }
    policy.set_final_inverse(std::move(m));
    policy.set_root(j.at("root").get<std::int64_t>());
    return policy;
  } catch (const json::exception& e) {
    throw InvalidModel(std::string("malformed recursive policy JSON: ") + e.what());
  }
}

std::int64_t merge_policies(RecursivePolicy& policy, std::int64_t parent_merge,
                            Eigen::VectorXd theta, std::size_t level, std::int64_t parent_update,
                            RegistryMask level_mask, RegistryMask next_mask) {
  PolicyRecord record;
  record.theta = std::move(theta);
  record.level = level;
  record.parent_update = parent_update;
  record.parent_merge = parent_merge;
  record.level_mask = std::move(level_mask);
  record.next_mask = std::move(next_mask);
  return policy.append_record(std::move(record));
}

ReplayEvaluator::ReplayEvaluator(const RecursivePolicy& policy) : policy_(&policy) {
  RegistryMask all(policy.registry().size());
  for (std::size_t i = 0; i < policy.registry().size(); ++i) all.set(i);
  frontier_.assign(policy.levels(), LevelState{all, policy.final_inverse()});
}

ReplayEvaluator::ReplayEvaluator(const RecursivePolicy& policy, std::vector<LevelState> frontier)
    : policy_(&policy), frontier_(std::move(frontier)) {
  if (frontier_.size() != policy.levels()) throw LengthMismatch("frontier needs one entry per level");
}

namespace {

struct ScratchLevel {
  RegistryMask members;
  std::optional<CoreSet> core;
};

struct PendingDecision {
  std::vector<double> q_hat;
  ActionId greedy;
};

}  // namespace

ActionId ReplayEvaluator::evaluate(std::int64_t record, StateId s, const FeatureMap& features) const {
  const RecursivePolicy& policy = *policy_;
  if (record < kBasePolicy || record >= static_cast<std::int64_t>(policy.records().size())) {
    throw InvalidParams("record index out of range");
  }
  const auto& registry = policy.registry();
  std::vector<ScratchLevel> scratch(policy.levels());

  auto sync = [&](std::size_t level, const RegistryMask& target) -> const CoreSet& {
    ScratchLevel& slot = scratch[level];
    if (!slot.core) {
      const LevelState& start = frontier_[level];
      std::vector<CorePair> pairs;
      std::vector<Eigen::VectorXd> feats;
      for (std::size_t i = 0; i < registry.size(); ++i) {
        if (start.members.test(i)) {
          pairs.push_back({registry[i].state, registry[i].action});
          feats.push_back(registry[i].feature);
        }
      }
      slot.members = start.members;
      slot.core = CoreSet::from_snapshot(policy.dim(), policy.lambda(), std::move(pairs),
                                         std::move(feats), start.v_inverse);
      slot.core->set_verify_each_update(verify_inverses_);
    }
    if (!target.is_subset_of(slot.members)) {
      throw InvalidModel("record core set is not contained in the replay frontier");
    }
    for (std::size_t i = 0; i < registry.size(); ++i) {
      if (slot.members.test(i) && !target.test(i)) {
        slot.core->remove(registry[i].state, registry[i].action);
        slot.members.reset(i);
        ++downdates_;
      }
    }
    return *slot.core;
  };

  std::vector<PendingDecision> pending;
  std::int64_t current = record;
  while (current != kBasePolicy) {
    const PolicyRecord& rec = policy.records()[static_cast<std::size_t>(current)];
    const CoreSet& level_core = sync(rec.level, rec.level_mask);
    const CoreSet& next_core = sync(rec.level + 1, rec.next_mask);
    if (next_core.in_cover(s, features)) {
      current = rec.parent_merge;
      continue;
    }
    if (!level_core.in_cover(s, features)) {
      current = rec.parent_update;
      continue;
    }
    PendingDecision decision;
    decision.q_hat.resize(policy.n_actions());
    for (ActionId a = 0; a < policy.n_actions(); ++a) decision.q_hat[a] = features(s, a).dot(rec.theta);
    decision.greedy = argmax_lowest(decision.q_hat);
    pending.push_back(std::move(decision));
    current = rec.parent_update;
  }

  const double omega = policy.omega();
  ActionId action = 0;  // base policy plays the first action everywhere
  for (auto it = pending.rbegin(); it != pending.rend(); ++it) {
    if (it->q_hat[action] + omega < it->q_hat[it->greedy] - omega) action = it->greedy;
  }
  return action;
}

ActionId evaluate_recursive(const RecursivePolicy& policy, StateId s, const FeatureMap& features) {
  return ReplayEvaluator(policy).evaluate(policy.root(), s, features);
}

}  // namespace capi
