#pragma once

#include "capi/core_set.hpp"
#include "capi/mdp.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace capi {

/// Fixed-width bit set over registry indices; bits beyond size() read as 0.
class RegistryMask {
 public:
  RegistryMask() = default;
  explicit RegistryMask(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

  std::size_t size() const noexcept { return bits_; }
  void set(std::size_t i);
  void reset(std::size_t i) noexcept {
    if (i < bits_) words_[i / 64] &= ~(std::uint64_t{1} << (i % 64));
  }
  bool test(std::size_t i) const noexcept {
    return i < bits_ && ((words_[i / 64] >> (i % 64)) & 1U) != 0;
  }
  std::size_t count() const noexcept;
  bool is_subset_of(const RegistryMask& other) const noexcept;

  /// Big-endian hex of the integer sum_i bit_i 2^i, ceil(size/4) digits.
  std::string to_hex() const;
  static RegistryMask from_hex(std::string_view hex, std::size_t bits);

  bool operator==(const RegistryMask& other) const noexcept;

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

inline constexpr std::int64_t kBasePolicy = -1;

/// One merge step: the policy that plays the record's decision rule.
///
/// For a state s, with C_l and C_{l+1} the core sets encoded by the masks:
///   s in Cover(C_{l+1})       -> defer to parent_merge
///   s not in Cover(C_l)       -> defer to parent_update
///   otherwise                 -> confident update of parent_update's action
///                                against q_hat(s, .) = <phi(s, .), theta>
struct PolicyRecord {
  Eigen::VectorXd theta;
  std::size_t level = 0;
  std::int64_t parent_update = kBasePolicy;
  std::int64_t parent_merge = kBasePolicy;
  RegistryMask level_mask;
  RegistryMask next_mask;
};

struct RegistryEntry {
  StateId state;
  ActionId action;
  Eigen::VectorXd feature;
};

/// Chained policy built by the planner: registry W of all core pairs with
/// their features, the list of merge records, and the final V(C_H)^{-1}.
class RecursivePolicy {
 public:
  RecursivePolicy(std::size_t dim, std::size_t n_actions, std::size_t levels, double omega,
                  double lambda);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t n_actions() const noexcept { return n_actions_; }
  /// Number of levels H + 1.
  std::size_t levels() const noexcept { return levels_; }
  double omega() const noexcept { return omega_; }
  double lambda() const noexcept { return lambda_; }

  std::size_t add_registry_entry(StateId s, ActionId a, Eigen::VectorXd feature);
  std::optional<std::size_t> find_registry(StateId s, ActionId a) const;
  const std::vector<RegistryEntry>& registry() const noexcept { return registry_; }

  std::int64_t append_record(PolicyRecord record);
  const std::vector<PolicyRecord>& records() const noexcept { return records_; }

  std::int64_t root() const noexcept { return root_; }
  void set_root(std::int64_t index);

  const Eigen::MatrixXd& final_inverse() const noexcept { return final_inverse_; }
  void set_final_inverse(Eigen::MatrixXd v_inverse);

  nlohmann::json to_json() const;
  static RecursivePolicy from_json(const nlohmann::json& j);

 private:
  std::size_t dim_;
  std::size_t n_actions_;
  std::size_t levels_;
  double omega_;
  double lambda_;
  std::vector<RegistryEntry> registry_;
  std::vector<PolicyRecord> records_;
  std::int64_t root_ = kBasePolicy;
  Eigen::MatrixXd final_inverse_;
};

/// Appends the record merging pi' (theta, level, parent_update, level mask)
/// into the next level's policy (parent_merge, next mask).
std::int64_t merge_policies(RecursivePolicy& policy, std::int64_t parent_merge,
                            Eigen::VectorXd theta, std::size_t level, std::int64_t parent_update,
                            RegistryMask level_mask, RegistryMask next_mask);

/// Core-set state a replay starts from for one level.
struct LevelState {
  RegistryMask members;
  Eigen::MatrixXd v_inverse;
};

/// Evaluates records by replaying core-set history backwards.
///
/// Scratch copies of the per-level core sets start at `frontier` and are
/// shrunk by rank-one downdates to the masks stored in each visited record;
/// records are visited in decreasing index order, so only removals occur.
/// The frontier must be at least as late as every record evaluated.
class ReplayEvaluator {
 public:
  /// Final-policy evaluator: every level starts from the whole registry and
  /// the stored final inverse.
  explicit ReplayEvaluator(const RecursivePolicy& policy);
  ReplayEvaluator(const RecursivePolicy& policy, std::vector<LevelState> frontier);

  ActionId evaluate(std::int64_t record, StateId s, const FeatureMap& features) const;

  /// Check every scratch downdate against a direct inverse.
  void set_verify_inverses(bool on) noexcept { verify_inverses_ = on; }
  std::size_t downdates() const noexcept { return downdates_.load(); }

 private:
  const RecursivePolicy* policy_;
  std::vector<LevelState> frontier_;
  bool verify_inverses_ = false;
  mutable std::atomic<std::size_t> downdates_{0};
};

/// Action of the policy's root record at s.
ActionId evaluate_recursive(const RecursivePolicy& policy, StateId s, const FeatureMap& features);

}  // namespace capi
