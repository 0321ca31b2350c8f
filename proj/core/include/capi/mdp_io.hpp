#pragma once

#include "capi/mdp.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <optional>

namespace capi {

/// An MDP together with its (optional) feature map and free-form metadata.
///
/// JSON layout:
///   {"n_states", "n_actions", "gamma", "initial_state",
///    "transition": [[[p...]...]...],
///    "rewards": [[{"kind": "det"|"bern", "value": x}...]...],
///    "features": {"d", "L", "B", "phi": [[[x...]...]...]},
///    "meta": {...}}
/// "features" and "meta" are optional. Loading re-validates every invariant.
struct MdpInstance {
  std::shared_ptr<const TabularMdp> mdp;
  std::optional<FeatureMap> features;
  nlohmann::json meta = nlohmann::json::object();
};

nlohmann::json to_json(const MdpInstance& instance);
MdpInstance instance_from_json(const nlohmann::json& j);

MdpInstance load_instance(const std::filesystem::path& path);
void save_instance(const MdpInstance& instance, const std::filesystem::path& path);

}  // namespace capi
