#include "capi/mdp_io.hpp"

#include "capi/errors.hpp"

#include <fstream>

namespace capi {

using nlohmann::json;

json to_json(const MdpInstance& instance) {
  const TabularMdp& mdp = *instance.mdp;
  const std::size_t ns = mdp.n_states();
  const std::size_t na = mdp.n_actions();

  json transition = json::array();
  json rewards = json::array();
  for (StateId s = 0; s < ns; ++s) {
    json t_rows = json::array();
    json r_row = json::array();
    for (ActionId a = 0; a < na; ++a) {
      const auto row = mdp.transition_row(s, a);
      t_rows.push_back(json(std::vector<double>(row.begin(), row.end())));
      const RewardSpec& r = mdp.reward(s, a);
      r_row.push_back({{"kind", r.kind == RewardKind::kDeterministic ? "det" : "bern"},
                       {"value", r.value}});
    }
    transition.push_back(std::move(t_rows));
    rewards.push_back(std::move(r_row));
  }

  json out = {{"n_states", ns},
              {"n_actions", na},
              {"gamma", mdp.gamma()},
              {"initial_state", mdp.initial_state()},
              {"transition", std::move(transition)},
              {"rewards", std::move(rewards)}};

  if (instance.features) {
    const FeatureMap& phi = *instance.features;
    json table = json::array();
    for (StateId s = 0; s < ns; ++s) {
      json per_action = json::array();
      for (ActionId a = 0; a < na; ++a) {
        const auto v = phi(s, a);
        per_action.push_back(json(std::vector<double>(v.data(), v.data() + v.size())));
      }
      table.push_back(std::move(per_action));
    }
    out["features"] = {{"d", phi.dim()},
                       {"L", phi.feature_bound()},
                       {"B", phi.param_bound()},
                       {"phi", std::move(table)}};
  }
  if (!instance.meta.empty()) out["meta"] = instance.meta;
  return out;
}

namespace {

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw InvalidModel(std::string("missing key '") + key + "'");
  return j.at(key).get<T>();
}

const json& sized_array(const json& j, std::size_t size, const char* what) {
  if (!j.is_array() || j.size() != size) {
    throw InvalidModel(std::string(what) + " has wrong shape");
  }
  return j;
}

}  // namespace

MdpInstance instance_from_json(const json& j) {
  try {
    const auto ns = required<std::size_t>(j, "n_states");
    const auto na = required<std::size_t>(j, "n_actions");
    const auto gamma = required<double>(j, "gamma");
    const auto s0 = required<std::size_t>(j, "initial_state");

    std::vector<double> transition;
    transition.reserve(ns * na * ns);
    const json& t = sized_array(j.at("transition"), ns, "transition");
    for (const json& per_state : t) {
      for (const json& row : sized_array(per_state, na, "transition")) {
        for (const json& p : sized_array(row, ns, "transition")) transition.push_back(p.get<double>());
      }
    }

    std::vector<RewardSpec> rewards;
    rewards.reserve(ns * na);
    for (const json& per_state : sized_array(j.at("rewards"), ns, "rewards")) {
      for (const json& r : sized_array(per_state, na, "rewards")) {
        const auto kind = required<std::string>(r, "kind");
        const auto value = required<double>(r, "value");
        if (kind == "det") {
          rewards.push_back(RewardSpec::deterministic(value));
        } else if (kind == "bern") {
          rewards.push_back(RewardSpec::bernoulli(value));
        } else {
          throw InvalidModel("unknown reward kind '" + kind + "'");
        }
      }
    }

    MdpInstance instance;
    instance.mdp = std::make_shared<const TabularMdp>(ns, na, gamma, s0, std::move(transition),
                                                      std::move(rewards));

    if (j.contains("features")) {
      const json& f = j.at("features");
      const auto d = required<std::size_t>(f, "d");
      std::vector<double> phi;
      phi.reserve(ns * na * d);
      for (const json& per_state : sized_array(f.at("phi"), ns, "phi")) {
        for (const json& vec : sized_array(per_state, na, "phi")) {
          for (const json& x : sized_array(vec, d, "phi")) phi.push_back(x.get<double>());
        }
      }
      instance.features.emplace(ns, na, d, std::move(phi), required<double>(f, "L"),
                                required<double>(f, "B"));
    }
    if (j.contains("meta")) instance.meta = j.at("meta");
    return instance;
  } catch (const json::exception& e) {
    throw InvalidModel(std::string("malformed MDP JSON: ") + e.what());
  }
}

MdpInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidModel("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidModel("cannot parse " + path.string() + ": " + e.what());
  }
  return instance_from_json(j);
}

void save_instance(const MdpInstance& instance, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json(instance).dump() << '\n';
}

}  // namespace capi
