#include "oracles.hpp"

#include <capi/errors.hpp>
#include <capi/mdp_io.hpp>
#include <capi/random_mdp.hpp>

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace capi;
using nlohmann::json;

TEST_SUITE("mdp_core") {
  TEST_CASE("JSON round trip is exact") {
    MdpInstance inst;
    inst.mdp = std::make_shared<const TabularMdp>(random_mdp(4, 3, 0.85, 5, {0.5, true}));
    inst.features = FeatureMap::one_hot(4, 3, 2.0);
    inst.meta = {{"note", "x"}};
    const json j = to_json(inst);
    const MdpInstance back = instance_from_json(j);
    CHECK(*back.mdp == *inst.mdp);
    REQUIRE(back.features);
    CHECK(back.features->raw() == inst.features->raw());
    CHECK(back.features->param_bound() == 2.0);
    CHECK(back.meta == inst.meta);
    CHECK(to_json(back).dump() == j.dump());

    const auto path = std::filesystem::temp_directory_path() / "capi_io_roundtrip.json";
    save_instance(inst, path);
    CHECK(to_json(load_instance(path)).dump() == j.dump());
    std::filesystem::remove(path);
  }

  TEST_CASE("loader re-validates") {
    json j = to_json(MdpInstance{oracle::chain_mdp(1, 0.5, 1.0, 0.0), {}, json::object()});
    CHECK_NOTHROW(instance_from_json(j));
    json bad = j;
    bad["transition"][0][0][1] = 0.5;
    CHECK_THROWS_AS(instance_from_json(bad), InvalidModel);
    bad = j;
    bad["rewards"][0][0]["kind"] = "gauss";
    CHECK_THROWS_AS(instance_from_json(bad), InvalidModel);
    bad = j;
    bad.erase("gamma");
    CHECK_THROWS_AS(instance_from_json(bad), InvalidModel);
    bad = j;
    bad["features"] = {{"d", 1}, {"L", 0.5}, {"B", 1.0}, {"phi", {{{1.0}}, {{1.0}}}}};
    CHECK_THROWS_AS(instance_from_json(bad), InvalidModel);
    CHECK_THROWS_AS(load_instance("/nonexistent/instance.json"), InvalidModel);
  }

  TEST_CASE("bundled instances") {
    const MdpInstance one = oracle::load_data("one_state.json");
    CHECK(one.mdp->n_states() == 1);
    CHECK(one.mdp->gamma() == 0.9);

    const MdpInstance five = oracle::load_data("five_state.json");
    CHECK(*five.mdp == random_mdp(5, 2, 0.75, 31, {0.4, false}));
    REQUIRE(five.features);
    CHECK(five.features->raw() == FeatureMap::one_hot(5, 2, 1.0).raw());
    CHECK(five.features->param_bound() == doctest::Approx(std::sqrt(10.0) / 0.25));

    const MdpInstance six = oracle::load_data("six_state.json");
    CHECK(*six.mdp == random_mdp(6, 2, 0.75, 606));
  }
}
