#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <string>

#include "contopt/config.hpp"

using namespace contopt;
using nlohmann::json;

namespace {

const std::filesystem::path kPresets = CONTOPT_PRESET_DIR;

std::string error_of(const json& doc) {
  try {
    config_from_json(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

json without_name(json j) {
  j.erase("name");
  return j;
}

}  // namespace

TEST_CASE("round trip is the identity") {
  for (const RunConfig& cfg :
       {bridge_config(Formulation::Penalty, false), bridge_config(Formulation::Alm, true),
        cantilever_config(Formulation::Alm, true), cantilever_config(Formulation::Penalty, false, false),
        patch_config(Formulation::Alm, true), flat_volume_config()}) {
    const json a = config_to_json(cfg);
    const json b = config_to_json(config_from_json(a));
    CHECK(a == b);
    CHECK(config_to_json(config_from_json(json::parse(a.dump()))) == a);
  }
}

TEST_CASE("missing keys take defaults") {
  const RunConfig c = config_from_json(json{{"spec_version", 1}});
  CHECK(config_to_json(c) == config_to_json(RunConfig{}));
}

TEST_CASE("errors carry the JSON pointer") {
  json doc = config_to_json(bridge_config(Formulation::Penalty, false));
  json bad = doc;
  bad["contact"]["rho"] = "big";
  CHECK(error_of(bad) == "/contact/rho: expected a number");
  bad = doc;
  bad["contact"]["colour"] = 1;
  CHECK(error_of(bad).rfind("/contact/colour", 0) == 0);
  bad = doc;
  bad["extra"] = true;
  CHECK(error_of(bad).rfind("/extra", 0) == 0);
  bad = doc;
  bad["loop"]["max_iter"] = 2.5;
  CHECK(error_of(bad) == "/loop/max_iter: expected an integer");
  bad = doc;
  bad["spec_version"] = 2;
  CHECK(error_of(bad).rfind("/spec_version", 0) == 0);
  bad = doc;
  bad.erase("spec_version");
  CHECK_FALSE(error_of(bad).empty());
  bad = doc;
  bad["contact"]["formulation"] = "lagrange";
  CHECK(error_of(bad).rfind("/contact/formulation", 0) == 0);
  CHECK_FALSE(error_of(json::array()).empty());
  CHECK_THROWS_AS(load_config(kPresets / "does_not_exist.json"), ConfigError);
}

TEST_CASE("presets match their builders") {
  struct Entry {
    const char* file;
    RunConfig cfg;
  };
  const Entry entries[] = {
      {"bridge2d_penalty_sliding", bridge_config(Formulation::Penalty, false)},
      {"bridge2d_penalty_friction", bridge_config(Formulation::Penalty, true)},
      {"bridge2d_alm_sliding", bridge_config(Formulation::Alm, false)},
      {"bridge2d_alm_friction", bridge_config(Formulation::Alm, true)},
      {"bridge2d_penalty", bridge_config(Formulation::Penalty, false)},
      {"bridge2d_alm", bridge_config(Formulation::Alm, false)},
      {"cantilever2d_penalty_sliding", cantilever_config(Formulation::Penalty, false)},
      {"cantilever2d_penalty_friction", cantilever_config(Formulation::Penalty, true)},
      {"cantilever2d_alm_sliding", cantilever_config(Formulation::Alm, false)},
      {"cantilever2d_alm_friction", cantilever_config(Formulation::Alm, true)},
      {"cantilever2d_penalty", cantilever_config(Formulation::Penalty, false)},
      {"cantilever2d_alm", cantilever_config(Formulation::Alm, false)},
      {"cantilever2d_nocontact", cantilever_config(Formulation::Penalty, false, false)},
      {"patch_uniaxial_penalty", patch_config(Formulation::Penalty)},
      {"patch_uniaxial_alm", patch_config(Formulation::Alm)},
      {"patch_inactive", patch_config(Formulation::Penalty, true)},
      {"gradcheck_volume_flat", flat_volume_config()},
  };
  for (const auto& e : entries) {
    CAPTURE(e.file);
    const RunConfig loaded = load_config(kPresets / (std::string(e.file) + ".json"));
    CHECK(without_name(config_to_json(loaded)) == without_name(config_to_json(e.cfg)));
  }
}

TEST_CASE("benchmark parameters in the presets") {
  const RunConfig b = load_config(kPresets / "bridge2d_penalty.json");
  CHECK(b.cost.alpha1 == 25.0);
  CHECK(b.cost.alpha2 == 0.01);
  CHECK(b.params.rho == 1e8);
  CHECK(b.params.s == 1e-2);
  CHECK(b.params.friction == 0.2);
  const RunConfig c = load_config(kPresets / "cantilever2d_alm.json");
  CHECK(c.params.gamma1 == 100.0);
  CHECK(c.params.gamma2 == 100.0);
  CHECK(c.cost.alpha1 == 15.0);
  const auto* disk = std::get_if<Disk>(&c.body.shape());
  REQUIRE(disk);
  CHECK(disk->radius == 8.0);
  CHECK(disk->center.x == 1.0);
  CHECK(disk->center.y == -8.0);
}

TEST_CASE("save and load") {
  const auto path = std::filesystem::temp_directory_path() / "contopt_test_config.json";
  const RunConfig cfg = cantilever_config(Formulation::Alm, true);
  save_config(cfg, path);
  CHECK(config_to_json(load_config(path)) == config_to_json(cfg));
  std::filesystem::remove(path);
}
