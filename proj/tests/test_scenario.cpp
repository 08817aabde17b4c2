#include "leofl/scenario.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "leofl/errors.hpp"
#include "leofl/orbital.hpp"

using namespace leofl;
using nlohmann::json;

namespace {

const std::string kScenarioDir = LEOFL_SCENARIO_DIR;

json minimal_synthetic() {
  return json::parse(R"({
    "constellation": [
      {"name": "a", "total_sats": 2, "planes": 2, "phasing": 1,
       "inclination_deg": 80.0, "altitude_km": 500.0, "raan_offset_deg": 0.0},
      {"name": "b", "total_sats": 2, "planes": 2, "phasing": 1,
       "inclination_deg": 80.0, "altitude_km": 2000.0, "raan_offset_deg": 36.0}
    ],
    "ground_station": {"latitude_deg": 53.07, "longitude_deg": 8.80,
                       "altitude_km": 0.0, "min_elevation_deg": 10.0},
    "data": {"source": "synthetic",
             "synthetic": {"classes": 4, "per_class": 40, "test_per_class": 10,
                           "dim": 8, "separation": 3.0},
             "partition": {"mode": "class_split",
                           "class_assignment": {"a": [0, 1], "b": [2, 3]}}},
    "training": {"learning_rate": 0.1, "prox_weight": 0.0, "batch_size": 10,
                 "local_epochs": 1},
    "strategy": {"name": "fedsat"},
    "simulation": {"horizon_s": 7200.0, "seed": 5, "output": "m.csv"}
  })");
}

}  // namespace

TEST_CASE("scenario round-trips through JSON") {
  const auto c1 = cfg::parse_scenario(minimal_synthetic());
  const json j1 = cfg::scenario_to_json(c1);
  const auto c2 = cfg::parse_scenario(j1);
  const json j2 = cfg::scenario_to_json(c2);
  CHECK(j1 == j2);
}

TEST_CASE("bundled scenarios parse, validate and round-trip") {
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kScenarioDir)) {
    if (entry.path().extension() != ".json") continue;
    ++seen;
    const auto c = cfg::load_scenario(entry.path().string());
    if (c.data.source == "idx") {
      // Data files may be absent in a bare checkout; structural checks only.
      CHECK((c.strategy == "fedavg" || c.strategy == "fedasync" ||
             c.strategy == "fedsat"));
      CHECK(c.training.learning_rate == 0.1);
      CHECK(c.training.batch_size == 10);
      CHECK(c.simulation.horizon_s == 172800.0);
    } else {
      cfg::validate(c);
    }
    const json j1 = cfg::scenario_to_json(c);
    CHECK(j1 == cfg::scenario_to_json(cfg::parse_scenario(j1)));
  }
  CHECK(seen >= 13);  // both stations x both partitions x three strategies + extras
}

TEST_CASE("degrees convert to radians exactly once at the boundary") {
  const auto prep = cfg::prepare(cfg::parse_scenario(minimal_synthetic()));
  REQUIRE(prep.setup.satellites.size() == 4);
  for (const auto& sat : prep.setup.satellites)
    CHECK(sat.inclination_rad == doctest::Approx(1.3962634015954636).epsilon(1e-12));
  CHECK(prep.setup.ground_station.latitude_rad ==
        doctest::Approx(orbital::deg_to_rad(53.07)));
  CHECK(prep.setup.ground_station.min_elevation_rad ==
        doctest::Approx(orbital::deg_to_rad(10.0)));
}

TEST_CASE("prepare expands shells, shards and strategy settings") {
  auto j = minimal_synthetic();
  const auto prep = cfg::prepare(cfg::parse_scenario(j));
  CHECK(prep.shell_names == std::vector<std::string>{"a", "b"});
  CHECK(prep.setup.satellites.size() == 4);
  CHECK(prep.setup.shards.size() == 4);
  CHECK(prep.shell_of_sat.at(0) == 0);
  CHECK(prep.shell_of_sat.at(3) == 1);
  // class split: shell a holds classes {0,1}, shell b {2,3}
  for (const auto label : prep.setup.shards.at(0).labels) CHECK(label <= 1);
  for (const auto label : prep.setup.shards.at(3).labels) CHECK(label >= 2);
  // equal shard sizes
  const auto n0 = prep.setup.shards.at(0).size();
  for (const auto& [id, shard] : prep.setup.shards) CHECK(shard.size() == n0);
  CHECK(prep.max_period_s ==
        doctest::Approx(orbital::orbital_period(orbital::kEarthRadiusKm + 2000.0)));
}

TEST_CASE("fedasync staleness defaults derive from the constellation") {
  auto j = minimal_synthetic();
  j["strategy"]["name"] = "fedasync";
  j["strategy"]["fedasync"] = {{"base_mix", 0.5},
                               {"staleness", {{"enabled", true}}},
                               {"learning_rate", 0.01}};
  const auto prep = cfg::prepare(cfg::parse_scenario(j));
  const double t_max = orbital::orbital_period(orbital::kEarthRadiusKm + 2000.0);
  CHECK(prep.setup.strategy.staleness.t_max_s == doctest::Approx(t_max));
  CHECK(prep.setup.strategy.staleness.decay ==
        doctest::Approx(5.0 * 1.01 * t_max));
  CHECK(prep.setup.train.learning_rate == 0.01);  // worker override

  SUBCASE("reciprocal interpretation of the decay constant") {
    j["strategy"]["fedasync"]["staleness"]["a_is_reciprocal"] = true;
    const auto prep2 = cfg::prepare(cfg::parse_scenario(j));
    CHECK(prep2.setup.strategy.staleness.decay ==
          doctest::Approx(1.0 / (5.0 * 1.01 * t_max)));
  }
}

TEST_CASE("seed override replaces the file seed") {
  const auto prep = cfg::prepare(cfg::parse_scenario(minimal_synthetic()), 42);
  CHECK(prep.setup.seed == 42);
  CHECK(prep.setup.train.rng_seed == 42);
}

TEST_CASE("scenario validation") {
  SUBCASE("unknown strategy name") {
    auto j = minimal_synthetic();
    j["strategy"]["name"] = "fedmagic";
    CHECK_THROWS_AS(cfg::validate(cfg::parse_scenario(j)), ConfigError);
  }
  SUBCASE("class split with a single shell") {
    auto j = minimal_synthetic();
    j["constellation"].erase(1);
    j["data"]["partition"]["class_assignment"] = {{"a", {0, 1, 2, 3}}};
    CHECK_THROWS_AS(cfg::validate(cfg::parse_scenario(j)), ConfigError);
  }
  SUBCASE("missing data file") {
    auto j = minimal_synthetic();
    j["data"]["source"] = "idx";
    j["data"]["train_images"] = "/definitely/not/here";
    j["data"]["train_labels"] = "/definitely/not/here2";
    j["data"]["test_images"] = "/definitely/not/here3";
    j["data"]["test_labels"] = "/definitely/not/here4";
    CHECK_THROWS_AS(cfg::validate(cfg::parse_scenario(j)), ConfigError);
  }
  SUBCASE("empty constellation") {
    auto j = minimal_synthetic();
    j["constellation"] = json::array();
    CHECK_THROWS_AS(cfg::validate(cfg::parse_scenario(j)), ConfigError);
  }
  SUBCASE("assignment naming an unknown shell") {
    auto j = minimal_synthetic();
    j["data"]["partition"]["class_assignment"] = {{"zz", {0, 1, 2, 3}}};
    CHECK_THROWS_AS(cfg::validate(cfg::parse_scenario(j)), ConfigError);
  }
  SUBCASE("missing required key") {
    auto j = minimal_synthetic();
    j.erase("training");
    CHECK_THROWS_AS(cfg::parse_scenario(j), ConfigError);
  }
}

TEST_CASE("relative data paths resolve against the data directory variable") {
  ::setenv(cfg::kDataDirEnv, "/tmp/leofl_data_dir_test", 1);
  CHECK(cfg::resolve_data_path("file.bin") == "/tmp/leofl_data_dir_test/file.bin");
  CHECK(cfg::resolve_data_path("/abs/file.bin") == "/abs/file.bin");
  ::unsetenv(cfg::kDataDirEnv);
  CHECK(cfg::resolve_data_path("file.bin") == "file.bin");
}

TEST_CASE("synthetic train and test splits share class structure") {
  const auto data = cfg::load_data(cfg::parse_scenario(minimal_synthetic()));
  CHECK(data.train.size() == 4 * 40);
  CHECK(data.test.size() == 4 * 10);
  CHECK(data.train.feature_dim == data.test.feature_dim);
  // Blob centers are shared, so a model fit on train transfers to test.
  const auto model = learn::model_for(data.train);
  learn::TrainConfig tc;
  tc.learning_rate = 0.1;
  tc.batch_size = 10;
  tc.rng_seed = 2;
  const auto params = learn::train_centralized(model, data.train, 6, tc);
  CHECK(learn::evaluate(model, params, data.test).top1_accuracy > 0.9);
}
