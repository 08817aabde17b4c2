#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "leofl/simulator.hpp"

namespace leofl::cfg {

// Scenario files are single nested JSON documents; every experiment constant
// lives in the file rather than in code defaults. Angles are degrees at this
// boundary and radians everywhere else.

struct ShellConfig {
  std::string name;
  int total_sats = 0;
  int planes = 0;
  int phasing = 1;
  double inclination_deg = 0.0;
  double altitude_km = 0.0;
  double raan_offset_deg = 0.0;
};

struct GroundStationConfig {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double altitude_km = 0.0;
  double min_elevation_deg = 10.0;
};

struct SyntheticConfig {
  std::int32_t classes = 10;
  std::int64_t per_class = 120;       // training samples per class
  std::int64_t test_per_class = 30;   // held-out samples per class
  std::int64_t dim = 20;
  double separation = 3.0;
};

struct DataConfig {
  std::string source = "synthetic";  // "idx" or "synthetic"
  std::string train_images, train_labels, test_images, test_labels;
  SyntheticConfig synthetic;
  std::string partition_mode = "iid";  // "iid" or "class_split"
  std::map<std::string, std::vector<std::int32_t>> class_assignment;  // by shell name
};

struct TrainingConfig {
  double learning_rate = 0.1;
  double prox_weight = 0.0;
  std::int32_t batch_size = 10;
  std::int32_t local_epochs = 1;
};

struct StalenessJson {
  bool enabled = false;
  double epsilon = 0.01;
  // The decay constant. When omitted it defaults to 5*(1+epsilon)*T_max with
  // T_max the largest orbital period in the constellation. Set
  // `a_is_reciprocal` to apply 1/a instead of a in the decay denominator.
  std::optional<double> a;
  bool a_is_reciprocal = false;
};

struct FedAsyncJson {
  double base_mix = 0.5;
  double schedule_threshold = 0.0;
  std::optional<double> learning_rate;  // worker-side override
  StalenessJson staleness;
};

struct SimulationJson {
  double horizon_s = 48.0 * 3600.0;
  std::uint64_t seed = 1;
  std::string output = "metrics.csv";
  double comm_delay_s = 0.0;
  std::string compute_mode = "immediate";  // or "fixed"
  double compute_duration_s = 0.0;
  std::optional<std::string> event_log;
};

struct ScenarioConfig {
  std::vector<ShellConfig> constellation;
  GroundStationConfig ground_station;
  DataConfig data;
  TrainingConfig training;
  std::string strategy = "fedsat";  // "fedavg", "fedasync" or "fedsat"
  FedAsyncJson fedasync;
  SimulationJson simulation;
};

/// Name of the environment variable that anchors relative dataset paths.
inline constexpr const char* kDataDirEnv = "LEOFL_DATA_DIR";

ScenarioConfig parse_scenario(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& config);
ScenarioConfig load_scenario(const std::string& path);

/// Structural checks plus existence of referenced data files.
void validate(const ScenarioConfig& config);

/// Resolves a dataset path: absolute paths pass through, relative ones are
/// anchored at $LEOFL_DATA_DIR when set, else at the working directory.
std::string resolve_data_path(const std::string& path);

struct LoadedData {
  learn::Dataset train;
  learn::Dataset test;
};

/// Loads (or synthesizes) the train/test pair described by the config.
LoadedData load_data(const ScenarioConfig& config);

struct PreparedScenario {
  sim::SimulationSetup setup;
  std::vector<std::string> shell_names;
  std::map<int, int> shell_of_sat;  // satellite id -> shell index
  double max_period_s = 0.0;
};

/// Expands the config into a runnable setup: constellation, data shards,
/// strategy and training parameters. `seed_override` replaces the file's
/// seed when present.
PreparedScenario prepare(const ScenarioConfig& config,
                         std::optional<std::uint64_t> seed_override = {});

}  // namespace leofl::cfg
