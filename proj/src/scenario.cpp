#include "leofl/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "leofl/errors.hpp"
#include "leofl/orbital.hpp"

namespace leofl::cfg {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const char* where) {
  const auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(std::string(where) + ": missing required key '" + key + "'");
  return *it;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  return it->get<T>();
}

}  // namespace

ScenarioConfig parse_scenario(const json& j) {
  try {
    ScenarioConfig c;
    for (const auto& js : require(j, "constellation", "scenario")) {
      ShellConfig s;
      s.name = require(js, "name", "shell").get<std::string>();
      s.total_sats = require(js, "total_sats", "shell").get<int>();
      s.planes = require(js, "planes", "shell").get<int>();
      s.phasing = get_or(js, "phasing", 1);
      s.inclination_deg = require(js, "inclination_deg", "shell").get<double>();
      s.altitude_km = require(js, "altitude_km", "shell").get<double>();
      s.raan_offset_deg = get_or(js, "raan_offset_deg", 0.0);
      c.constellation.push_back(std::move(s));
    }

    const json& jg = require(j, "ground_station", "scenario");
    c.ground_station.latitude_deg = require(jg, "latitude_deg", "ground_station").get<double>();
    c.ground_station.longitude_deg = require(jg, "longitude_deg", "ground_station").get<double>();
    c.ground_station.altitude_km = get_or(jg, "altitude_km", 0.0);
    c.ground_station.min_elevation_deg = get_or(jg, "min_elevation_deg", 10.0);

    const json& jd = require(j, "data", "scenario");
    c.data.source = require(jd, "source", "data").get<std::string>();
    c.data.train_images = get_or<std::string>(jd, "train_images", "");
    c.data.train_labels = get_or<std::string>(jd, "train_labels", "");
    c.data.test_images = get_or<std::string>(jd, "test_images", "");
    c.data.test_labels = get_or<std::string>(jd, "test_labels", "");
    if (jd.contains("synthetic")) {
      const json& js = jd["synthetic"];
      c.data.synthetic.classes = get_or(js, "classes", 10);
      c.data.synthetic.per_class = get_or<std::int64_t>(js, "per_class", 120);
      c.data.synthetic.test_per_class = get_or<std::int64_t>(js, "test_per_class", 30);
      c.data.synthetic.dim = get_or<std::int64_t>(js, "dim", 20);
      c.data.synthetic.separation = get_or(js, "separation", 3.0);
    }
    const json& jp = require(jd, "partition", "data");
    c.data.partition_mode = require(jp, "mode", "partition").get<std::string>();
    if (jp.contains("class_assignment"))
      for (const auto& [shell, classes] : jp["class_assignment"].items())
        c.data.class_assignment[shell] = classes.get<std::vector<std::int32_t>>();

    const json& jt = require(j, "training", "scenario");
    c.training.learning_rate = require(jt, "learning_rate", "training").get<double>();
    c.training.prox_weight = get_or(jt, "prox_weight", 0.0);
    c.training.batch_size = require(jt, "batch_size", "training").get<std::int32_t>();
    c.training.local_epochs = get_or(jt, "local_epochs", 1);

    const json& jst = require(j, "strategy", "scenario");
    c.strategy = require(jst, "name", "strategy").get<std::string>();
    if (jst.contains("fedasync")) {
      const json& ja = jst["fedasync"];
      c.fedasync.base_mix = get_or(ja, "base_mix", 0.5);
      c.fedasync.schedule_threshold = get_or(ja, "schedule_threshold", 0.0);
      if (ja.contains("learning_rate"))
        c.fedasync.learning_rate = ja["learning_rate"].get<double>();
      if (ja.contains("staleness")) {
        const json& jss = ja["staleness"];
        c.fedasync.staleness.enabled = get_or(jss, "enabled", false);
        c.fedasync.staleness.epsilon = get_or(jss, "epsilon", 0.01);
        if (jss.contains("a")) c.fedasync.staleness.a = jss["a"].get<double>();
        c.fedasync.staleness.a_is_reciprocal = get_or(jss, "a_is_reciprocal", false);
      }
    }

    const json& jsim = require(j, "simulation", "scenario");
    c.simulation.horizon_s = require(jsim, "horizon_s", "simulation").get<double>();
    c.simulation.seed = get_or<std::uint64_t>(jsim, "seed", 1);
    c.simulation.output = get_or<std::string>(jsim, "output", "metrics.csv");
    c.simulation.comm_delay_s = get_or(jsim, "comm_delay_s", 0.0);
    c.simulation.compute_mode = get_or<std::string>(jsim, "compute_mode", "immediate");
    c.simulation.compute_duration_s = get_or(jsim, "compute_duration_s", 0.0);
    if (jsim.contains("event_log"))
      c.simulation.event_log = jsim["event_log"].get<std::string>();

    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

json scenario_to_json(const ScenarioConfig& c) {
  json j;
  for (const auto& s : c.constellation)
    j["constellation"].push_back({{"name", s.name},
                                  {"total_sats", s.total_sats},
                                  {"planes", s.planes},
                                  {"phasing", s.phasing},
                                  {"inclination_deg", s.inclination_deg},
                                  {"altitude_km", s.altitude_km},
                                  {"raan_offset_deg", s.raan_offset_deg}});
  j["ground_station"] = {{"latitude_deg", c.ground_station.latitude_deg},
                         {"longitude_deg", c.ground_station.longitude_deg},
                         {"altitude_km", c.ground_station.altitude_km},
                         {"min_elevation_deg", c.ground_station.min_elevation_deg}};
  j["data"] = {{"source", c.data.source},
               {"train_images", c.data.train_images},
               {"train_labels", c.data.train_labels},
               {"test_images", c.data.test_images},
               {"test_labels", c.data.test_labels},
               {"synthetic",
                {{"classes", c.data.synthetic.classes},
                 {"per_class", c.data.synthetic.per_class},
                 {"test_per_class", c.data.synthetic.test_per_class},
                 {"dim", c.data.synthetic.dim},
                 {"separation", c.data.synthetic.separation}}},
               {"partition", {{"mode", c.data.partition_mode}}}};
  if (!c.data.class_assignment.empty()) {
    json ja;
    for (const auto& [shell, classes] : c.data.class_assignment) ja[shell] = classes;
    j["data"]["partition"]["class_assignment"] = ja;
  }
  j["training"] = {{"learning_rate", c.training.learning_rate},
                   {"prox_weight", c.training.prox_weight},
                   {"batch_size", c.training.batch_size},
                   {"local_epochs", c.training.local_epochs}};
  j["strategy"] = {{"name", c.strategy}};
  json ja = {{"base_mix", c.fedasync.base_mix},
             {"schedule_threshold", c.fedasync.schedule_threshold},
             {"staleness",
              {{"enabled", c.fedasync.staleness.enabled},
               {"epsilon", c.fedasync.staleness.epsilon},
               {"a_is_reciprocal", c.fedasync.staleness.a_is_reciprocal}}}};
  if (c.fedasync.learning_rate) ja["learning_rate"] = *c.fedasync.learning_rate;
  if (c.fedasync.staleness.a) ja["staleness"]["a"] = *c.fedasync.staleness.a;
  j["strategy"]["fedasync"] = ja;
  j["simulation"] = {{"horizon_s", c.simulation.horizon_s},
                     {"seed", c.simulation.seed},
                     {"output", c.simulation.output},
                     {"comm_delay_s", c.simulation.comm_delay_s},
                     {"compute_mode", c.simulation.compute_mode},
                     {"compute_duration_s", c.simulation.compute_duration_s}};
  if (c.simulation.event_log) j["simulation"]["event_log"] = *c.simulation.event_log;
  return j;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open scenario file");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_scenario(j);
}

std::string resolve_data_path(const std::string& path) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (p.is_absolute()) return path;
  if (const char* base = std::getenv(kDataDirEnv); base != nullptr && *base != '\0')
    return (fs::path(base) / p).string();
  return path;
}

void validate(const ScenarioConfig& c) {
  if (c.constellation.empty())
    throw ConfigError("scenario: constellation must contain at least one shell");
  std::set<std::string> names;
  for (const auto& s : c.constellation) {
    if (!names.insert(s.name).second)
      throw ConfigError("scenario: duplicate shell name '" + s.name + "'");
    orbital::WalkerSpec w{s.total_sats, s.planes, s.phasing,
                          orbital::deg_to_rad(s.inclination_deg), s.altitude_km,
                          orbital::deg_to_rad(s.raan_offset_deg)};
    try {
      orbital::validate(w);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("shell '" + s.name + "': " + e.what());
    }
  }
  {
    orbital::GroundStation gs{orbital::deg_to_rad(c.ground_station.latitude_deg),
                              orbital::deg_to_rad(c.ground_station.longitude_deg),
                              c.ground_station.altitude_km,
                              orbital::deg_to_rad(c.ground_station.min_elevation_deg)};
    try {
      orbital::validate(gs);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("ground_station: ") + e.what());
    }
  }

  if (c.data.source != "idx" && c.data.source != "synthetic")
    throw ConfigError("data.source must be 'idx' or 'synthetic'");
  if (c.data.source == "idx") {
    for (const auto& [key, value] :
         {std::pair{"train_images", c.data.train_images},
          std::pair{"train_labels", c.data.train_labels},
          std::pair{"test_images", c.data.test_images},
          std::pair{"test_labels", c.data.test_labels}}) {
      if (value.empty())
        throw ConfigError(std::string("data.") + key + " is required for idx data");
      const std::string path = resolve_data_path(value);
      if (!std::filesystem::exists(path))
        throw ConfigError("data file not found: " + path);
    }
  }

  if (c.data.partition_mode != "iid" && c.data.partition_mode != "class_split")
    throw ConfigError("partition.mode must be 'iid' or 'class_split'");
  if (c.data.partition_mode == "class_split") {
    if (c.constellation.size() < 2)
      throw ConfigError("class_split partitioning needs at least two shells");
    if (c.data.class_assignment.empty())
      throw ConfigError("class_split partitioning needs a class_assignment");
    for (const auto& [shell, classes] : c.data.class_assignment)
      if (!names.count(shell))
        throw ConfigError("class_assignment names unknown shell '" + shell + "'");
  }

  if (c.strategy != "fedavg" && c.strategy != "fedasync" && c.strategy != "fedsat")
    throw ConfigError("strategy.name must be 'fedavg', 'fedasync' or 'fedsat'");
  if (c.strategy == "fedasync") {
    if (!(c.fedasync.base_mix > 0.0) || c.fedasync.base_mix > 1.0)
      throw ConfigError("fedasync.base_mix must lie in (0, 1]");
    if (c.fedasync.schedule_threshold < 0.0)
      throw ConfigError("fedasync.schedule_threshold must be >= 0");
    if (c.fedasync.staleness.a && *c.fedasync.staleness.a <= 0.0)
      throw ConfigError("fedasync.staleness.a must be positive");
  }

  if (c.training.learning_rate < 0.0 || !std::isfinite(c.training.learning_rate))
    throw ConfigError("training.learning_rate must be non-negative");
  if (c.training.batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
  if (c.training.local_epochs < 1) throw ConfigError("training.local_epochs must be >= 1");
  if (c.training.prox_weight < 0.0) throw ConfigError("training.prox_weight must be >= 0");

  if (c.simulation.horizon_s <= 0.0) throw ConfigError("simulation.horizon_s must be positive");
  if (c.simulation.comm_delay_s < 0.0) throw ConfigError("simulation.comm_delay_s must be >= 0");
  if (c.simulation.compute_mode != "immediate" && c.simulation.compute_mode != "fixed")
    throw ConfigError("simulation.compute_mode must be 'immediate' or 'fixed'");
  if (c.simulation.compute_duration_s < 0.0)
    throw ConfigError("simulation.compute_duration_s must be >= 0");
}

LoadedData load_data(const ScenarioConfig& c) {
  LoadedData out;
  if (c.data.source == "idx") {
    out.train = learn::load_idx(resolve_data_path(c.data.train_images),
                                resolve_data_path(c.data.train_labels));
    out.test = learn::load_idx(resolve_data_path(c.data.test_images),
                               resolve_data_path(c.data.test_labels));
    if (out.train.feature_dim != out.test.feature_dim)
      throw DataError("train and test sets have different feature dimensions");
    return out;
  }
  // One draw covers both splits so they share the class centers; per-class
  // blocks are contiguous, the head of each block trains and the tail tests.
  const auto& s = c.data.synthetic;
  const learn::Dataset full = learn::synth_dataset(
      s.classes, s.per_class + s.test_per_class, s.dim,
      c.simulation.seed ^ 0x5eedda7aULL, s.separation);
  auto take = [&](std::int64_t lo, std::int64_t hi) {
    learn::Dataset d;
    d.feature_dim = full.feature_dim;
    d.class_count = full.class_count;
    for (std::int32_t cls = 0; cls < s.classes; ++cls) {
      const std::int64_t base = static_cast<std::int64_t>(cls) * (s.per_class + s.test_per_class);
      for (std::int64_t i = lo; i < hi; ++i) {
        const double* row = full.row(base + i);
        d.features.insert(d.features.end(), row, row + full.feature_dim);
        d.labels.push_back(full.labels[static_cast<std::size_t>(base + i)]);
      }
    }
    return d;
  };
  out.train = take(0, s.per_class);
  out.test = take(s.per_class, s.per_class + s.test_per_class);
  return out;
}

PreparedScenario prepare(const ScenarioConfig& config,
                         std::optional<std::uint64_t> seed_override) {
  validate(config);
  ScenarioConfig c = config;
  if (seed_override) c.simulation.seed = *seed_override;

  PreparedScenario prep;
  sim::SimulationSetup& setup = prep.setup;

  setup.ground_station = {orbital::deg_to_rad(c.ground_station.latitude_deg),
                          orbital::deg_to_rad(c.ground_station.longitude_deg),
                          c.ground_station.altitude_km,
                          orbital::deg_to_rad(c.ground_station.min_elevation_deg)};

  std::vector<std::pair<int, int>> sat_shells;  // (id, shell index)
  int id_base = 0;
  for (std::size_t si = 0; si < c.constellation.size(); ++si) {
    const auto& s = c.constellation[si];
    prep.shell_names.push_back(s.name);
    orbital::WalkerSpec w{s.total_sats, s.planes, s.phasing,
                          orbital::deg_to_rad(s.inclination_deg), s.altitude_km,
                          orbital::deg_to_rad(s.raan_offset_deg)};
    for (auto& sat : orbital::generate_walker(w, id_base)) {
      sat_shells.emplace_back(sat.id, static_cast<int>(si));
      prep.shell_of_sat[sat.id] = static_cast<int>(si);
      setup.satellites.push_back(sat);
    }
    id_base += s.total_sats;
    prep.max_period_s = std::max(
        prep.max_period_s, orbital::orbital_period(orbital::kEarthRadiusKm + s.altitude_km));
  }

  LoadedData data = load_data(c);
  setup.test = std::move(data.test);
  setup.model = learn::model_for(data.train);

  learn::PartitionSpec part;
  part.rng_seed = c.simulation.seed ^ 0x9a27f1ceULL;
  if (c.data.partition_mode == "iid") {
    part.mode = learn::PartitionMode::kIid;
  } else {
    part.mode = learn::PartitionMode::kClassSplit;
    std::map<std::string, int> shell_index;
    for (std::size_t si = 0; si < c.constellation.size(); ++si)
      shell_index[c.constellation[si].name] = static_cast<int>(si);
    for (const auto& [shell, classes] : c.data.class_assignment)
      part.shell_classes[shell_index.at(shell)] =
          std::set<std::int32_t>(classes.begin(), classes.end());
  }
  setup.shards = learn::partition(data.train, sat_shells, part);

  setup.train.learning_rate = c.training.learning_rate;
  setup.train.prox_weight = c.training.prox_weight;
  setup.train.batch_size = c.training.batch_size;
  setup.train.local_epochs = c.training.local_epochs;
  setup.train.rng_seed = c.simulation.seed;

  if (c.strategy == "fedavg") {
    setup.strategy.kind = sim::StrategyConfig::Kind::kFedAvg;
  } else if (c.strategy == "fedsat") {
    setup.strategy.kind = sim::StrategyConfig::Kind::kFedSat;
  } else {
    setup.strategy.kind = sim::StrategyConfig::Kind::kFedAsync;
    setup.strategy.base_mix = c.fedasync.base_mix;
    setup.strategy.schedule_threshold = c.fedasync.schedule_threshold;
    fl::StalenessConfig st;
    st.enabled = c.fedasync.staleness.enabled;
    st.epsilon = c.fedasync.staleness.epsilon;
    st.t_max_s = prep.max_period_s;
    const double a = c.fedasync.staleness.a.value_or(
        5.0 * (1.0 + st.epsilon) * prep.max_period_s);
    st.decay = c.fedasync.staleness.a_is_reciprocal ? 1.0 / a : a;
    setup.strategy.staleness = st;
    if (c.fedasync.learning_rate)
      setup.train.learning_rate = *c.fedasync.learning_rate;
  }

  setup.horizon_s = c.simulation.horizon_s;
  setup.seed = c.simulation.seed;
  setup.comm_delay_s = c.simulation.comm_delay_s;
  setup.policy.mode = c.simulation.compute_mode == "fixed"
                          ? sim::ComputePolicy::Mode::kFixedDuration
                          : sim::ComputePolicy::Mode::kImmediate;
  setup.policy.duration_s = c.simulation.compute_duration_s;
  return prep;
}

}  // namespace leofl::cfg
