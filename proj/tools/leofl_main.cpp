// Command-line front end: run simulations, inspect contact windows, train
// the centralized baseline and summarize data partitions.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "leofl/errors.hpp"
#include "leofl/orbital.hpp"
#include "leofl/scenario.hpp"
#include "leofl/simulator.hpp"
#include "leofl/training.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;
constexpr int kExitInternal = 5;

struct SimulateArgs {
  std::vector<std::string> configs;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string event_log;
  int jobs = 1;
};

int run_one_simulation(const std::string& config_path, const SimulateArgs& args,
                       std::mutex& io) {
  const leofl::cfg::ScenarioConfig config = leofl::cfg::load_scenario(config_path);
  const auto prep = leofl::cfg::prepare(config, args.seed);

  std::string event_log_path = args.event_log;
  if (event_log_path.empty() && config.simulation.event_log)
    event_log_path = *config.simulation.event_log;
  std::ofstream event_log;
  if (!event_log_path.empty()) {
    event_log.open(event_log_path);
    if (!event_log)
      throw leofl::DataError(event_log_path + ": cannot open event log for writing");
  }

  const auto result =
      leofl::sim::run(prep.setup, event_log_path.empty() ? nullptr : &event_log);

  const std::string out_path = args.out.empty() ? config.simulation.output : args.out;
  std::ofstream out(out_path);
  if (!out) throw leofl::DataError(out_path + ": cannot open output for writing");
  leofl::sim::write_metrics_csv(out, result.metrics, result.strategy);

  std::lock_guard lock(io);
  const auto& last = result.metrics.back();
  std::printf("%s: %s, %zu records, final accuracy %.4f (epoch %lld) -> %s\n",
              config_path.c_str(), result.strategy.c_str(), result.metrics.size(),
              last.accuracy, static_cast<long long>(last.epoch), out_path.c_str());
  return kExitOk;
}

int cmd_simulate(const SimulateArgs& args) {
  if (args.configs.size() > 1 && !args.out.empty())
    throw leofl::ConfigError("--out is only valid with a single scenario file");
  std::mutex io;
  if (args.jobs <= 1 || args.configs.size() == 1) {
    for (const auto& path : args.configs) run_one_simulation(path, args, io);
    return kExitOk;
  }
  // Independent scenario files share no state; run them on a small pool.
  std::vector<std::thread> pool;
  std::mutex next_mutex;
  std::size_t next = 0;
  std::vector<std::string> errors;
  const int jobs = std::min<int>(args.jobs, static_cast<int>(args.configs.size()));
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t mine;
        {
          std::lock_guard lock(next_mutex);
          if (next >= args.configs.size()) return;
          mine = next++;
        }
        try {
          run_one_simulation(args.configs[mine], args, io);
        } catch (const std::exception& e) {
          std::lock_guard lock(io);
          errors.push_back(args.configs[mine] + ": " + e.what());
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) std::cerr << "error: " << e << '\n';
  return errors.empty() ? kExitOk : kExitInternal;
}

int cmd_windows(const std::string& config_path, std::optional<double> horizon) {
  const leofl::cfg::ScenarioConfig config = leofl::cfg::load_scenario(config_path);
  const double h = horizon.value_or(config.simulation.horizon_s);
  if (h <= 0.0) throw leofl::ConfigError("horizon must be positive");

  leofl::orbital::GroundStation gs{
      leofl::orbital::deg_to_rad(config.ground_station.latitude_deg),
      leofl::orbital::deg_to_rad(config.ground_station.longitude_deg),
      config.ground_station.altitude_km,
      leofl::orbital::deg_to_rad(config.ground_station.min_elevation_deg)};
  leofl::orbital::validate(gs);

  std::printf("sat_id,rise_s,set_s\n");
  int id_base = 0;
  for (const auto& s : config.constellation) {
    leofl::orbital::WalkerSpec w{s.total_sats, s.planes, s.phasing,
                                 leofl::orbital::deg_to_rad(s.inclination_deg),
                                 s.altitude_km,
                                 leofl::orbital::deg_to_rad(s.raan_offset_deg)};
    for (const auto& sat : leofl::orbital::generate_walker(w, id_base)) {
      for (const auto& win : leofl::orbital::contact_windows(gs, sat, 0.0, h))
        std::printf("%d,%.1f,%.1f\n", win.satellite_id, win.rise_s, win.set_s);
    }
    id_base += s.total_sats;
  }
  return kExitOk;
}

int cmd_baseline(const std::string& config_path, int epochs) {
  const leofl::cfg::ScenarioConfig config = leofl::cfg::load_scenario(config_path);
  leofl::cfg::validate(config);
  const auto data = leofl::cfg::load_data(config);
  const auto model = leofl::learn::model_for(data.train);

  leofl::learn::TrainConfig cfg;
  cfg.learning_rate = config.training.learning_rate;
  cfg.prox_weight = 0.0;  // plain centralized SGD
  cfg.batch_size = config.training.batch_size;
  cfg.local_epochs = 1;
  cfg.rng_seed = config.simulation.seed;

  std::printf("centralized baseline: n=%lld, d=%lld, eta=%g, B=%d, %d epochs\n",
              static_cast<long long>(data.train.size()),
              static_cast<long long>(model.param_dim()), cfg.learning_rate,
              cfg.batch_size, epochs);
  const auto params = leofl::learn::train_centralized(
      model, data.train, epochs, cfg,
      [&](std::int32_t epoch, const leofl::learn::ParamVector& p) {
        const auto eval = leofl::learn::evaluate(model, p, data.test);
        std::printf("epoch %d: accuracy=%.4f loss=%.4f\n", epoch,
                    eval.top1_accuracy, eval.mean_loss);
      });
  const auto eval = leofl::learn::evaluate(model, params, data.test);
  std::printf("final accuracy=%.6f loss=%.6f\n", eval.top1_accuracy, eval.mean_loss);
  return kExitOk;
}

int cmd_partition(const std::string& config_path, bool summary) {
  const leofl::cfg::ScenarioConfig config = leofl::cfg::load_scenario(config_path);
  const auto prep = leofl::cfg::prepare(config);
  (void)summary;  // the summary is the command's whole output

  std::printf("sat_id,shell,samples");
  const std::int32_t classes = prep.setup.model.class_count;
  for (std::int32_t c = 0; c < classes; ++c) std::printf(",class_%d", c);
  std::printf("\n");
  std::int64_t total = 0;
  for (const auto& [id, shard] : prep.setup.shards) {
    total += shard.size();
    std::vector<std::int64_t> hist(static_cast<std::size_t>(classes), 0);
    for (const auto label : shard.labels) hist[static_cast<std::size_t>(label)]++;
    std::printf("%d,%s,%lld", id,
                prep.shell_names[static_cast<std::size_t>(prep.shell_of_sat.at(id))].c_str(),
                static_cast<long long>(shard.size()));
    for (const auto h : hist) std::printf(",%lld", static_cast<long long>(h));
    std::printf("\n");
  }
  std::printf("# total assigned: %lld\n", static_cast<long long>(total));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground-assisted federated learning simulator for LEO constellations"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  std::uint64_t seed_value = 0;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write metrics CSV");
  simulate->add_option("config", sim_args.configs, "Scenario file(s)")->required();
  auto* seed_opt = simulate->add_option("--seed", seed_value, "Override the scenario seed");
  simulate->add_option("--out", sim_args.out, "Metrics output path (single scenario)");
  simulate->add_option("--event-log", sim_args.event_log, "Write a protocol event log");
  simulate->add_option("--jobs", sim_args.jobs, "Parallel scenario runs")->default_val(1);

  std::string windows_config;
  double windows_horizon = 0.0;
  auto* windows = app.add_subcommand("windows", "Print contact windows as CSV");
  windows->add_option("config", windows_config, "Scenario file")->required();
  auto* horizon_opt = windows->add_option("--horizon", windows_horizon, "Horizon in seconds");

  std::string baseline_config;
  int baseline_epochs = 20;
  auto* baseline = app.add_subcommand("baseline", "Centralized training reference");
  baseline->add_option("config", baseline_config, "Scenario file")->required();
  baseline->add_option("--epochs", baseline_epochs, "Training epochs")->default_val(20);

  std::string partition_config;
  bool partition_summary = false;
  auto* partition = app.add_subcommand("partition", "Summarize the data partition");
  partition->add_option("config", partition_config, "Scenario file")->required();
  partition->add_flag("--summary", partition_summary, "Per-satellite class histogram");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      if (!seed_opt->empty()) sim_args.seed = seed_value;
      return cmd_simulate(sim_args);
    }
    if (windows->parsed())
      return cmd_windows(windows_config, horizon_opt->empty()
                                             ? std::nullopt
                                             : std::optional<double>(windows_horizon));
    if (baseline->parsed()) return cmd_baseline(baseline_config, baseline_epochs);
    if (partition->parsed()) return cmd_partition(partition_config, partition_summary);
  } catch (const leofl::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const leofl::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const leofl::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}
