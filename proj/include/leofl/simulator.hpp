#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "leofl/dataset.hpp"
#include "leofl/model.hpp"
#include "leofl/orbital.hpp"
#include "leofl/strategies.hpp"
#include "leofl/training.hpp"

namespace leofl::sim {

/// Event kinds in tie-break order: at equal times a closing contact is
/// processed before a finished computation, which precedes an opening
/// contact. Remaining ties break by satellite id.
enum class EventKind : int {
  kContactEnd = 0,
  kComputeDone = 1,
  kContactStart = 2,
};

struct SimEvent {
  double time = 0.0;
  EventKind kind = EventKind::kContactStart;
  int satellite_id = 0;
};

bool event_before(const SimEvent& a, const SimEvent& b);

struct MetricsRecord {
  double time_s = 0.0;
  std::int64_t epoch = 0;
  double accuracy = 0.0;
  double loss = 0.0;
};

struct ComputePolicy {
  enum class Mode {
    kImmediate,      // results materialize at the end of the pass
    kFixedDuration,  // pass end plus a fixed training time
  };
  Mode mode = Mode::kImmediate;
  double duration_s = 0.0;
};

/// When a worker that received a task during the pass ending at
/// `contact_end` will have its result ready. Under the default policy the
/// result is ready at the pass end itself, hence transmittable no earlier
/// than the next contact.
double compute_done_time(double contact_end, double next_contact_start,
                         const ComputePolicy& policy);

struct StrategyConfig {
  enum class Kind { kFedAvg, kFedAsync, kFedSat };
  Kind kind = Kind::kFedSat;
  // FedAsync only:
  double base_mix = 0.5;
  fl::StalenessConfig staleness;
  double schedule_threshold = 0.0;
};

std::string strategy_name(StrategyConfig::Kind kind);

/// Everything the event loop needs; built either from a scenario file (see
/// scenario.hpp) or directly by tests.
struct SimulationSetup {
  orbital::GroundStation ground_station;
  std::vector<orbital::SatelliteSpec> satellites;
  std::map<int, learn::Dataset> shards;  // by satellite id
  learn::Dataset test;
  learn::SoftmaxModel model;
  learn::TrainConfig train;
  StrategyConfig strategy;
  double horizon_s = 48.0 * 3600.0;
  std::uint64_t seed = 0;
  double comm_delay_s = 0.0;  // one-way transfer time per exchange
  ComputePolicy policy;
};

struct RunResult {
  std::string strategy;
  std::vector<MetricsRecord> metrics;
  std::map<int, std::vector<orbital::ContactWindow>> windows;
};

/// Runs the scenario to its horizon. Emits one metrics row at t = 0 and one
/// per global model update. The optional event log receives one CSV line per
/// protocol action (header `time_s,event,sat_id,epoch,detail`).
RunResult run(const SimulationSetup& setup, std::ostream* event_log = nullptr);

/// Writes `time_s,epoch,strategy,accuracy,loss` rows, floats with six
/// significant digits.
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records,
                       const std::string& strategy);

}  // namespace leofl::sim
