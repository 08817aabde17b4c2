#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "leofl/model.hpp"

namespace leofl::fl {

using learn::ParamVector;

// ---------------------------------------------------------------------------
// Synchronous federated averaging.
//
// Each epoch the ground station schedules a worker set, hands the current
// global model to every scheduled worker and blocks until all of them have
// returned an update. Updates are averaged weighted by local dataset size,
// renormalized over the scheduled set.
// ---------------------------------------------------------------------------

/// Returns the worker ids scheduled for the epoch starting at `wall_time`.
using FedAvgSchedule = std::function<std::vector<int>(double wall_time)>;

struct FedAvgState {
  std::int64_t epoch = 0;
  ParamVector global;
  std::set<int> to_send;     // scheduled, model not yet handed out
  std::set<int> to_receive;  // scheduled, update not yet returned
  std::vector<double> accumulator;
  std::map<int, std::int64_t> sample_counts;  // id -> n_k
  std::map<int, double> weights;              // id -> n_k / sum over scheduled
};

/// Builds an epoch-0 state and schedules the first round at t = 0.
FedAvgState make_fedavg(ParamVector initial,
                        const std::map<int, std::int64_t>& sample_counts,
                        const FedAvgSchedule& schedule);

enum class FedAvgAction {
  kSend,      // satellite was owed the current model; transmit it
  kReceived,  // update accepted into the accumulator
  kIgnore,    // nothing owed and nothing acceptable
};

struct FedAvgOutcome {
  FedAvgAction action = FedAvgAction::kIgnore;
  bool epoch_completed = false;  // this connection closed the round
  const char* note = nullptr;    // set when an update was discarded
};

/// Ground-station handler for one satellite connection. `delivered` is the
/// satellite's pending update, if it brought one. When the last scheduled
/// update arrives the accumulator becomes the next global model and the
/// following round is scheduled at `wall_time`.
FedAvgOutcome fedavg_on_connect(FedAvgState& state, int satellite_id,
                                const ParamVector* delivered,
                                const FedAvgSchedule& schedule, double wall_time);

/// Default full-participation schedule over the given ids.
FedAvgSchedule schedule_fedavg(std::vector<int> all_ids);

// ---------------------------------------------------------------------------
// Asynchronous mixing (FedAsync).
//
// Every arriving update is blended into the global model with factor
// alpha = base_mix * s(staleness), where the staleness is measured in wall
// time between the moment the delivered model's epoch was processed and now.
// ---------------------------------------------------------------------------

/// Hinged staleness weight: full weight up to (1+epsilon)*t_max, hyperbolic
/// decay 1/(1 + a*(t - hinge)) beyond it. `a` is applied verbatim with time
/// in seconds.
double hinged_staleness(double delta_t_s, double epsilon, double a, double t_max_s);

struct StalenessConfig {
  bool enabled = false;
  double epsilon = 0.01;
  double decay = 0.0;      // the constant `a` as used in the formula, 1/s
  double t_max_s = 0.0;    // largest orbital period in the constellation
};

struct FedAsyncState {
  std::int64_t epoch = 0;
  ParamVector global;
  double base_mix = 0.5;  // alpha'
  StalenessConfig staleness;
  double schedule_threshold = 0.0;  // skip workers whose predicted alpha falls below
  std::map<std::int64_t, double> epoch_times;  // epoch -> wall time it was processed
};

FedAsyncState make_fedasync(ParamVector initial, double base_mix,
                            const StalenessConfig& staleness,
                            double schedule_threshold);

/// Effective mixing factor for an update tagged `source_epoch` arriving now.
double fedasync_alpha(const FedAsyncState& state, std::int64_t source_epoch,
                      double wall_time);

/// Incorporates one delivered update; advances the epoch counter and records
/// the processing time. Returns the mixing factor that was applied.
double fedasync_update(FedAsyncState& state, const ParamVector& delivered,
                       double wall_time);

/// Predicts the mixing weight a model handed out now would receive when the
/// satellite returns it at its next pass, and declines scheduling when that
/// weight falls below the threshold. A zero threshold always schedules.
using NextPassFn = std::function<std::optional<double>(int satellite_id, double after)>;
bool schedule_fedasync(const FedAsyncState& state, int satellite_id,
                       double wall_time, const NextPassFn& next_pass);

// ---------------------------------------------------------------------------
// Unrolled federated averaging (FedSat).
//
// Exploits the periodic contact order of a constellation: the station keeps
// each satellite's previously delivered update and, on every delivery,
// replaces that satellite's contribution in the running weighted average:
//   global <- global - w_k * (previous_k - delivered_k).
// With weights summing to one and one delivery per satellite this reproduces
// the synchronous average without any barrier.
// ---------------------------------------------------------------------------

struct FedSatState {
  std::int64_t epoch = 0;
  ParamVector global;
  std::map<int, std::vector<double>> last_update;  // id -> previous delivery
  std::map<int, double> weight;                    // id -> n_k / n
};

/// The per-satellite cache starts at the initial model, so the first full
/// sweep of deliveries lands exactly on the synchronous average.
FedSatState make_fedsat(ParamVector initial, const std::map<int, double>& weights);

void fedsat_update(FedSatState& state, int satellite_id, const ParamVector& delivered);

// ---------------------------------------------------------------------------
// Uniform ground-station interface used by the simulator event loop. One
// call per satellite connection: an optional upload is folded into the
// strategy state, then the strategy decides whether to hand out a new task.
// ---------------------------------------------------------------------------

enum class UploadResult { kNone, kIncorporated, kAccumulated, kDiscarded };

struct Exchange {
  UploadResult upload = UploadResult::kNone;
  bool global_changed = false;
  bool epoch_completed = false;       // synchronous rounds only
  std::optional<std::int64_t> sent_epoch;  // set when a model was handed out
  const char* note = nullptr;
};

class GroundStation {
 public:
  virtual ~GroundStation() = default;
  virtual Exchange on_connect(int satellite_id, const ParamVector* delivered,
                              double wall_time) = 0;
  virtual const ParamVector& global_model() const = 0;
  virtual std::int64_t epoch() const = 0;
  virtual std::string_view name() const = 0;
};

std::unique_ptr<GroundStation> make_fedavg_station(
    ParamVector initial, const std::map<int, std::int64_t>& sample_counts,
    FedAvgSchedule schedule);

std::unique_ptr<GroundStation> make_fedasync_station(
    ParamVector initial, double base_mix, const StalenessConfig& staleness,
    double schedule_threshold, NextPassFn next_pass);

std::unique_ptr<GroundStation> make_fedsat_station(
    ParamVector initial, const std::map<int, double>& weights);

}  // namespace leofl::fl
