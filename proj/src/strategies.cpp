#include "leofl/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "leofl/errors.hpp"

namespace leofl::fl {

namespace {

void schedule_round(FedAvgState& state, const FedAvgSchedule& schedule,
                    double wall_time) {
  const std::vector<int> ids = schedule(wall_time);
  if (ids.empty())
    throw ProtocolError("fedavg: scheduler returned an empty worker set");
  state.to_send.clear();
  state.to_receive.clear();
  state.weights.clear();
  std::int64_t total = 0;
  for (const int id : ids) {
    const auto it = state.sample_counts.find(id);
    if (it == state.sample_counts.end())
      throw ProtocolError("fedavg: scheduled unknown satellite " + std::to_string(id));
    total += it->second;
    state.to_send.insert(id);
    state.to_receive.insert(id);
  }
  if (total <= 0) throw ProtocolError("fedavg: scheduled workers hold no data");
  for (const int id : ids)
    state.weights[id] =
        static_cast<double>(state.sample_counts.at(id)) / static_cast<double>(total);
  std::fill(state.accumulator.begin(), state.accumulator.end(), 0.0);
}

}  // namespace

FedAvgState make_fedavg(ParamVector initial,
                        const std::map<int, std::int64_t>& sample_counts,
                        const FedAvgSchedule& schedule) {
  FedAvgState state;
  state.epoch = 0;
  state.global = std::move(initial);
  state.global.source_epoch = 0;
  state.sample_counts = sample_counts;
  state.accumulator.assign(state.global.values.size(), 0.0);
  schedule_round(state, schedule, 0.0);
  return state;
}

FedAvgOutcome fedavg_on_connect(FedAvgState& state, int satellite_id,
                                const ParamVector* delivered,
                                const FedAvgSchedule& schedule, double wall_time) {
  if (delivered != nullptr) {
    if (delivered->values.size() != state.global.values.size())
      throw ProtocolError("fedavg: update dimension mismatch");
    if (!state.to_receive.count(satellite_id))
      return {FedAvgAction::kIgnore, false,
              "update from unscheduled satellite discarded"};
    if (delivered->source_epoch != state.epoch)
      return {FedAvgAction::kIgnore, false, "stale update discarded"};
    const double w = state.weights.at(satellite_id);
    for (std::size_t j = 0; j < state.accumulator.size(); ++j)
      state.accumulator[j] += w * delivered->values[j];
    state.to_receive.erase(satellite_id);
    if (state.to_send.empty() && state.to_receive.empty()) {
      state.global.values = state.accumulator;
      state.epoch += 1;
      state.global.source_epoch = state.epoch;
      schedule_round(state, schedule, wall_time);
      return {FedAvgAction::kReceived, true, nullptr};
    }
    return {FedAvgAction::kReceived, false, nullptr};
  }

  if (state.to_send.count(satellite_id)) {
    state.to_send.erase(satellite_id);
    return {FedAvgAction::kSend, false, nullptr};
  }
  return {FedAvgAction::kIgnore, false, nullptr};
}

FedAvgSchedule schedule_fedavg(std::vector<int> all_ids) {
  if (all_ids.empty())
    throw std::invalid_argument("schedule_fedavg: empty constellation");
  return [ids = std::move(all_ids)](double) { return ids; };
}

double hinged_staleness(double delta_t_s, double epsilon, double a, double t_max_s) {
  if (delta_t_s < 0.0)
    throw std::invalid_argument("hinged_staleness: negative time difference");
  if (a <= 0.0) throw std::invalid_argument("hinged_staleness: decay must be positive");
  const double hinge = (1.0 + epsilon) * t_max_s;
  if (delta_t_s <= hinge) return 1.0;
  return 1.0 / (1.0 + a * (delta_t_s - hinge));
}

FedAsyncState make_fedasync(ParamVector initial, double base_mix,
                            const StalenessConfig& staleness,
                            double schedule_threshold) {
  if (!(base_mix > 0.0) || base_mix > 1.0)
    throw std::invalid_argument("fedasync: base mix must lie in (0, 1]");
  if (schedule_threshold < 0.0)
    throw std::invalid_argument("fedasync: schedule threshold must be >= 0");
  FedAsyncState state;
  state.epoch = 0;
  state.global = std::move(initial);
  state.global.source_epoch = 0;
  state.base_mix = base_mix;
  state.staleness = staleness;
  state.schedule_threshold = schedule_threshold;
  state.epoch_times[0] = 0.0;
  return state;
}

double fedasync_alpha(const FedAsyncState& state, std::int64_t source_epoch,
                      double wall_time) {
  double s = 1.0;
  if (state.staleness.enabled) {
    const auto it = state.epoch_times.find(source_epoch);
    if (it == state.epoch_times.end())
      throw ProtocolError("fedasync: no processing time recorded for epoch " +
                          std::to_string(source_epoch));
    const double dt = std::max(0.0, wall_time - it->second);
    s = hinged_staleness(dt, state.staleness.epsilon, state.staleness.decay,
                         state.staleness.t_max_s);
  }
  return state.base_mix * s;
}

double fedasync_update(FedAsyncState& state, const ParamVector& delivered,
                       double wall_time) {
  if (delivered.values.size() != state.global.values.size())
    throw ProtocolError("fedasync: update dimension mismatch");
  if (delivered.source_epoch > state.epoch)
    throw ProtocolError("fedasync: update tagged epoch " +
                        std::to_string(delivered.source_epoch) +
                        " ahead of server epoch " + std::to_string(state.epoch));
  const double alpha = fedasync_alpha(state, delivered.source_epoch, wall_time);
  for (std::size_t j = 0; j < state.global.values.size(); ++j)
    state.global.values[j] =
        (1.0 - alpha) * state.global.values[j] + alpha * delivered.values[j];
  state.epoch += 1;
  state.global.source_epoch = state.epoch;
  state.epoch_times[state.epoch] = wall_time;
  return alpha;
}

bool schedule_fedasync(const FedAsyncState& state, int satellite_id,
                       double wall_time, const NextPassFn& next_pass) {
  if (state.schedule_threshold <= 0.0) return true;
  if (!next_pass) return true;
  const auto pass = next_pass(satellite_id, wall_time);
  if (!pass.has_value()) return false;  // never returns: nothing to schedule
  // The update handed out now carries the current epoch; its staleness at
  // delivery is exactly the wall-time span since that epoch was processed.
  const double t_epoch = state.epoch_times.at(state.epoch);
  double s = 1.0;
  if (state.staleness.enabled)
    s = hinged_staleness(std::max(0.0, *pass - t_epoch), state.staleness.epsilon,
                         state.staleness.decay, state.staleness.t_max_s);
  return state.base_mix * s >= state.schedule_threshold;
}

FedSatState make_fedsat(ParamVector initial, const std::map<int, double>& weights) {
  if (weights.empty())
    throw std::invalid_argument("fedsat: empty constellation");
  FedSatState state;
  state.epoch = 0;
  state.global = std::move(initial);
  state.global.source_epoch = 0;
  state.weight = weights;
  for (const auto& [id, w] : weights) {
    if (!(w > 0.0) || w > 1.0)
      throw std::invalid_argument("fedsat: weights must lie in (0, 1]");
    state.last_update[id] = state.global.values;
  }
  return state;
}

void fedsat_update(FedSatState& state, int satellite_id,
                   const ParamVector& delivered) {
  const auto cached = state.last_update.find(satellite_id);
  if (cached == state.last_update.end())
    throw ProtocolError("fedsat: update from unknown satellite " +
                        std::to_string(satellite_id));
  if (delivered.values.size() != state.global.values.size())
    throw ProtocolError("fedsat: update dimension mismatch");
  const double w = state.weight.at(satellite_id);
  std::vector<double>& prev = cached->second;
  for (std::size_t j = 0; j < state.global.values.size(); ++j)
    state.global.values[j] -= w * (prev[j] - delivered.values[j]);
  prev = delivered.values;
  state.epoch += 1;
  state.global.source_epoch = state.epoch;
}

// ---------------------------------------------------------------------------
// Ground-station adapters.
// ---------------------------------------------------------------------------

namespace {

class FedAvgStation final : public GroundStation {
 public:
  FedAvgStation(ParamVector initial, const std::map<int, std::int64_t>& counts,
                FedAvgSchedule schedule)
      : schedule_(std::move(schedule)),
        state_(make_fedavg(std::move(initial), counts, schedule_)) {}

  Exchange on_connect(int satellite_id, const ParamVector* delivered,
                      double wall_time) override {
    Exchange ex;
    if (delivered != nullptr) {
      const auto out =
          fedavg_on_connect(state_, satellite_id, delivered, schedule_, wall_time);
      ex.note = out.note;
      ex.upload = out.action == FedAvgAction::kReceived ? UploadResult::kAccumulated
                                                        : UploadResult::kDiscarded;
      ex.epoch_completed = out.epoch_completed;
      ex.global_changed = out.epoch_completed;
    }
    // A satellite still owed the current round's model picks it up now; this
    // also covers the connection that just closed the round.
    const auto out = fedavg_on_connect(state_, satellite_id, nullptr, schedule_,
                                       wall_time);
    if (out.action == FedAvgAction::kSend) ex.sent_epoch = state_.epoch;
    return ex;
  }

  const ParamVector& global_model() const override { return state_.global; }
  std::int64_t epoch() const override { return state_.epoch; }
  std::string_view name() const override { return "fedavg"; }

 private:
  FedAvgSchedule schedule_;
  FedAvgState state_;
};

class FedAsyncStation final : public GroundStation {
 public:
  FedAsyncStation(ParamVector initial, double base_mix,
                  const StalenessConfig& staleness, double schedule_threshold,
                  NextPassFn next_pass)
      : state_(make_fedasync(std::move(initial), base_mix, staleness,
                             schedule_threshold)),
        next_pass_(std::move(next_pass)) {}

  Exchange on_connect(int satellite_id, const ParamVector* delivered,
                      double wall_time) override {
    Exchange ex;
    if (delivered != nullptr) {
      fedasync_update(state_, *delivered, wall_time);
      ex.upload = UploadResult::kIncorporated;
      ex.global_changed = true;
    }
    if (schedule_fedasync(state_, satellite_id, wall_time, next_pass_))
      ex.sent_epoch = state_.epoch;
    return ex;
  }

  const ParamVector& global_model() const override { return state_.global; }
  std::int64_t epoch() const override { return state_.epoch; }
  std::string_view name() const override { return "fedasync"; }

 private:
  FedAsyncState state_;
  NextPassFn next_pass_;
};

class FedSatStation final : public GroundStation {
 public:
  FedSatStation(ParamVector initial, const std::map<int, double>& weights)
      : state_(make_fedsat(std::move(initial), weights)) {}

  Exchange on_connect(int satellite_id, const ParamVector* delivered,
                      double /*wall_time*/) override {
    Exchange ex;
    if (delivered != nullptr) {
      fedsat_update(state_, satellite_id, *delivered);
      ex.upload = UploadResult::kIncorporated;
      ex.global_changed = true;
    }
    ex.sent_epoch = state_.epoch;  // full participation: always reassign
    return ex;
  }

  const ParamVector& global_model() const override { return state_.global; }
  std::int64_t epoch() const override { return state_.epoch; }
  std::string_view name() const override { return "fedsat"; }

 private:
  FedSatState state_;
};

}  // namespace

std::unique_ptr<GroundStation> make_fedavg_station(
    ParamVector initial, const std::map<int, std::int64_t>& sample_counts,
    FedAvgSchedule schedule) {
  return std::make_unique<FedAvgStation>(std::move(initial), sample_counts,
                                         std::move(schedule));
}

std::unique_ptr<GroundStation> make_fedasync_station(
    ParamVector initial, double base_mix, const StalenessConfig& staleness,
    double schedule_threshold, NextPassFn next_pass) {
  return std::make_unique<FedAsyncStation>(std::move(initial), base_mix, staleness,
                                           schedule_threshold, std::move(next_pass));
}

std::unique_ptr<GroundStation> make_fedsat_station(
    ParamVector initial, const std::map<int, double>& weights) {
  return std::make_unique<FedSatStation>(std::move(initial), weights);
}

}  // namespace leofl::fl
