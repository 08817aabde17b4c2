#include "leofl/simulator.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <queue>
#include <random>
#include <stdexcept>

#include "leofl/errors.hpp"

namespace leofl::sim {

bool event_before(const SimEvent& a, const SimEvent& b) {
  if (a.time != b.time) return a.time < b.time;
  if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  return a.satellite_id < b.satellite_id;
}

double compute_done_time(double contact_end, double next_contact_start,
                         const ComputePolicy& policy) {
  if (contact_end > next_contact_start)
    throw std::invalid_argument("compute_done_time: contact end after next contact");
  switch (policy.mode) {
    case ComputePolicy::Mode::kImmediate:
      return contact_end;
    case ComputePolicy::Mode::kFixedDuration:
      return contact_end + policy.duration_s;
  }
  return contact_end;
}

std::string strategy_name(StrategyConfig::Kind kind) {
  switch (kind) {
    case StrategyConfig::Kind::kFedAvg: return "fedavg";
    case StrategyConfig::Kind::kFedAsync: return "fedasync";
    case StrategyConfig::Kind::kFedSat: return "fedsat";
  }
  return "?";
}

namespace {

struct PendingTask {
  learn::ParamVector params;  // model received from the station
  std::int64_t tag = 0;
};

struct SatelliteRuntime {
  int id = 0;
  bool visible = false;
  bool computing = false;
  std::optional<PendingTask> task;             // running computation
  std::optional<learn::ParamVector> pending;   // finished, not yet uploaded
  double window_end = 0.0;                     // end of the currently open window
  std::size_t window_cursor = 0;               // next window index
  int uploads_this_window = 0;
  int downloads_this_window = 0;
  std::mt19937_64 rng;
};

struct EventCmp {
  bool operator()(const SimEvent& a, const SimEvent& b) const {
    return event_before(b, a);  // min-heap
  }
};

class EventLog {
 public:
  explicit EventLog(std::ostream* out) : out_(out) {
    if (out_) *out_ << "time_s,event,sat_id,epoch,detail\n";
  }
  void line(double t, const char* event, int sat, std::int64_t epoch,
            const std::string& detail = "") {
    if (!out_) return;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", t);
    *out_ << buf << ',' << event << ',' << sat << ',' << epoch << ',' << detail
          << '\n';
  }

 private:
  std::ostream* out_;
};

class Simulation {
 public:
  Simulation(const SimulationSetup& setup, std::ostream* event_log)
      : setup_(setup), log_(event_log) {}

  RunResult execute();

 private:
  void validate_setup() const;
  void build_runtimes();
  void build_station();
  void seed_contact_events();
  std::optional<double> next_rise(int sat, double after) const;
  void record_metrics(double t);
  void connect(SatelliteRuntime& rt, double t);
  void handle_compute_done(SatelliteRuntime& rt, double t);

  const SimulationSetup& setup_;
  EventLog log_;
  std::map<int, std::vector<orbital::ContactWindow>> windows_;
  std::map<int, SatelliteRuntime> runtimes_;
  std::unique_ptr<fl::GroundStation> station_;
  std::priority_queue<SimEvent, std::vector<SimEvent>, EventCmp> queue_;
  std::vector<MetricsRecord> metrics_;
};

void Simulation::validate_setup() const {
  if (setup_.horizon_s <= 0.0) throw ConfigError("simulation horizon must be positive");
  if (setup_.comm_delay_s < 0.0) throw ConfigError("exchange delay must be >= 0");
  if (setup_.policy.duration_s < 0.0) throw ConfigError("compute duration must be >= 0");
  if (setup_.satellites.empty()) throw ConfigError("no satellites configured");
  orbital::validate(setup_.ground_station);
  learn::validate(setup_.test);
  learn::validate(setup_.train);
  if (setup_.test.feature_dim != setup_.model.feature_dim ||
      setup_.test.class_count != setup_.model.class_count)
    throw ConfigError("test set shape does not match the model");
  for (const auto& sat : setup_.satellites) {
    orbital::validate(sat);
    const auto it = setup_.shards.find(sat.id);
    if (it == setup_.shards.end())
      throw ConfigError("satellite " + std::to_string(sat.id) + " has no dataset");
    learn::validate(it->second);
    if (it->second.feature_dim != setup_.model.feature_dim)
      throw ConfigError("shard shape does not match the model");
  }
}

void Simulation::build_runtimes() {
  for (const auto& sat : setup_.satellites) {
    SatelliteRuntime rt;
    rt.id = sat.id;
    // Stream-split: one generator per satellite, derived from the scenario
    // seed, so concurrent training schedules stay reproducible.
    std::seed_seq seq{static_cast<std::uint32_t>(setup_.seed),
                      static_cast<std::uint32_t>(setup_.seed >> 32),
                      static_cast<std::uint32_t>(sat.id) + 1u};
    rt.rng = std::mt19937_64(seq);
    runtimes_.emplace(sat.id, std::move(rt));
    windows_.emplace(sat.id, orbital::contact_windows(setup_.ground_station, sat,
                                                      0.0, setup_.horizon_s));
  }
}

std::optional<double> Simulation::next_rise(int sat, double after) const {
  const auto& ws = windows_.at(sat);
  for (const auto& w : ws)
    if (w.rise_s > after) return w.rise_s;
  return std::nullopt;
}

void Simulation::build_station() {
  learn::ParamVector initial = setup_.model.zero_params();
  switch (setup_.strategy.kind) {
    case StrategyConfig::Kind::kFedAvg: {
      std::map<int, std::int64_t> counts;
      std::vector<int> ids;
      for (const auto& [id, shard] : setup_.shards) {
        counts[id] = shard.size();
        ids.push_back(id);
      }
      station_ = fl::make_fedavg_station(std::move(initial), counts,
                                         fl::schedule_fedavg(ids));
      break;
    }
    case StrategyConfig::Kind::kFedAsync: {
      const double delay = setup_.comm_delay_s;
      auto next_pass = [this, delay](int sat, double after) {
        const auto rise = next_rise(sat, after);
        if (!rise) return std::optional<double>{};
        return std::optional<double>{*rise + delay};
      };
      station_ = fl::make_fedasync_station(
          std::move(initial), setup_.strategy.base_mix, setup_.strategy.staleness,
          setup_.strategy.schedule_threshold, next_pass);
      break;
    }
    case StrategyConfig::Kind::kFedSat: {
      std::int64_t total = 0;
      for (const auto& [id, shard] : setup_.shards) total += shard.size();
      std::map<int, double> weights;
      for (const auto& [id, shard] : setup_.shards)
        weights[id] = static_cast<double>(shard.size()) / static_cast<double>(total);
      station_ = fl::make_fedsat_station(std::move(initial), weights);
      break;
    }
  }
}

void Simulation::seed_contact_events() {
  for (const auto& [id, ws] : windows_) {
    for (const auto& w : ws) {
      queue_.push({w.rise_s, EventKind::kContactStart, id});
      queue_.push({w.set_s, EventKind::kContactEnd, id});
    }
  }
}

void Simulation::record_metrics(double t) {
  const auto eval = learn::evaluate(setup_.model, station_->global_model(), setup_.test);
  metrics_.push_back({t, station_->epoch(), eval.top1_accuracy, eval.mean_loss});
}

void Simulation::connect(SatelliteRuntime& rt, double t) {
  if (!rt.visible || rt.computing) return;

  const double delay = setup_.comm_delay_s;
  const bool has_upload = rt.pending.has_value();
  const double upload_done = t + (has_upload ? delay : 0.0);
  if (upload_done > rt.window_end) {
    log_.line(t, "EXCHANGE_SKIPPED", rt.id, station_->epoch(),
              "pass too short for transfer");
    return;
  }
  // Whether a handed-out model would finish transferring inside this pass.
  const bool can_receive = upload_done + delay <= rt.window_end;

  const learn::ParamVector* delivered = has_upload ? &*rt.pending : nullptr;
  const std::int64_t tag = has_upload ? rt.pending->source_epoch : 0;
  const auto ex = station_->on_connect(rt.id, delivered, upload_done);

  if (has_upload) {
    rt.pending.reset();
    rt.uploads_this_window += 1;
    assert(rt.uploads_this_window <= 1);
    switch (ex.upload) {
      case fl::UploadResult::kIncorporated:
        log_.line(upload_done, "UPLOAD", rt.id, station_->epoch(),
                  "tag=" + std::to_string(tag));
        break;
      case fl::UploadResult::kAccumulated:
        log_.line(upload_done, "UPLOAD", rt.id, station_->epoch(),
                  "tag=" + std::to_string(tag) + " accumulated");
        break;
      default:
        log_.line(upload_done, "UPLOAD_DISCARDED", rt.id, station_->epoch(),
                  ex.note ? ex.note : "");
        break;
    }
  }
  if (ex.global_changed) {
    if (ex.epoch_completed)
      log_.line(upload_done, "EPOCH_COMPLETE", rt.id, station_->epoch(), "");
    record_metrics(upload_done);
  }

  if (ex.sent_epoch.has_value()) {
    if (!can_receive) {
      log_.line(t, "DOWNLOAD_SKIPPED", rt.id, station_->epoch(),
                "pass too short for transfer");
      return;
    }
    rt.downloads_this_window += 1;
    assert(rt.downloads_this_window <= 1);
    learn::ParamVector model = station_->global_model();
    model.source_epoch = *ex.sent_epoch;
    rt.task = PendingTask{std::move(model), *ex.sent_epoch};
    rt.computing = true;
    const double next =
        next_rise(rt.id, rt.window_end)
            .value_or(std::numeric_limits<double>::infinity());
    const double done = compute_done_time(rt.window_end, next, setup_.policy);
    if (done > next && std::isfinite(next))
      log_.line(t, "COMPUTE_OVERRUN", rt.id, station_->epoch(),
                "result deferred past next pass");
    log_.line(upload_done + delay, "DOWNLOAD", rt.id, station_->epoch(),
              "tag=" + std::to_string(*ex.sent_epoch));
    if (done <= setup_.horizon_s)
      queue_.push({done, EventKind::kComputeDone, rt.id});
  } else {
    log_.line(t, "DECLINED", rt.id, station_->epoch(), "no task assigned");
  }
}

void Simulation::handle_compute_done(SatelliteRuntime& rt, double t) {
  if (!rt.task.has_value()) return;
  PendingTask task = std::move(*rt.task);
  rt.task.reset();
  rt.computing = false;
  // Training happens lazily at the commit point; event order is
  // deterministic, so the per-satellite RNG stream is too.
  learn::ParamVector result =
      learn::local_train(setup_.model, task.params, task.tag,
                         setup_.shards.at(rt.id), setup_.train, rt.rng);
  rt.pending = std::move(result);
  log_.line(t, "COMPUTE_DONE", rt.id, station_->epoch(),
            "tag=" + std::to_string(task.tag));
  // Finished inside a pass: reconnect immediately, as long as this window's
  // exchange budget is untouched.
  if (rt.visible && rt.uploads_this_window == 0) connect(rt, t);
}

RunResult Simulation::execute() {
  validate_setup();
  build_runtimes();
  build_station();
  seed_contact_events();

  record_metrics(0.0);  // initial model before any contact

  while (!queue_.empty()) {
    const SimEvent ev = queue_.top();
    queue_.pop();
    if (ev.time > setup_.horizon_s) break;
    auto& rt = runtimes_.at(ev.satellite_id);
    switch (ev.kind) {
      case EventKind::kContactStart:
        rt.visible = true;
        rt.uploads_this_window = 0;
        rt.downloads_this_window = 0;
        rt.window_end = windows_.at(rt.id)[rt.window_cursor].set_s;
        log_.line(ev.time, "WINDOW_START", rt.id, station_->epoch(), "");
        if (rt.computing)
          log_.line(ev.time, "CONNECT_SKIPPED", rt.id, station_->epoch(), "busy");
        else
          connect(rt, ev.time);
        break;
      case EventKind::kContactEnd:
        rt.visible = false;
        rt.window_cursor += 1;
        log_.line(ev.time, "WINDOW_END", rt.id, station_->epoch(), "");
        break;
      case EventKind::kComputeDone:
        handle_compute_done(rt, ev.time);
        break;
    }
  }

  RunResult result;
  result.strategy = std::string(station_->name());
  result.metrics = std::move(metrics_);
  result.windows = std::move(windows_);
  return result;
}

}  // namespace

RunResult run(const SimulationSetup& setup, std::ostream* event_log) {
  Simulation simulation(setup, event_log);
  return simulation.execute();
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& records,
                       const std::string& strategy) {
  out << "time_s,epoch,strategy,accuracy,loss\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.6g,%lld,%s,%.6g,%.6g\n", r.time_s,
                  static_cast<long long>(r.epoch), strategy.c_str(), r.accuracy,
                  r.loss);
    out << buf;
  }
}

}  // namespace leofl::sim
