#include "scmc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <queue>
#include <stdexcept>
#include <string>

#include "scmc/rng.hpp"

namespace scmc {
namespace {

struct BatchEvent {
  double time;
  int worker;
  long batch;

  bool operator>(const BatchEvent& o) const {
    if (time != o.time) return time > o.time;
    if (worker != o.worker) return worker > o.worker;
    return batch > o.batch;
  }
};

}  // namespace

void RunConfig::validate() const {
  if (workers < 1) throw ConfigError("K must be >= 1");
  if (dim < 1) throw ConfigError("d must be >= 1");
  if (redundancy < 1 || redundancy > workers) {
    throw ConfigError("r must satisfy 1 <= r <= K (got r=" +
                      std::to_string(redundancy) +
                      ", K=" + std::to_string(workers) + ")");
  }
  if (scheme == Scheme::plain && redundancy != 1) {
    throw ConfigError("plain scheme requires r = 1");
  }
  if (scheme == Scheme::coded &&
      code == CodeConstruction::fractional_repetition &&
      workers % redundancy != 0) {
    throw ConfigError("code frac requires r to divide K");
  }
  time_model().validate();
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw ConfigError("sigma2 must be a finite value > 0");
  }
  if (target_globals < 0) throw ConfigError("L-target must be >= 0");
  if (!(t_max > 0.0)) throw ConfigError("t-max must be > 0");
  if (target_globals == 0 && !std::isfinite(t_max)) {
    throw ConfigError("L-target = 0 requires a finite t-max");
  }
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (grid_points < 2) throw ConfigError("grid-points must be >= 2");
  for (int k : dead_workers) {
    if (k < 0 || k >= workers) {
      throw ConfigError("dead worker id " + std::to_string(k) +
                        " outside [0, K)");
    }
  }
  if (!worker_time_scale.empty()) {
    if (static_cast<int>(worker_time_scale.size()) != workers) {
      throw ConfigError("worker_time_scale must have K entries");
    }
    for (double s : worker_time_scale) {
      if (!(s > 0.0)) throw ConfigError("worker_time_scale entries must be > 0");
    }
  }
}

std::optional<double> value_at(const ErrorTrace& trace, double t) {
  const auto it = std::upper_bound(
      trace.points.begin(), trace.points.end(), t,
      [](double value, const TracePoint& p) { return value < p.time; });
  if (it == trace.points.begin()) return std::nullopt;
  return std::prev(it)->err;
}

Simulation::Simulation(RunConfig config) : config_(std::move(config)) {
  config_.validate();
  subs_ = make_toeplitz_subposteriors(config_.workers, config_.dim);
  posterior_ = global_posterior(subs_);
  table_ = second_moment_table(posterior_);
  if (config_.scheme == Scheme::coded) {
    code_ = std::make_shared<const CodeScheme>(CodeScheme::build(
        config_.workers, config_.redundancy, config_.code, config_.seed));
  }
}

std::unique_ptr<Protocol> Simulation::make_protocol(int run) const {
  SampleSource source(subs_, config_.seed, static_cast<std::uint64_t>(run));
  switch (config_.scheme) {
    case Scheme::plain:
      return std::make_unique<CmcProtocol>(config_.workers, source,
                                           config_.sigma2);
    case Scheme::grouped:
      return std::make_unique<GroupedProtocol>(
          allocate(Scheme::grouped, config_.workers, config_.redundancy),
          source, config_.sigma2);
    case Scheme::coded:
      return std::make_unique<CodedProtocol>(*code_, source, config_.sigma2);
  }
  throw std::logic_error("unknown scheme");
}

ErrorTrace Simulation::run_once(int run) const {
  auto protocol = make_protocol(run);
  return drive(*protocol, run);
}

ErrorTrace Simulation::drive(Protocol& protocol, int run) const {
  ErrorTrace trace;
  trace.run = run;
  const int n = config_.workers;

  std::vector<char> alive(static_cast<std::size_t>(n), 1);
  std::vector<double> scale(static_cast<std::size_t>(n), 1.0);
  if (!config_.worker_time_scale.empty()) scale = config_.worker_time_scale;
  for (int k : config_.dead_workers) alive[k] = 0;
  for (int k = 0; k < n; ++k) {
    if (!std::isfinite(scale[k])) alive[k] = 0;
  }
  if (!protocol.can_progress(alive)) return trace;

  const ComputeTimeModel model = config_.time_model();
  std::vector<Stream> timing;
  timing.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    timing.push_back(make_stream({static_cast<std::uint64_t>(StreamTag::timing),
                                  config_.seed, static_cast<std::uint64_t>(run),
                                  static_cast<std::uint64_t>(k)}));
  }

  std::priority_queue<BatchEvent, std::vector<BatchEvent>, std::greater<>>
      queue;
  for (int k = 0; k < n; ++k) {
    if (alive[k]) {
      queue.push({draw_batch_time(model, timing[k]) * scale[k], k, 1});
    }
  }

  double clock = 0.0;
  while (!queue.empty()) {
    const BatchEvent event = queue.top();
    if (event.time > config_.t_max) break;
    queue.pop();
    if (event.time < clock) throw std::logic_error("event out of time order");
    clock = event.time;

    protocol.on_batch(event.worker, event.batch);
    queue.push({event.time + draw_batch_time(model, timing[event.worker]) *
                                 scale[event.worker],
                event.worker, event.batch + 1});
    if (queue.top().time == event.time) continue;

    if (protocol.try_produce() > 0) {
      trace.points.push_back(
          {event.time, protocol.produced(),
           relative_error(protocol.global_second_moment(), table_)});
      if (config_.target_globals > 0 &&
          protocol.produced() >= config_.target_globals) {
        break;
      }
    }
  }
  return trace;
}

std::vector<ErrorTrace> Simulation::run_replicates_serial() const {
  std::vector<ErrorTrace> traces;
  traces.reserve(static_cast<std::size_t>(config_.replicates));
  for (int run = 0; run < config_.replicates; ++run) {
    traces.push_back(run_once(run));
  }
  return traces;
}

std::vector<ErrorTrace> Simulation::run_replicates() const {
  const int count = config_.replicates;
  std::vector<ErrorTrace> traces(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic, 1)
  for (int run = 0; run < count; ++run) {
    try {
      traces[run] = run_once(run);
    } catch (...) {
      failures[run] = std::current_exception();
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return traces;
}

AggregateTrace aggregate_runs(std::span<const ErrorTrace> traces,
                              int grid_points, double t_max) {
  if (grid_points < 2) throw ConfigError("grid-points must be >= 2");
  if (!std::isfinite(t_max) || !(t_max > 0.0)) {
    throw ConfigError("aggregation needs a finite t_max > 0");
  }
  AggregateTrace agg;
  const auto n = static_cast<std::size_t>(grid_points);
  agg.grid.resize(n);
  agg.mean_err.resize(n);
  agg.std_err.resize(n);
  agg.runs_defined.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t_max * static_cast<double>(i) /
                     static_cast<double>(grid_points - 1);
    agg.grid[i] = t;
    double sum = 0.0;
    int defined = 0;
    std::vector<double> values;
    values.reserve(traces.size());
    for (const auto& trace : traces) {
      if (auto v = value_at(trace, t)) {
        values.push_back(*v);
        sum += *v;
        ++defined;
      }
    }
    agg.runs_defined[i] = defined;
    if (defined == 0) {
      agg.mean_err[i] = std::numeric_limits<double>::quiet_NaN();
      agg.std_err[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double mean = sum / defined;
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    agg.mean_err[i] = mean;
    agg.std_err[i] = std::sqrt(sq / defined);
  }
  return agg;
}

}  // namespace scmc
