#ifndef SCMC_ENGINE_HPP
#define SCMC_ENGINE_HPP

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "scmc/coding.hpp"
#include "scmc/model.hpp"
#include "scmc/protocols.hpp"
#include "scmc/timing.hpp"

namespace scmc {

inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

/// Default regularization added to every covariance estimate.
inline constexpr double kDefaultSigma2 = 1e-3;

struct RunConfig {
  int workers = 5;
  int redundancy = 1;
  int dim = 5;
  Scheme scheme = Scheme::plain;
  CodeConstruction code = CodeConstruction::cyclic;
  TimingKind timing = TimingKind::pareto;
  double eta = 0.1;
  double beta = 1.2;
  double sigma2 = kDefaultSigma2;
  std::uint64_t seed = 1;
  /// Stop once this many globals exist; 0 means no count limit.
  long target_globals = 100;
  /// Simulated-time budget.
  double t_max = kInfiniteTime;
  int replicates = 1;
  int grid_points = 200;
  /// Workers that never finish a batch.
  std::vector<int> dead_workers;
  /// Optional per-worker multiplier on every batch time (empty = all 1).
  std::vector<double> worker_time_scale;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  ComputeTimeModel time_model() const {
    return {timing, eta, beta, redundancy};
  }
};

struct TracePoint {
  double time = 0.0;
  long globals = 0;  // L(T^l) after this production event
  double err = 0.0;
};

/// err(T^l) at every production event of one run.
struct ErrorTrace {
  int run = 0;
  std::vector<TracePoint> points;

  bool zero_production() const { return points.empty(); }
};

/// Step (last-value) interpolation; nullopt before the first production.
std::optional<double> value_at(const ErrorTrace& trace, double t);

/// Owns everything shared by the replicates of one configuration: the
/// subposteriors, the analytic test-function table and the code. Replicates
/// only read it, so they can run concurrently.
class Simulation {
 public:
  explicit Simulation(RunConfig config);

  const RunConfig& config() const { return config_; }
  std::span<const GaussianSubposterior> subposteriors() const {
    return subs_;
  }
  const GlobalPosterior& posterior() const { return posterior_; }
  const TestFunctionTable& table() const { return table_; }
  /// Null unless the scheme is coded.
  const CodeScheme* code() const { return code_.get(); }

  std::unique_ptr<Protocol> make_protocol(int run) const;

  /// One replicate. Events are processed in (time, worker, batch) order;
  /// all events sharing a timestamp are absorbed before the server tries to
  /// produce, so one trace point is recorded per distinct production time.
  ErrorTrace run_once(int run) const;

  /// run_once with a caller-owned protocol, which can be inspected after.
  ErrorTrace drive(Protocol& protocol, int run) const;

  /// Replicates 0..replicates-1 in parallel (OpenMP when available),
  /// returned in run-id order.
  std::vector<ErrorTrace> run_replicates() const;

  /// Sequential reference for run_replicates.
  std::vector<ErrorTrace> run_replicates_serial() const;

 private:
  RunConfig config_;
  std::vector<GaussianSubposterior> subs_;
  GlobalPosterior posterior_;
  TestFunctionTable table_;
  std::shared_ptr<const CodeScheme> code_;
};

inline ErrorTrace run_once(const RunConfig& config, int run) {
  return Simulation(config).run_once(run);
}

/// Cross-run statistics on a uniform grid over [0, t_max].
struct AggregateTrace {
  std::vector<double> grid;
  std::vector<double> mean_err;  // NaN where no run is defined
  std::vector<double> std_err;   // population convention
  std::vector<int> runs_defined;

  /// Half-width of the plotted error band.
  double band_halfwidth(std::size_t i) const { return 0.15 * std_err[i]; }
};

AggregateTrace aggregate_runs(std::span<const ErrorTrace> traces,
                              int grid_points, double t_max);

}  // namespace scmc

#endif  // SCMC_ENGINE_HPP
