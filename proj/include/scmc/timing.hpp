#ifndef SCMC_TIMING_HPP
#define SCMC_TIMING_HPP

#include "scmc/types.hpp"

namespace scmc {

enum class TimingKind { pareto, deterministic };

/// Per-batch computing time at a worker holding `redundancy` shards. Both
/// kinds have mean eta * redundancy.
struct ComputeTimeModel {
  TimingKind kind = TimingKind::pareto;
  double eta = 0.1;
  double beta = 1.2;
  int redundancy = 1;

  /// Throws ConfigError on eta <= 0, redundancy < 1, or (pareto) beta <= 1.
  void validate() const;

  /// Pareto scale eta * r * (beta - 1) / beta; for deterministic, eta * r.
  double scale() const;

  /// Analytic mean; equals eta * r for both kinds.
  double mean() const;

  /// Pareto median scale * 2^{1/beta}; for deterministic, eta * r.
  double median() const;
};

/// One batch duration. Pareto draws use the inverse CDF of a single uniform
/// variate, so every draw consumes the same amount of the stream.
double draw_batch_time(const ComputeTimeModel& model, Stream& stream);

}  // namespace scmc

#endif  // SCMC_TIMING_HPP
