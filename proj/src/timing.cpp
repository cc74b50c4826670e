#include "scmc/timing.hpp"

#include <cmath>

namespace scmc {

void ComputeTimeModel::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ConfigError("eta must be a finite value > 0");
  }
  if (redundancy < 1) throw ConfigError("redundancy r must be >= 1");
  if (kind == TimingKind::pareto && (!(beta > 1.0) || !std::isfinite(beta))) {
    throw ConfigError("Pareto shape beta must be > 1");
  }
}

double ComputeTimeModel::scale() const {
  const double base = eta * redundancy;
  if (kind == TimingKind::deterministic) return base;
  return base * (beta - 1.0) / beta;
}

double ComputeTimeModel::mean() const {
  if (kind == TimingKind::deterministic) return eta * redundancy;
  return scale() * beta / (beta - 1.0);
}

double ComputeTimeModel::median() const {
  if (kind == TimingKind::deterministic) return eta * redundancy;
  return scale() * std::pow(2.0, 1.0 / beta);
}

double draw_batch_time(const ComputeTimeModel& model, Stream& stream) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double u = uniform(stream);
  if (model.kind == TimingKind::deterministic) return model.scale();
  // 1 - u lies in (0, 1], so the draw is >= scale.
  return model.scale() * std::pow(1.0 - u, -1.0 / model.beta);
}

}  // namespace scmc
