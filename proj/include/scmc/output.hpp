#ifndef SCMC_OUTPUT_HPP
#define SCMC_OUTPUT_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "scmc/config.hpp"
#include "scmc/engine.hpp"

namespace scmc {

struct SchemeResult {
  std::string label;
  RunConfig config;
  std::vector<ErrorTrace> traces;
  AggregateTrace aggregate;
};

struct ExperimentResults {
  ExperimentConfig experiment;
  double grid_t_max = 0.0;
  std::vector<SchemeResult> schemes;
};

/// Runs every expanded configuration (replicates in parallel) and
/// aggregates each on a common grid. With an infinite t-max the grid spans
/// up to the latest production time seen in any run.
ExperimentResults run_experiment(const ExperimentConfig& experiment);

/// Writes `<label>.csv` per scheme, `runs.csv` and `metadata.txt` into
/// `out_dir` (created if missing). Throws std::runtime_error naming the path
/// on I/O failure.
void emit_results(const ExperimentResults& results,
                  const std::filesystem::path& out_dir);

}  // namespace scmc

#endif  // SCMC_OUTPUT_HPP
