#include "scmc/output.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace scmc {
namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

ExperimentResults run_experiment(const ExperimentConfig& experiment) {
  ExperimentResults results;
  results.experiment = experiment;
  for (const auto& lc : expand(experiment)) {
    Simulation sim(lc.config);
    results.schemes.push_back({lc.label, lc.config, sim.run_replicates(), {}});
  }

  double t_max = experiment.base.t_max;
  if (!std::isfinite(t_max)) {
    t_max = 0.0;
    for (const auto& s : results.schemes) {
      for (const auto& tr : s.traces) {
        if (!tr.points.empty()) t_max = std::max(t_max, tr.points.back().time);
      }
    }
    if (!(t_max > 0.0)) t_max = 1.0;
  }
  results.grid_t_max = t_max;
  for (auto& s : results.schemes) {
    s.aggregate =
        aggregate_runs(s.traces, experiment.base.grid_points, t_max);
  }
  return results;
}

void emit_results(const ExperimentResults& results,
                  const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create " + out_dir.string() + ": " +
                             ec.message());
  }

  for (const auto& s : results.schemes) {
    const auto path = out_dir / (s.label + ".csv");
    auto out = open_for_write(path);
    out << "time,mean_err,std_err,n_runs_defined\n";
    if (std::any_of(s.traces.begin(), s.traces.end(),
                    [](const ErrorTrace& t) { return !t.zero_production(); })) {
      const auto& a = s.aggregate;
      for (std::size_t i = 0; i < a.grid.size(); ++i) {
        out << format_double(a.grid[i]) << ',' << format_double(a.mean_err[i])
            << ',' << format_double(a.std_err[i]) << ',' << a.runs_defined[i]
            << '\n';
      }
    }
    finish(out, path);
  }

  {
    const auto path = out_dir / "runs.csv";
    auto out = open_for_write(path);
    out << "scheme,run,l,time,err\n";
    for (const auto& s : results.schemes) {
      for (const auto& tr : s.traces) {
        for (const auto& p : tr.points) {
          out << s.label << ',' << tr.run << ',' << p.globals << ','
              << format_double(p.time) << ',' << format_double(p.err) << '\n';
        }
      }
    }
    finish(out, path);
  }

  const auto path = out_dir / "metadata.txt";
  auto out = open_for_write(path);
  out << "# scmc " << SCMC_VERSION << " experiment metadata\n"
      << "# re-run with: scmc --config metadata.txt --out <dir>\n";
  if (!results.experiment.preset.empty()) {
    out << "# preset: " << results.experiment.preset << '\n';
  }
  out << "# std_err: population standard deviation across runs defined at "
         "each grid time\n"
      << "# band half-width: 0.15 * std_err\n"
      << "# grid: " << results.experiment.base.grid_points
      << " uniform points on [0, " << format_double(results.grid_t_max)
      << "], step interpolation\n";
  for (const auto& s : results.schemes) {
    out << "# " << s.label << ": r=" << s.config.redundancy;
    if (s.config.scheme == Scheme::coded) {
      out << ", code="
          << (s.config.code == CodeConstruction::cyclic ? "cyclic" : "frac")
          << " (built from seed " << s.config.seed << ")";
    }
    const bool all_empty =
        std::all_of(s.traces.begin(), s.traces.end(),
                    [](const ErrorTrace& t) { return t.zero_production(); });
    if (all_empty) out << ", no globals produced in any run";
    out << '\n';
  }
  out << to_config_text(results.experiment);
  finish(out, path);
}

}  // namespace scmc
