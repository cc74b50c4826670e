#ifndef SCMC_CONFIG_HPP
#define SCMC_CONFIG_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "scmc/engine.hpp"

namespace scmc {

/// A set of runs sharing every parameter except scheme and redundancy.
/// Plain CMC always runs with r = 1; grouped and coded run once per entry
/// of `redundancies`.
struct ExperimentConfig {
  std::string preset;
  std::vector<Scheme> schemes{Scheme::plain, Scheme::grouped, Scheme::coded};
  std::vector<int> redundancies{2};
  RunConfig base;
};

struct LabeledConfig {
  std::string label;  // e.g. "plain", "grouped_r4"
  RunConfig config;
};

/// One validated RunConfig per (scheme, r) in scheme-major order.
std::vector<LabeledConfig> expand(const ExperimentConfig& experiment);

/// Throws ConfigError for an unknown preset name. Known: fig3, fig4.
ExperimentConfig preset(std::string_view name);

/// Applies one `key = value` setting (keys are the flag names without the
/// leading dashes). Throws ConfigError on unknown keys or bad values.
void apply_setting(ExperimentConfig& experiment, std::string_view key,
                   std::string_view value);

/// Parses a flat `key = value` file; `#` starts a comment line.
void apply_config_text(ExperimentConfig& experiment, std::string_view text,
                       std::string_view origin = "config");

/// Canonical config text; re-applying it reproduces `experiment`.
std::string to_config_text(const ExperimentConfig& experiment);

/// Thrown by parse_config for --help; carries the usage text.
struct HelpRequested {
  std::string text;
};

struct Command {
  ExperimentConfig experiment;
  std::filesystem::path out_dir = "results";
};

/// Resolves presets, an optional --config file and flags, in that order of
/// increasing precedence, then validates every expanded configuration.
/// Throws ConfigError with a message naming the offending key.
Command parse_config(const std::vector<std::string>& args);

std::string scheme_name(Scheme scheme);
Scheme parse_scheme(std::string_view text);

/// Shortest decimal that round-trips; "inf", "-inf" and "nan" otherwise.
std::string format_double(double value);

}  // namespace scmc

#endif  // SCMC_CONFIG_HPP
