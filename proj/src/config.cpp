#include "scmc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

namespace scmc {
namespace {

constexpr std::string_view kKeys[] = {
    "scheme", "K",        "r",           "d",         "eta",          "beta",
    "sigma2", "seed",     "replicates",  "L-target",  "t-max",        "grid-points",
    "code",   "timing",   "dead-workers"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value,
                            std::string_view expected) {
  throw ConfigError("invalid value '" + std::string(value) + "' for " +
                    std::string(key) + ": expected " + std::string(expected));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value,
               std::string_view expected) {
  value = trim(value);
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) {
    bad_value(key, value, expected);
  }
  return out;
}

std::vector<std::string_view> split_list(std::string_view value) {
  std::vector<std::string_view> items;
  value = trim(value);
  if (value.empty()) return items;
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    items.push_back(trim(value.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

CodeConstruction parse_code(std::string_view v) {
  if (v == "cyclic") return CodeConstruction::cyclic;
  if (v == "frac") return CodeConstruction::fractional_repetition;
  bad_value("code", v, "cyclic or frac");
}

TimingKind parse_timing(std::string_view v) {
  if (v == "pareto") return TimingKind::pareto;
  if (v == "deterministic") return TimingKind::deterministic;
  bad_value("timing", v, "pareto or deterministic");
}

void validate_experiment(const ExperimentConfig& e) {
  if (e.schemes.empty()) throw ConfigError("scheme list is empty");
  if (e.redundancies.empty()) throw ConfigError("r list is empty");
  for (int r : e.redundancies) {
    if (r < 1 || r > e.base.workers) {
      throw ConfigError("r must satisfy 1 <= r <= K (got r=" +
                        std::to_string(r) +
                        ", K=" + std::to_string(e.base.workers) + ")");
    }
  }
  for (const auto& lc : expand(e)) lc.config.validate();
}

}  // namespace

std::string scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::plain: return "plain";
    case Scheme::grouped: return "grouped";
    case Scheme::coded: return "coded";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view text) {
  if (text == "plain") return Scheme::plain;
  if (text == "grouped") return Scheme::grouped;
  if (text == "coded") return Scheme::coded;
  bad_value("scheme", text, "plain, grouped or coded");
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::vector<LabeledConfig> expand(const ExperimentConfig& experiment) {
  std::vector<LabeledConfig> out;
  for (Scheme scheme : experiment.schemes) {
    if (scheme == Scheme::plain) {
      LabeledConfig lc{"plain", experiment.base};
      lc.config.scheme = Scheme::plain;
      lc.config.redundancy = 1;
      out.push_back(std::move(lc));
      continue;
    }
    for (int r : experiment.redundancies) {
      LabeledConfig lc{scheme_name(scheme) + "_r" + std::to_string(r),
                       experiment.base};
      lc.config.scheme = scheme;
      lc.config.redundancy = r;
      out.push_back(std::move(lc));
    }
  }
  return out;
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig e;
  e.preset = std::string(name);
  e.schemes = {Scheme::plain, Scheme::grouped, Scheme::coded};
  e.base.dim = 5;
  e.base.eta = 0.1;
  e.base.beta = 1.2;
  e.base.timing = TimingKind::pareto;
  e.base.code = CodeConstruction::cyclic;
  e.base.replicates = 50;
  e.base.grid_points = 200;
  e.base.target_globals = 0;
  if (name == "fig3") {
    e.base.workers = 5;
    e.redundancies = {2};
    e.base.t_max = 20.0;
  } else if (name == "fig4") {
    e.base.workers = 40;
    e.redundancies = {2, 4};
    e.base.t_max = 40.0;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) +
                      "' (known: fig3, fig4)");
  }
  return e;
}

void apply_setting(ExperimentConfig& e, std::string_view key,
                   std::string_view raw) {
  const std::string_view value = trim(raw);
  RunConfig& c = e.base;
  if (key == "scheme") {
    e.schemes.clear();
    for (auto item : split_list(value)) e.schemes.push_back(parse_scheme(item));
    if (e.schemes.empty()) bad_value(key, value, "plain, grouped or coded");
  } else if (key == "K") {
    c.workers = parse_number<int>(key, value, "an integer");
  } else if (key == "r") {
    e.redundancies.clear();
    for (auto item : split_list(value)) {
      e.redundancies.push_back(parse_number<int>(key, item, "an integer list"));
    }
    if (e.redundancies.empty()) bad_value(key, value, "an integer list");
  } else if (key == "d") {
    c.dim = parse_number<int>(key, value, "an integer");
  } else if (key == "eta") {
    c.eta = parse_number<double>(key, value, "a real number");
  } else if (key == "beta") {
    c.beta = parse_number<double>(key, value, "a real number");
  } else if (key == "sigma2") {
    c.sigma2 = parse_number<double>(key, value, "a real number");
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value, "an unsigned integer");
  } else if (key == "replicates") {
    c.replicates = parse_number<int>(key, value, "an integer");
  } else if (key == "L-target") {
    c.target_globals = parse_number<long>(key, value, "an integer");
  } else if (key == "t-max") {
    c.t_max = parse_number<double>(key, value, "a real number or inf");
  } else if (key == "grid-points") {
    c.grid_points = parse_number<int>(key, value, "an integer");
  } else if (key == "code") {
    c.code = parse_code(value);
  } else if (key == "timing") {
    c.timing = parse_timing(value);
  } else if (key == "dead-workers") {
    c.dead_workers.clear();
    for (auto item : split_list(value)) {
      c.dead_workers.push_back(
          parse_number<int>(key, item, "a list of worker ids"));
    }
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "'");
  }
}

void apply_config_text(ExperimentConfig& e, std::string_view text,
                       std::string_view origin) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto newline = text.find('\n', start);
    const auto line =
        trim(text.substr(start, newline == std::string_view::npos
                                    ? std::string_view::npos
                                    : newline - start));
    ++line_no;
    if (!line.empty() && line.front() != '#') {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) +
                          ": expected 'key = value'");
      }
      const auto key = trim(line.substr(0, eq));
      try {
        apply_setting(e, key, line.substr(eq + 1));
      } catch (const ConfigError& err) {
        throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) +
                          ": " + err.what());
      }
    }
    if (newline == std::string_view::npos) break;
    start = newline + 1;
  }
}

std::string to_config_text(const ExperimentConfig& e) {
  const RunConfig& c = e.base;
  auto join = [](const auto& items, auto&& fmt) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += ',';
      out += fmt(items[i]);
    }
    return out;
  };
  auto to_str = [](auto v) { return std::to_string(v); };
  std::ostringstream os;
  os << "scheme = " << join(e.schemes, scheme_name) << '\n'
     << "K = " << c.workers << '\n'
     << "r = " << join(e.redundancies, to_str) << '\n'
     << "d = " << c.dim << '\n'
     << "eta = " << format_double(c.eta) << '\n'
     << "beta = " << format_double(c.beta) << '\n'
     << "sigma2 = " << format_double(c.sigma2) << '\n'
     << "seed = " << c.seed << '\n'
     << "replicates = " << c.replicates << '\n'
     << "L-target = " << c.target_globals << '\n'
     << "t-max = " << format_double(c.t_max) << '\n'
     << "grid-points = " << c.grid_points << '\n'
     << "code = "
     << (c.code == CodeConstruction::cyclic ? "cyclic" : "frac") << '\n'
     << "timing = "
     << (c.timing == TimingKind::pareto ? "pareto" : "deterministic") << '\n'
     << "dead-workers = " << join(c.dead_workers, to_str) << '\n';
  return os.str();
}

Command parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Straggler-resilient consensus Monte Carlo simulator", "scmc"};
  std::string preset_name;
  std::string config_path;
  std::string out_dir = "results";
  app.add_option("--preset", preset_name, "Experiment preset (fig3, fig4)");
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--out", out_dir, "Output directory");

  std::vector<std::pair<std::string_view, std::string>> flag_values;
  flag_values.reserve(std::size(kKeys));
  for (auto key : kKeys) flag_values.emplace_back(key, std::string());
  std::vector<CLI::Option*> flag_opts;
  for (auto& [key, value] : flag_values) {
    flag_opts.push_back(app.add_option("--" + std::string(key), value)
                            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast));
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& err) {
    throw ConfigError(err.what());
  }

  Command cmd;
  if (!preset_name.empty()) cmd.experiment = preset(preset_name);
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read config file " + config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    apply_config_text(cmd.experiment, buf.str(), config_path);
  }
  for (std::size_t i = 0; i < flag_values.size(); ++i) {
    if (flag_opts[i]->count() > 0) {
      apply_setting(cmd.experiment, flag_values[i].first, flag_values[i].second);
    }
  }
  cmd.out_dir = out_dir;
  validate_experiment(cmd.experiment);
  return cmd;
}

}  // namespace scmc
