#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "scmc/config.hpp"
#include "scmc/output.hpp"

namespace scmc {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Lines not starting with '#'.
std::string settings_of(const std::string& metadata) {
  std::istringstream in(metadata);
  std::string line, out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() != '#') out += line + '\n';
  }
  return out;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("scmc_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(SCMC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::vector<std::string> kSmall{"--K", "4", "--d", "2", "--r", "2",
                                      "--replicates", "3", "--L-target", "15",
                                      "--grid-points", "20"};

std::vector<std::string> with(std::vector<std::string> extra) {
  std::vector<std::string> args = kSmall;
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

TEST(ParseConfig, PresetFig3) {
  const auto cmd = parse_config({"--preset", "fig3"});
  const auto& e = cmd.experiment;
  EXPECT_EQ(e.base.workers, 5);
  EXPECT_EQ(e.redundancies, std::vector<int>{2});
  EXPECT_EQ(e.base.dim, 5);
  EXPECT_EQ(e.base.eta, 0.1);
  EXPECT_EQ(e.base.beta, 1.2);
  EXPECT_EQ(e.base.replicates, 50);
  EXPECT_EQ(e.base.grid_points, 200);
  EXPECT_EQ(e.schemes.size(), 3u);
  const auto labels = expand(e);
  ASSERT_EQ(labels.size(), 3u);
  EXPECT_EQ(labels[0].label, "plain");
  EXPECT_EQ(labels[0].config.redundancy, 1);
  EXPECT_EQ(labels[1].label, "grouped_r2");
  EXPECT_EQ(labels[2].label, "coded_r2");
}

TEST(ParseConfig, PresetFig4) {
  const auto e = parse_config({"--preset", "fig4"}).experiment;
  EXPECT_EQ(e.base.workers, 40);
  EXPECT_EQ(e.redundancies, (std::vector<int>{2, 4}));
  EXPECT_EQ(expand(e).size(), 5u);
  EXPECT_THROW(parse_config({"--preset", "fig9"}), ConfigError);
}

TEST(ParseConfig, GroupedFlags) {
  const auto e =
      parse_config({"--scheme", "grouped", "--K", "40", "--r", "4"}).experiment;
  const auto runs = expand(e);
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs[0].label, "grouped_r4");
  EXPECT_EQ(allocate(Scheme::grouped, runs[0].config.workers,
                     runs[0].config.redundancy)
                .groups.size(),
            10u);
}

TEST(ParseConfig, RedundancyAboveWorkers) {
  try {
    parse_config({"--K", "3", "--r", "5"});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& err) {
    EXPECT_NE(std::string(err.what()).find("r must satisfy 1 <= r <= K"),
              std::string::npos)
        << err.what();
  }
}

TEST(ParseConfig, Rejections) {
  EXPECT_THROW(parse_config({"--bogus", "1"}), ConfigError);
  EXPECT_THROW(parse_config({"--eta", "fast"}), ConfigError);
  EXPECT_THROW(parse_config({"--beta", "1.0"}), ConfigError);
  ExperimentConfig e;
  EXPECT_THROW(apply_setting(e, "colour", "red"), ConfigError);
  EXPECT_THROW(apply_config_text(e, "K = 4\nnot a setting\n"), ConfigError);
  try {
    apply_config_text(e, "K = 4\n\nfoo = 1\n", "x.cfg");
    FAIL();
  } catch (const ConfigError& err) {
    EXPECT_NE(std::string(err.what()).find("x.cfg:3"), std::string::npos);
  }
}

TEST(ParseConfig, FlagsOverrideFileOverridesPreset) {
  const auto path = fs::temp_directory_path() / "scmc_cli_override.cfg";
  {
    std::ofstream out(path);
    out << "# comment\nK = 7\neta = 0.3\n";
  }
  const auto e = parse_config({"--preset", "fig3", "--config", path.string(),
                               "--eta", "0.5"})
                     .experiment;
  EXPECT_EQ(e.base.workers, 7);
  EXPECT_EQ(e.base.eta, 0.5);
  EXPECT_EQ(e.base.beta, 1.2);
  fs::remove(path);
}

TEST(ParseConfig, HelpIsNotAnError) {
  EXPECT_THROW(parse_config({"--help"}), HelpRequested);
}

TEST(ConfigText, RoundTrip) {
  auto e = parse_config({"--preset", "fig4", "--dead-workers", "1,5",
                         "--code", "frac", "--sigma2", "0.0125"})
               .experiment;
  const auto text = to_config_text(e);
  ExperimentConfig back;
  apply_config_text(back, text);
  EXPECT_EQ(to_config_text(back), text);
  EXPECT_EQ(back.base.dead_workers, (std::vector<int>{1, 5}));
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(Emit, WritesEveryFile) {
  const auto dir = scratch("emit");
  const auto cmd = parse_config(with({}));
  emit_results(run_experiment(cmd.experiment), dir);
  for (const char* name :
       {"plain.csv", "grouped_r2.csv", "coded_r2.csv", "runs.csv",
        "metadata.txt"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  const auto plain = slurp(dir / "plain.csv");
  EXPECT_EQ(plain.rfind("time,mean_err,std_err,n_runs_defined\n", 0), 0u);
  EXPECT_EQ(count_lines(plain), 21u);
  const auto runs = slurp(dir / "runs.csv");
  EXPECT_EQ(runs.rfind("scheme,run,l,time,err\n", 0), 0u);
  EXPECT_EQ(count_lines(runs), 1u + 3u * 3u * 15u);
  fs::remove_all(dir);
}

TEST(Emit, TwoHundredGridRows) {
  const auto dir = scratch("grid");
  auto cmd = parse_config(with({"--scheme", "plain", "--grid-points", "200"}));
  emit_results(run_experiment(cmd.experiment), dir);
  EXPECT_EQ(count_lines(slurp(dir / "plain.csv")), 201u);
  fs::remove_all(dir);
}

TEST(Emit, ZeroProductionWritesHeaderAndNote) {
  const auto dir = scratch("zero");
  auto cmd = parse_config(with({"--scheme", "plain", "--dead-workers", "0"}));
  emit_results(run_experiment(cmd.experiment), dir);
  EXPECT_EQ(slurp(dir / "plain.csv"), "time,mean_err,std_err,n_runs_defined\n");
  EXPECT_EQ(slurp(dir / "runs.csv"), "scheme,run,l,time,err\n");
  EXPECT_NE(slurp(dir / "metadata.txt").find("no globals produced"),
            std::string::npos);
  fs::remove_all(dir);
}

TEST(Emit, MetadataReproducesRun) {
  const auto first = scratch("meta_a");
  const auto second = scratch("meta_b");
  const auto cmd = parse_config(with({"--seed", "11"}));
  emit_results(run_experiment(cmd.experiment), first);
  const auto again =
      parse_config({"--config", (first / "metadata.txt").string()});
  emit_results(run_experiment(again.experiment), second);
  for (const char* name :
       {"plain.csv", "grouped_r2.csv", "coded_r2.csv", "runs.csv",
        "metadata.txt"}) {
    EXPECT_EQ(slurp(first / name), slurp(second / name)) << name;
  }
  fs::remove_all(first);
  fs::remove_all(second);
}

TEST(Binary, RerunIsByteIdentical) {
  const auto a = scratch("bin_a");
  const auto b = scratch("bin_b");
  std::string flags;
  for (const auto& s : kSmall) flags += s + " ";
  ASSERT_EQ(run_cli(flags + "--out " + a.string()), 0);
  ASSERT_EQ(run_cli(flags + "--out " + b.string()), 0);
  for (const char* name : {"plain.csv", "coded_r2.csv", "runs.csv"}) {
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
  const auto c = scratch("bin_c");
  ASSERT_EQ(run_cli("--config " + (a / "metadata.txt").string() + " --out " +
                    c.string()),
            0);
  EXPECT_EQ(slurp(a / "metadata.txt"), slurp(c / "metadata.txt"));
  EXPECT_EQ(settings_of(slurp(a / "metadata.txt")),
            to_config_text(parse_config(kSmall).experiment));
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST(Binary, ExitCodes) {
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("--K 3 --r 5"), 1);
  EXPECT_EQ(run_cli("--nonsense 2"), 1);
  std::string flags;
  for (const auto& s : kSmall) flags += s + " ";
  EXPECT_EQ(run_cli(flags + "--out /proc/scmc_cannot_write"), 2);
}

}  // namespace
}  // namespace scmc
