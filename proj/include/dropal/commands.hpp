#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dropal/data.hpp"

namespace dropal {

inline constexpr const char* kEngineVersion = "0.1.0";

/// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

struct RunOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::size_t> jobs;
  std::vector<std::string> overrides;
};

/// Runs an experiment from a config (or a previous run's manifest) and writes
/// config.json, manifest.json, metrics.csv, timings.csv, selections.csv,
/// ratio reports and final checkpoints into the output directory.
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);

struct DiagnoseOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path dataset;
  std::string target = "y";
  char delimiter = ',';
  std::size_t runs = 25;
  std::optional<double> dropout;  // defaults to the network's rate
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";
};

int cmd_diagnose(const DiagnoseOptions& opts, std::ostream& out, std::ostream& err);

struct ProfileOptions {
  std::vector<std::string> inputs;  // files or glob patterns
  std::string metric = "rmse";
  std::size_t tau_points = 200;
  std::filesystem::path out_dir = ".";
};

/// Builds a Dolan-More profile from metrics.csv files (each replicate is one
/// problem, scored at its final iteration) or from q-table files with a
/// "problem,<algorithm>..." header.
int cmd_profile(const ProfileOptions& opts, std::ostream& out, std::ostream& err);

struct GenRosenbrockOptions {
  RosenbrockSpec spec;
  std::filesystem::path out;
};

int cmd_gen_rosenbrock(const GenRosenbrockOptions& opts, std::ostream& out, std::ostream& err);

/// Output directory for a run when neither --out nor output_dir is given:
/// $DROPAL_OUTPUT_ROOT (or ./runs) joined with the config file stem.
std::filesystem::path default_run_dir(const std::filesystem::path& config);

}  // namespace dropal
