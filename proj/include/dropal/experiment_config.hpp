#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dropal/active_loop.hpp"
#include "dropal/data.hpp"

namespace dropal {

struct CsvSource {
  std::filesystem::path path;
  std::string target = "y";
  char delimiter = ',';
};

using DatasetSource = std::variant<CsvSource, RosenbrockSpec>;

struct LoadedDataset {
  Dataset data;
  std::size_t rejected_rows = 0;
};

/// Throws ConfigError naming the path when a CSV source does not exist.
LoadedDataset load_dataset(const DatasetSource& source);

/// A parsed run configuration file.
struct RunConfig {
  DatasetSource dataset;
  ExperimentConfig experiment;
  /// Exactly one of budget / iterations is set after parsing.
  std::optional<std::size_t> budget;
  std::optional<std::size_t> iterations;
  std::optional<std::filesystem::path> output_dir;

  /// Experiment settings with the budget resolved for `dataset_size` rows.
  ExperimentConfig resolved(std::size_t dataset_size) const;
};

/// Parses the config tree. Unknown keys are rejected. Relative paths are
/// resolved against `base_dir`. Throws ConfigError on any problem.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Normalized tree with every default filled in; parse_run_config accepts it.
nlohmann::json to_json(const RunConfig& cfg);

/// Reads a config file. A run manifest is accepted too: its embedded
/// "config" section is used.
nlohmann::json read_config_file(const std::filesystem::path& path);

/// Applies "a.b.c=value" overrides. The value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_overrides(nlohmann::json& j, const std::vector<std::string>& overrides);

}  // namespace dropal
