#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dropal {

/// Feature matrix (rows = samples) with one scalar target per row.
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd targets;
  std::vector<std::string> feature_names;
  std::string provenance;

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

  /// Throws Error when row counts disagree or any value is non-finite.
  void validate() const;

  Eigen::MatrixXd rows(const std::vector<std::size_t>& idx) const;
  Eigen::VectorXd target_rows(const std::vector<std::size_t>& idx) const;
};

struct CsvOptions {
  std::string target_column;
  char delimiter = ',';
};

struct CsvLoadReport {
  Dataset data;
  std::size_t rejected_rows = 0;
};

/// Reads a headed CSV. Rows with missing or non-numeric fields are skipped and
/// counted. Throws Error on unreadable files, a missing target column, or when
/// no usable rows remain.
CsvLoadReport load_csv(const std::filesystem::path& path, const CsvOptions& options);

/// Writes features then the target as the last column named `target_name`.
void write_csv(const std::filesystem::path& path, const Dataset& ds,
               const std::string& target_name = "y");

struct SplitSpec {
  double train = 0.2;
  double pool = 0.6;
  double test = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> pool;
  std::vector<std::size_t> test;
};

/// Seeded shuffle, then train/test buckets of round(fraction * N) rows; the
/// pool takes the remainder.
SplitIndices split(std::size_t n, const SplitSpec& spec);

/// Seeded shuffle with an absolute initial-set size; test takes
/// round(test_fraction * N) and the pool the rest.
SplitIndices split_with_initial_size(std::size_t n, std::size_t initial_size,
                                     double test_fraction, std::uint64_t seed);

/// Per-feature and target affine scaling fitted on training rows only.
struct Standardizer {
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_std;
  double target_mean = 0.0;
  double target_std = 1.0;

  /// Population statistics over `train_idx`. Constant columns get std 1.
  /// With standardize_target false the target scaling is the identity.
  static Standardizer fit(const Dataset& ds, const std::vector<std::size_t>& train_idx,
                          bool standardize_target = true);

  Dataset apply(const Dataset& ds) const;
  Eigen::MatrixXd transform_features(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd transform_targets(const Eigen::VectorXd& y) const;
  Eigen::VectorXd inverse_targets(const Eigen::VectorXd& y) const;
};

/// Sum over i of 100 (x[i+1] - x[i]^2)^2 + (1 - x[i])^2. Requires dim >= 2.
double rosenbrock(const Eigen::Ref<const Eigen::VectorXd>& x);

struct RosenbrockSpec {
  std::size_t samples = 10000;
  std::size_t dim = 2000;
  double lo = -2.0;
  double hi = 2.0;
  std::uint64_t seed = 0;
};

/// Uniform samples in [lo, hi]^dim labelled by rosenbrock().
Dataset generate_rosenbrock(const RosenbrockSpec& spec);

}  // namespace dropal
