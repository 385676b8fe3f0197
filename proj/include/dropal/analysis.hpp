#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dropal/mcdue.hpp"
#include "dropal/network.hpp"

namespace dropal {

/// Test-set accuracy after one active-learning step, in original target units.
struct MetricsRecord {
  double rmse = 0.0;
  double mae = 0.0;
  double maxae = 0.0;
  std::size_t labeled_size = 0;
  std::size_t iteration = 0;

  bool operator==(const MetricsRecord&) const = default;
};

enum class Metric { Rmse, Mae, MaxAe };

Metric parse_metric(const std::string& name);
std::string metric_name(Metric m);
double metric_value(const MetricsRecord& r, Metric m);

/// RMSE, MAE and max absolute error of preds against targets.
MetricsRecord metrics(const Eigen::VectorXd& preds, const Eigen::VectorXd& targets);

struct RatioPoint {
  std::size_t labeled_size = 0;
  double ratio = 0.0;
  bool flagged = false;  // zero candidate error; excluded from statistics
};

/// Pointwise baseline_error / candidate_error along aligned histories, so
/// values above 1 favour the candidate. Throws Error on misaligned grids.
std::vector<RatioPoint> ratio_curve(std::span<const MetricsRecord> candidate,
                                    std::span<const MetricsRecord> baseline, Metric metric);

struct RatioStat {
  std::size_t labeled_size = 0;
  double mean = 0.0;
  double stddev = 0.0;   // sample standard deviation across replicates
  std::size_t count = 0;  // replicates that contributed
  std::size_t excluded = 0;
};

/// Replicate-wise ratio curves reduced to mean and standard deviation per grid point.
std::vector<RatioStat> ratio_curve_stats(const std::vector<std::vector<MetricsRecord>>& candidate,
                                         const std::vector<std::vector<MetricsRecord>>& baseline,
                                         Metric metric);

/// q[p][a]: error of algorithm a on problem p.
struct ProblemResultTable {
  std::vector<std::string> problems;
  std::vector<std::string> algorithms;
  std::vector<std::vector<double>> q;

  /// Rectangular, non-empty, all entries finite and > 0.
  void validate() const;
};

struct PerformanceProfile {
  std::vector<std::string> algorithms;
  std::vector<double> tau;
  std::vector<std::vector<double>> rho;     // rho[a][i] at tau[i]
  std::vector<double> auc;                  // per algorithm, in [0, 1]
  std::vector<std::vector<double>> ratios;  // ratios[p][a] = q[p][a] / min_x q[p][x]
};

/// `points` log-spaced values from 1 to the largest performance ratio.
std::vector<double> default_tau_grid(const ProblemResultTable& table, std::size_t points = 200);

/// Dolan-More curves rho_a(tau) = #{p : r[p][a] <= tau} / #problems. AUC is the
/// trapezoidal integral over log(tau) divided by log(tau_max), or rho(1) when
/// the grid is the single point 1.
PerformanceProfile dolan_more(const ProblemResultTable& table, std::span<const double> tau);
PerformanceProfile dolan_more(const ProblemResultTable& table);

/// Pearson correlation; nullopt when either input has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

/// Linear-interpolation quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Fraction of `values` that are <= x.
double percentile_rank(std::span<const double> values, double x);

struct TargetScale {
  double mean = 0.0;
  double std = 1.0;
};

struct DiagnosticReport {
  std::vector<double> mc_std;     // per test point, in target units
  std::vector<double> abs_error;  // |prediction - target|
  std::optional<double> correlation;
  double median_std = 0.0;
  double median_error = 0.0;
  double std_q99 = 0.0;
  /// Median percentile rank, within the abs-error distribution, of the points
  /// whose MC std exceeds the 0.99 quantile. nullopt when no point does.
  std::optional<double> tail_error_percentile;
};

/// MC-dropout std versus absolute error over a labelled set. Features are in
/// network input space; targets in original units, mapped from network output
/// space through `scale`.
DiagnosticReport std_error_diagnostic(const Network& net, const Eigen::MatrixXd& features,
                                      const Eigen::VectorXd& targets, const McConfig& cfg,
                                      const TargetScale& scale = {});

void write_ratio_csv(const std::filesystem::path& path, const std::string& candidate,
                     const std::string& baseline, Metric metric,
                     std::span<const RatioStat> stats);
void write_ratio_svg(const std::filesystem::path& path, const std::string& candidate,
                     const std::string& baseline, Metric metric,
                     std::span<const RatioStat> stats);

void write_profile_csv(const std::filesystem::path& path, const PerformanceProfile& profile);
void write_profile_svg(const std::filesystem::path& path, const PerformanceProfile& profile,
                       const std::string& title);

void write_diagnostic_csv(const std::filesystem::path& path, const DiagnosticReport& report);
void write_diagnostic_svg(const std::filesystem::path& path, const DiagnosticReport& report);

}  // namespace dropal
