#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "dropal/active_loop.hpp"
#include "dropal/analysis.hpp"

namespace dropal {

/// One row of metrics.csv.
struct MetricsRow {
  std::string strategy;
  std::size_t replicate = 0;
  MetricsRecord record;
};

/// strategy,replicate,iteration,labeled_size,rmse,mae,maxae. Holds no
/// timing data, so identical runs produce identical bytes.
void write_metrics_csv(const std::filesystem::path& path, const ExperimentResult& result);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

/// strategy,replicate,iteration,labeled_size,wall_time (seconds).
void write_timings_csv(const std::filesystem::path& path, const ExperimentResult& result);

/// strategy,replicate,iteration,rank,dataset_index.
void write_selections_csv(const std::filesystem::path& path, const ExperimentResult& result);

/// One checkpoint per (strategy, replicate) final network, with its standardizer.
void write_final_checkpoints(const std::filesystem::path& dir, const ExperimentResult& result);

/// File-name-safe form of a strategy name.
std::string strategy_slug(const std::string& name);

/// For every non-MCDUE strategy, ratio curves against MCDUE for each metric
/// as CSV and SVG. Returns the files written; none when MCDUE is absent.
std::vector<std::filesystem::path> write_ratio_reports(const std::filesystem::path& dir,
                                                       const ExperimentResult& result);

/// Histories of one strategy, indexed by replicate.
std::vector<std::vector<MetricsRecord>> histories(const ExperimentResult& result,
                                                  const StrategyKind& strategy);

}  // namespace dropal
