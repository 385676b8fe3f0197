#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "dropal/acquisition.hpp"
#include "dropal/analysis.hpp"
#include "dropal/data.hpp"
#include "dropal/mcdue.hpp"
#include "dropal/network.hpp"
#include "dropal/trainer.hpp"

namespace dropal {

/// Protocol settings for a paired comparison of acquisition strategies.
struct ExperimentConfig {
  /// Absolute initial labelled-set size. When unset, `split` fractions decide
  /// the initial/pool/test partition.
  std::optional<std::size_t> initial_size;
  SplitSpec split;
  /// Test share used together with `initial_size`.
  double test_fraction = 0.2;

  std::size_t samples_per_step = 100;  // m
  std::size_t budget = 0;              // final labelled-set size
  std::vector<StrategyKind> strategies{StrategyKind::mcdue(), StrategyKind::random(),
                                       StrategyKind::batch_maxmin()};
  std::size_t replicates = 20;

  NetworkSpec network;  // input_dim is taken from the dataset
  std::size_t base_epochs = 10000;
  std::size_t epochs_per_retrain = 2000;
  bool warm_start = true;
  std::size_t batch_size = 64;
  AdamConfig adam;
  MaskScope mask_scope = MaskScope::PerExample;

  /// num_runs and dropout_prob are used as given; base_seed is mixed into the
  /// per-iteration stream seeds.
  McConfig mc;
  bool standardize_target = true;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  /// Throws ConfigError when the settings are inconsistent for a dataset of
  /// `dataset_size` rows.
  void validate(std::size_t dataset_size) const;
  std::size_t initial_count(std::size_t dataset_size) const;
  std::size_t test_count(std::size_t dataset_size) const;
};

/// Per-replicate seeds. Every stream in a replicate is derived from `replicate`.
struct SeedRegistry {
  std::uint64_t replicate = 0;

  static SeedRegistry for_replicate(std::uint64_t experiment_seed, std::size_t index);
  std::uint64_t split() const;
  std::uint64_t init() const;
  std::uint64_t base_training() const;
  std::uint64_t retraining(std::size_t iteration) const;
  std::uint64_t random_selection(std::size_t iteration) const;
  std::uint64_t mc(std::size_t iteration, std::uint64_t base) const;
};

/// Everything one replicate shares across strategies: the split, the
/// standardized data and the held-out test set.
struct ReplicateContext {
  const ExperimentConfig* config = nullptr;
  std::size_t index = 0;
  SeedRegistry seeds;
  SplitIndices split;
  Standardizer standardizer;
  Dataset scaled;  // standardized features and targets, all rows
  Eigen::MatrixXd test_features;
  Eigen::VectorXd test_targets;  // original units

  static ReplicateContext build(const ExperimentConfig& cfg, const Dataset& ds, std::size_t index);
  MetricsRecord evaluate(const Network& net) const;
};

struct ALState {
  std::vector<std::size_t> labeled;  // dataset row indices
  std::vector<std::size_t> pool;
  Network network;
  std::size_t iteration = 0;
  std::vector<MetricsRecord> history;
  std::vector<std::vector<std::size_t>> selections;  // dataset rows per iteration
  std::vector<double> wall_seconds;                  // per iteration
};

enum class IterationOutcome { Advanced, BudgetReached, PoolExhausted };

/// Scores the pool with the strategy, moves min(m, budget - |labeled|) rows to
/// the labelled set, retrains and appends the test metrics.
IterationOutcome al_iteration(ALState& state, const StrategyKind& strategy,
                              const ReplicateContext& ctx);

/// Checks disjointness, conservation and test isolation. Throws Error on violation.
void check_state(const ALState& state, const ReplicateContext& ctx);

struct StrategyRun {
  StrategyKind strategy;
  ALState state;
};

struct ReplicateResult {
  std::size_t index = 0;
  SeedRegistry seeds;
  SplitIndices split;
  Standardizer standardizer;
  std::vector<StrategyRun> runs;
};

struct ExperimentResult {
  std::vector<ReplicateResult> replicates;
};

/// Runs one replicate: base network trained on the initial set, its weights
/// copied to every strategy, then the loop until the budget is met.
ReplicateResult run_replicate(const ExperimentConfig& cfg, const Dataset& ds, std::size_t index);

/// All replicates, up to cfg.jobs at a time; results are ordered by replicate
/// and independent of the worker count.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& ds);

}  // namespace dropal
