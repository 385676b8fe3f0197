#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dropal/network.hpp"

namespace dropal {

/// Monte-Carlo dropout settings: T stochastic passes at dropout rate pi.
struct McConfig {
  std::size_t num_runs = 25;
  double dropout_prob = 0.5;
  std::uint64_t base_seed = 0;

  /// num_runs >= 2 and 0 <= dropout_prob < 1. A rate of 0 is accepted and
  /// yields deterministic passes (all scores zero).
  void validate() const;
};

struct AcquisitionScore {
  std::size_t pool_index = 0;
  double score = 0.0;
};

/// T outputs of forward(net, x, mask_k). The mask for run k is drawn from a
/// stream keyed by (base_seed, stream_key, k), so the result depends only on
/// those values and not on what else is being scored.
std::vector<double> mc_predict(const Network& net, const Eigen::Ref<const Eigen::VectorXd>& x,
                               const McConfig& cfg, std::uint64_t stream_key);

/// Bessel-corrected sample standard deviation. Throws InsufficientSamplesError
/// for fewer than two samples.
double mc_std(std::span<const double> samples);

/// One score per pool row: mc_std(mc_predict(row j, stream key j)).
/// `stream_keys` defaults to the row positions 0..N-1. Rows are split across
/// `workers` threads; the result is identical for every worker count.
std::vector<AcquisitionScore> mcdue_scores(const Network& net, const Eigen::MatrixXd& pool,
                                           const McConfig& cfg,
                                           std::span<const std::uint64_t> stream_keys = {},
                                           std::size_t workers = 1);

/// pool_index values of the m largest scores, in descending score order;
/// equal scores are ordered by ascending pool_index.
std::vector<std::size_t> select_top_m(std::span<const AcquisitionScore> scores, std::size_t m);

void write_scores_csv(const std::filesystem::path& path, std::span<const AcquisitionScore> scores);

}  // namespace dropal
