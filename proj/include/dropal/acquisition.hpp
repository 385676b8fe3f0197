#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dropal {

/// Which acquisition rule an active-learning run uses.
struct StrategyKind {
  enum class Kind { Mcdue, Random, GreedyMaxMin, BatchMaxMin };

  Kind kind = Kind::Mcdue;
  std::size_t batch = 4;  // K, used by BatchMaxMin only

  static StrategyKind mcdue() { return {Kind::Mcdue, 4}; }
  static StrategyKind random() { return {Kind::Random, 4}; }
  static StrategyKind greedy_maxmin() { return {Kind::GreedyMaxMin, 4}; }
  static StrategyKind batch_maxmin(std::size_t k = 4) { return {Kind::BatchMaxMin, k}; }

  /// "mcdue", "random", "greedy_maxmin", "batch_maxmin" or "batch_maxmin:K".
  static StrategyKind parse(const std::string& text);
  std::string name() const;
  void validate() const;

  bool operator==(const StrategyKind&) const = default;
};

/// m distinct uniform positions in [0, pool_size), in draw order.
std::vector<std::size_t> random_select(std::size_t pool_size, std::size_t m, std::uint64_t seed);

/// Minimum squared Euclidean distance from x to any row of `reference`.
double maxmin_score(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::MatrixXd& reference);

/// Farthest-point selection: repeatedly pick the pool row with the largest
/// min-distance to the reference set (train rows plus earlier picks). Ties go
/// to the lower pool position. Cost O((N_train + m) N_pool).
std::vector<std::size_t> greedy_maxmin_select(const Eigen::MatrixXd& pool,
                                              const Eigen::MatrixXd& train, std::size_t m);

/// ceil(m / K) rounds; each round takes the K best-scoring rows against the
/// reference set as it stood at the start of the round. The last round is
/// truncated so exactly m positions are returned.
std::vector<std::size_t> batch_maxmin_select(const Eigen::MatrixXd& pool,
                                             const Eigen::MatrixXd& train, std::size_t m,
                                             std::size_t batch);

}  // namespace dropal
