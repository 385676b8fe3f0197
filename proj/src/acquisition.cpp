#include "dropal/acquisition.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "dropal/error.hpp"
#include "dropal/rng.hpp"

namespace dropal {

StrategyKind StrategyKind::parse(const std::string& text) {
  if (text == "mcdue") return mcdue();
  if (text == "random") return random();
  if (text == "greedy_maxmin") return greedy_maxmin();
  if (text == "batch_maxmin") return batch_maxmin();
  const std::string prefix = "batch_maxmin:";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t k = 0;
    try {
      std::size_t used = 0;
      const auto value = std::stoll(text.substr(prefix.size()), &used);
      if (used != text.size() - prefix.size() || value < 1) throw ConfigError("");
      k = static_cast<std::size_t>(value);
    } catch (const std::exception&) {
      throw ConfigError("invalid batch size in strategy '" + text + "'");
    }
    return batch_maxmin(k);
  }
  throw ConfigError("unknown strategy '" + text + "'");
}

std::string StrategyKind::name() const {
  switch (kind) {
    case Kind::Mcdue:
      return "mcdue";
    case Kind::Random:
      return "random";
    case Kind::GreedyMaxMin:
      return "greedy_maxmin";
    case Kind::BatchMaxMin:
      return "batch_maxmin:" + std::to_string(batch);
  }
  return "unknown";
}

void StrategyKind::validate() const {
  if (kind == Kind::BatchMaxMin && batch < 1) throw ConfigError("batch max-min needs K >= 1");
}

std::vector<std::size_t> random_select(std::size_t pool_size, std::size_t m, std::uint64_t seed) {
  if (m < 1 || m > pool_size) {
    throw ConfigError("cannot draw " + std::to_string(m) + " of " + std::to_string(pool_size) +
                      " pool points");
  }
  std::vector<std::size_t> perm(pool_size);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Stream stream(derive_seed({seed, 0x4a2dULL}));
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + stream.below(pool_size - i);
    std::swap(perm[i], perm[j]);
  }
  perm.resize(m);
  return perm;
}

double maxmin_score(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::MatrixXd& reference) {
  if (reference.rows() == 0) throw ConfigError("max-min score needs a non-empty reference set");
  if (reference.cols() != x.size()) throw ShapeError("max-min score dimension mismatch");
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < reference.rows(); ++r) {
    best = std::min(best, (reference.row(r).transpose() - x).squaredNorm());
  }
  return best;
}

namespace {

void check_maxmin_args(const Eigen::MatrixXd& pool, const Eigen::MatrixXd& train, std::size_t m) {
  if (train.rows() == 0) throw ConfigError("max-min selection needs a non-empty training set");
  if (pool.cols() != train.cols()) throw ShapeError("pool and train feature counts differ");
  if (m < 1 || m > static_cast<std::size_t>(pool.rows())) {
    throw ConfigError("cannot select " + std::to_string(m) + " of " +
                      std::to_string(pool.rows()) + " pool points");
  }
}

// Current min squared distance of every pool row to the reference set.
// Consumed rows are marked with -1 so they never win again.
class MinDistances {
 public:
  MinDistances(const Eigen::MatrixXd& pool, const Eigen::MatrixXd& train) : pool_(pool) {
    dist_.resize(static_cast<std::size_t>(pool.rows()));
    for (Eigen::Index j = 0; j < pool.rows(); ++j) {
      dist_[static_cast<std::size_t>(j)] = maxmin_score(pool.row(j).transpose(), train);
    }
  }

  void add_reference(std::size_t picked) {
    const auto p = static_cast<Eigen::Index>(picked);
    for (Eigen::Index j = 0; j < pool_.rows(); ++j) {
      auto& d = dist_[static_cast<std::size_t>(j)];
      if (d < 0.0) continue;
      d = std::min(d, (pool_.row(j) - pool_.row(p)).squaredNorm());
    }
  }

  void consume(std::size_t j) { dist_[j] = -1.0; }

  std::size_t argmax() const {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t j = 0; j < dist_.size(); ++j) {
      if (dist_[j] > best_d) {
        best_d = dist_[j];
        best = j;
      }
    }
    return best;
  }

  /// Best `k` unconsumed positions, descending distance, ties by position.
  std::vector<std::size_t> top(std::size_t k) const {
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < dist_.size(); ++j) {
      if (dist_[j] >= 0.0) order.push_back(j);
    }
    k = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [this](std::size_t a, std::size_t b) {
                        if (dist_[a] != dist_[b]) return dist_[a] > dist_[b];
                        return a < b;
                      });
    order.resize(k);
    return order;
  }

 private:
  const Eigen::MatrixXd& pool_;
  std::vector<double> dist_;
};

}  // namespace

std::vector<std::size_t> greedy_maxmin_select(const Eigen::MatrixXd& pool,
                                              const Eigen::MatrixXd& train, std::size_t m) {
  check_maxmin_args(pool, train, m);
  MinDistances dist(pool, train);
  std::vector<std::size_t> picked;
  picked.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t best = dist.argmax();
    dist.consume(best);
    dist.add_reference(best);
    picked.push_back(best);
  }
  return picked;
}

std::vector<std::size_t> batch_maxmin_select(const Eigen::MatrixXd& pool,
                                             const Eigen::MatrixXd& train, std::size_t m,
                                             std::size_t batch) {
  check_maxmin_args(pool, train, m);
  if (batch < 1) throw ConfigError("batch max-min needs K >= 1");
  MinDistances dist(pool, train);
  std::vector<std::size_t> picked;
  picked.reserve(m);
  while (picked.size() < m) {
    const auto round = dist.top(std::min(batch, m - picked.size()));
    for (std::size_t j : round) {
      dist.consume(j);
      picked.push_back(j);
    }
    if (picked.size() < m) {
      for (std::size_t j : round) dist.add_reference(j);
    }
  }
  return picked;
}

}  // namespace dropal
