#include "dropal/mcdue.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "dropal/error.hpp"
#include "dropal/rng.hpp"

namespace dropal {

void McConfig::validate() const {
  if (num_runs < 2) {
    throw ConfigError("MC dropout needs at least 2 stochastic runs, got " +
                      std::to_string(num_runs));
  }
  if (!(dropout_prob >= 0.0 && dropout_prob < 1.0)) {
    throw ConfigError("MC dropout probability must lie in [0, 1)");
  }
}

std::vector<double> mc_predict(const Network& net, const Eigen::Ref<const Eigen::VectorXd>& x,
                               const McConfig& cfg, std::uint64_t stream_key) {
  cfg.validate();
  std::vector<double> out;
  out.reserve(cfg.num_runs);
  for (std::size_t k = 0; k < cfg.num_runs; ++k) {
    Stream stream(derive_seed({cfg.base_seed, stream_key, static_cast<std::uint64_t>(k)}));
    const DropoutMask mask = DropoutMask::sample(net.spec(), cfg.dropout_prob, stream);
    out.push_back(forward(net, x, &mask));
  }
  return out;
}

double mc_std(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw InsufficientSamplesError("standard deviation needs at least 2 samples, got " +
                                   std::to_string(samples.size()));
  }
  // Welford accumulation.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t count = 0;
  for (double y : samples) {
    ++count;
    const double delta = y - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (y - mean);
  }
  return std::sqrt(std::max(0.0, m2) / static_cast<double>(count - 1));
}

std::vector<AcquisitionScore> mcdue_scores(const Network& net, const Eigen::MatrixXd& pool,
                                           const McConfig& cfg,
                                           std::span<const std::uint64_t> stream_keys,
                                           std::size_t workers) {
  cfg.validate();
  if (pool.rows() == 0) throw Error("cannot score an empty pool");
  if (!stream_keys.empty() && stream_keys.size() != static_cast<std::size_t>(pool.rows())) {
    throw ShapeError("stream key count does not match pool rows");
  }
  const auto n = static_cast<std::size_t>(pool.rows());
  std::vector<AcquisitionScore> scores(n);

  auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const std::uint64_t key = stream_keys.empty() ? j : stream_keys[j];
      const Eigen::VectorXd x = pool.row(static_cast<Eigen::Index>(j)).transpose();
      const auto outputs = mc_predict(net, x, cfg, key);
      scores[j] = {j, mc_std(outputs)};
    }
  };

  workers = std::clamp<std::size_t>(workers, 1, n);
  if (workers == 1) {
    score_range(0, n);
    return scores;
  }
  std::vector<std::jthread> threads;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    threads.emplace_back(score_range, begin, std::min(n, begin + chunk));
  }
  threads.clear();
  return scores;
}

std::vector<std::size_t> select_top_m(std::span<const AcquisitionScore> scores, std::size_t m) {
  if (m < 1 || m > scores.size()) {
    throw ConfigError("cannot select " + std::to_string(m) + " of " +
                      std::to_string(scores.size()) + " scored points");
  }
  std::vector<AcquisitionScore> sorted(scores.begin(), scores.end());
  auto better = [](const AcquisitionScore& a, const AcquisitionScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.pool_index < b.pool_index;
  };
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m), sorted.end(),
                    better);
  std::vector<std::size_t> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(sorted[i].pool_index);
  return out;
}

void write_scores_csv(const std::filesystem::path& path, std::span<const AcquisitionScore> scores) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "pool_index,score\n";
  for (const auto& s : scores) out << s.pool_index << ',' << s.score << '\n';
}

}  // namespace dropal
