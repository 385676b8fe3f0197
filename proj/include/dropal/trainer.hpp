#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>

#include "dropal/network.hpp"
#include "dropal/optimizer.hpp"

namespace dropal {

enum class MaskScope {
  PerExample,  // an independent mask for every row of a mini-batch
  PerBatch,    // one mask shared by the whole mini-batch
};

struct TrainConfig {
  std::size_t epochs = 10000;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  AdamConfig adam;
  MaskScope mask_scope = MaskScope::PerExample;

  void validate() const;
};

/// Shuffled mini-batch Adam training with dropout at the network's rate.
/// A fresh optimizer state is used on every call. Deterministic given
/// config.seed. Throws DivergenceError carrying the epoch index when the loss
/// or a gradient becomes non-finite.
Network train(Network net, const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
              const TrainConfig& config);

}  // namespace dropal
