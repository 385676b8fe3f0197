#include "dropal/trainer.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "dropal/error.hpp"
#include "dropal/rng.hpp"

namespace dropal {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  adam.validate();
}

Network train(Network net, const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
              const TrainConfig& config) {
  config.validate();
  if (config.epochs == 0) return net;
  if (features.rows() == 0) throw ShapeError("cannot train on an empty set");
  if (features.rows() != targets.size()) throw ShapeError("feature rows and target count differ");
  if (static_cast<std::size_t>(features.cols()) != net.spec().input_dim) {
    throw ShapeError("training features do not match the network input dimension");
  }

  const auto n = static_cast<std::size_t>(features.rows());
  const std::size_t batch = std::min(config.batch_size, n);
  const double dropout = net.spec().dropout_prob;
  OptimizerState state = OptimizerState::for_network(net, config.adam);
  Stream stream(derive_seed({config.seed, 0x7ea1ULL}));

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Eigen::MatrixXd xb;
  Eigen::VectorXd yb;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[stream.below(i)]);
    }
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t rows = std::min(batch, n - start);
      xb.resize(static_cast<Eigen::Index>(rows), features.cols());
      yb.resize(static_cast<Eigen::Index>(rows));
      for (std::size_t r = 0; r < rows; ++r) {
        const auto src = order[start + r];
        xb.row(static_cast<Eigen::Index>(r)) = features.row(src);
        yb[static_cast<Eigen::Index>(r)] = targets[src];
      }

      LossAndGradients lg;
      if (dropout > 0.0) {
        BatchMask mask;
        if (config.mask_scope == MaskScope::PerExample) {
          mask = BatchMask::sample(net.spec(), rows, dropout, stream);
        } else {
          const DropoutMask shared = DropoutMask::sample(net.spec(), dropout, stream);
          mask.keep_prob = shared.keep_prob;
          for (const auto& k : shared.keep) {
            mask.keep.push_back(k.transpose().replicate(static_cast<Eigen::Index>(rows), 1));
          }
        }
        lg = loss_and_gradients(net, xb, yb, &mask);
      } else {
        lg = loss_and_gradients(net, xb, yb, nullptr);
      }

      if (!std::isfinite(lg.loss)) throw DivergenceError("non-finite training loss", epoch);
      try {
        optimizer_step(net, lg.grads, state);
      } catch (const DivergenceError&) {
        throw DivergenceError("non-finite gradient", epoch);
      }
    }
  }
  if (!net.params().all_finite()) {
    throw DivergenceError("non-finite parameters after training", config.epochs - 1);
  }
  return net;
}

}  // namespace dropal
