#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dropal/rng.hpp"

namespace dropal {

/// Architecture and regularization settings of a fully-connected regressor.
///
/// Dropout acts on hidden activations only. The input and output layers are
/// never masked. A leakiness of 1 turns the activation into the identity,
/// which is occasionally useful for analytic checks.
struct NetworkSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_sizes{256, 128, 64};
  std::size_t output_dim = 1;
  double leakiness = 0.01;
  double dropout_prob = 0.5;
  double l2_coeff = 1e-5;

  /// Throws ConfigError when any field is out of range.
  void validate() const;

  /// input_dim, hidden sizes..., output_dim.
  std::vector<std::size_t> layer_widths() const;
  std::size_t num_layers() const { return hidden_sizes.size() + 1; }
  std::size_t parameter_count() const;

  bool operator==(const NetworkSpec&) const = default;
};

/// Per-layer weights (fan_out x fan_in) and biases. The same layout is reused
/// for gradients and optimizer moments.
struct Parameters {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static Parameters zeros(const NetworkSpec& spec);

  std::size_t size() const;
  bool all_finite() const;
  /// Sum of squared weights; biases are not included.
  double weight_norm_squared() const;
  bool same_shape(const Parameters& other) const;

  bool operator==(const Parameters& other) const;
};

class Network {
 public:
  explicit Network(NetworkSpec spec);
  Network(NetworkSpec spec, Parameters params);

  const NetworkSpec& spec() const { return spec_; }
  const Parameters& params() const { return params_; }
  Parameters& params() { return params_; }

  bool operator==(const Network& other) const {
    return spec_ == other.spec_ && params_ == other.params_;
  }

 private:
  NetworkSpec spec_;
  Parameters params_;
};

/// One Bernoulli keep/drop realization for every hidden layer.
/// Entries are exactly 0 (drop) or 1 (keep); kept activations are rescaled
/// by 1 / keep_prob.
struct DropoutMask {
  std::vector<Eigen::VectorXd> keep;
  double keep_prob = 1.0;

  static DropoutMask all_keep(const NetworkSpec& spec, double keep_prob = 1.0);
  static DropoutMask sample(const NetworkSpec& spec, double dropout_prob, Stream& stream);
};

/// Independent masks for each row of a batch: keep[l] is rows x width(l).
struct BatchMask {
  std::vector<Eigen::MatrixXd> keep;
  double keep_prob = 1.0;

  static BatchMask sample(const NetworkSpec& spec, std::size_t rows, double dropout_prob,
                          Stream& stream);
};

/// Weights uniform on [-a, a] with variance 2 / (fan_in (1 + leakiness^2)); zero biases.
Network init_network(const NetworkSpec& spec, std::uint64_t seed);

double leaky_relu(double z, double leakiness);
Eigen::VectorXd leaky_relu(const Eigen::VectorXd& z, double leakiness);

/// Single-sample forward pass. The evaluation order depends only on the
/// network shape, so the result for a given (x, mask) is reproducible bit for bit.
double forward(const Network& net, const Eigen::Ref<const Eigen::VectorXd>& x,
               const DropoutMask* mask = nullptr);

/// Mask-free batched prediction; rows of `features` are samples.
Eigen::VectorXd predict(const Network& net, const Eigen::MatrixXd& features);

/// Mean squared residual plus l2_coeff * sum of squared weights.
double loss(const Network& net, const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
            const DropoutMask* mask = nullptr);
double loss(const Network& net, const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
            const BatchMask& mask);

/// Exact gradient of `loss` with the given mask held fixed.
Parameters gradients(const Network& net, const Eigen::MatrixXd& features,
                     const Eigen::VectorXd& targets, const DropoutMask* mask = nullptr);
Parameters gradients(const Network& net, const Eigen::MatrixXd& features,
                     const Eigen::VectorXd& targets, const BatchMask& mask);

/// Loss and gradient from a single forward/backward sweep.
struct LossAndGradients {
  double loss = 0.0;
  Parameters grads;
};
LossAndGradients loss_and_gradients(const Network& net, const Eigen::MatrixXd& features,
                                    const Eigen::VectorXd& targets, const BatchMask* mask);

}  // namespace dropal
