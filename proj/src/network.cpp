#include "dropal/network.hpp"

#include <cmath>
#include <string>

#include "dropal/error.hpp"

namespace dropal {

void NetworkSpec::validate() const {
  if (input_dim == 0 || output_dim == 0) {
    throw ConfigError("network input and output dimensions must be positive");
  }
  if (hidden_sizes.empty()) {
    throw ConfigError("network needs at least one hidden layer");
  }
  for (std::size_t w : hidden_sizes) {
    if (w == 0) throw ConfigError("hidden layer widths must be positive");
  }
  if (!(leakiness > 0.0)) throw ConfigError("leakiness must be positive");
  if (!(dropout_prob >= 0.0 && dropout_prob < 1.0)) {
    throw ConfigError("dropout probability must lie in [0, 1)");
  }
  if (!(l2_coeff >= 0.0)) throw ConfigError("l2 coefficient must be non-negative");
}

std::vector<std::size_t> NetworkSpec::layer_widths() const {
  std::vector<std::size_t> widths;
  widths.reserve(hidden_sizes.size() + 2);
  widths.push_back(input_dim);
  widths.insert(widths.end(), hidden_sizes.begin(), hidden_sizes.end());
  widths.push_back(output_dim);
  return widths;
}

std::size_t NetworkSpec::parameter_count() const {
  const auto widths = layer_widths();
  std::size_t count = 0;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    count += widths[l] * widths[l - 1] + widths[l];
  }
  return count;
}

Parameters Parameters::zeros(const NetworkSpec& spec) {
  const auto widths = spec.layer_widths();
  Parameters p;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    const auto out = static_cast<Eigen::Index>(widths[l]);
    const auto in = static_cast<Eigen::Index>(widths[l - 1]);
    p.weights.push_back(Eigen::MatrixXd::Zero(out, in));
    p.biases.push_back(Eigen::VectorXd::Zero(out));
  }
  return p;
}

std::size_t Parameters::size() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

bool Parameters::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

double Parameters::weight_norm_squared() const {
  double s = 0.0;
  for (const auto& w : weights) s += w.squaredNorm();
  return s;
}

bool Parameters::same_shape(const Parameters& other) const {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows() ||
        weights[l].cols() != other.weights[l].cols() ||
        biases[l].size() != other.biases[l].size()) {
      return false;
    }
  }
  return true;
}

bool Parameters::operator==(const Parameters& other) const {
  if (!same_shape(other)) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
  }
  return true;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  params_ = Parameters::zeros(spec_);
}

Network::Network(NetworkSpec spec, Parameters params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  if (!params_.same_shape(Parameters::zeros(spec_))) {
    throw ShapeError("parameter shapes do not match the network spec");
  }
  if (!params_.all_finite()) throw Error("network parameters must be finite");
}

DropoutMask DropoutMask::all_keep(const NetworkSpec& spec, double keep_prob) {
  DropoutMask mask;
  mask.keep_prob = keep_prob;
  for (std::size_t w : spec.hidden_sizes) {
    mask.keep.push_back(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(w)));
  }
  return mask;
}

DropoutMask DropoutMask::sample(const NetworkSpec& spec, double dropout_prob, Stream& stream) {
  DropoutMask mask;
  mask.keep_prob = 1.0 - dropout_prob;
  for (std::size_t w : spec.hidden_sizes) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(w));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v[i] = stream.uniform() < dropout_prob ? 0.0 : 1.0;
    }
    mask.keep.push_back(std::move(v));
  }
  return mask;
}

BatchMask BatchMask::sample(const NetworkSpec& spec, std::size_t rows, double dropout_prob,
                            Stream& stream) {
  BatchMask mask;
  mask.keep_prob = 1.0 - dropout_prob;
  for (std::size_t w : spec.hidden_sizes) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(w));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = stream.uniform() < dropout_prob ? 0.0 : 1.0;
      }
    }
    mask.keep.push_back(std::move(m));
  }
  return mask;
}

Network init_network(const NetworkSpec& spec, std::uint64_t seed) {
  Network net(spec);
  Stream stream(derive_seed({seed, 0x1417ULL}));
  auto& p = net.params();
  for (auto& w : p.weights) {
    const double fan_in = static_cast<double>(w.cols());
    const double variance = 2.0 / (fan_in * (1.0 + spec.leakiness * spec.leakiness));
    const double bound = std::sqrt(3.0 * variance);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        w(r, c) = stream.uniform(-bound, bound);
      }
    }
  }
  return net;
}

double leaky_relu(double z, double leakiness) { return z >= 0.0 ? z : leakiness * z; }

Eigen::VectorXd leaky_relu(const Eigen::VectorXd& z, double leakiness) {
  return z.unaryExpr([leakiness](double v) { return leaky_relu(v, leakiness); });
}

namespace {

void check_input_dim(const Network& net, Eigen::Index cols) {
  if (static_cast<std::size_t>(cols) != net.spec().input_dim) {
    throw ShapeError("input has " + std::to_string(cols) + " features, network expects " +
                     std::to_string(net.spec().input_dim));
  }
}

void check_mask(const NetworkSpec& spec, const DropoutMask& mask) {
  if (mask.keep.size() != spec.hidden_sizes.size()) {
    throw ShapeError("dropout mask layer count does not match hidden layers");
  }
  for (std::size_t l = 0; l < mask.keep.size(); ++l) {
    if (static_cast<std::size_t>(mask.keep[l].size()) != spec.hidden_sizes[l]) {
      throw ShapeError("dropout mask width mismatch at hidden layer " + std::to_string(l));
    }
  }
  if (!(mask.keep_prob > 0.0 && mask.keep_prob <= 1.0)) {
    throw ShapeError("dropout mask keep probability must lie in (0, 1]");
  }
}

void check_mask(const NetworkSpec& spec, const BatchMask& mask, Eigen::Index rows) {
  if (mask.keep.size() != spec.hidden_sizes.size()) {
    throw ShapeError("batch mask layer count does not match hidden layers");
  }
  for (std::size_t l = 0; l < mask.keep.size(); ++l) {
    if (static_cast<std::size_t>(mask.keep[l].cols()) != spec.hidden_sizes[l] ||
        mask.keep[l].rows() != rows) {
      throw ShapeError("batch mask shape mismatch at hidden layer " + std::to_string(l));
    }
  }
  if (!(mask.keep_prob > 0.0 && mask.keep_prob <= 1.0)) {
    throw ShapeError("batch mask keep probability must lie in (0, 1]");
  }
}

// Multiplies hidden activations (rows = samples) by the mask and the inverted
// dropout factor. Applied identically on the forward and backward sweeps.
class MaskView {
 public:
  MaskView() = default;
  explicit MaskView(const DropoutMask* shared) : shared_(shared) {}
  explicit MaskView(const BatchMask* batch) : batch_(batch) {}

  void apply(std::size_t layer, Eigen::MatrixXd& a) const {
    if (shared_ != nullptr) {
      const double scale = 1.0 / shared_->keep_prob;
      a.array().rowwise() *= (shared_->keep[layer].transpose().array() * scale);
    } else if (batch_ != nullptr) {
      a.array() *= batch_->keep[layer].array() * (1.0 / batch_->keep_prob);
    }
  }

 private:
  const DropoutMask* shared_ = nullptr;
  const BatchMask* batch_ = nullptr;
};

struct Trace {
  std::vector<Eigen::MatrixXd> pre;   // hidden pre-activations
  std::vector<Eigen::MatrixXd> post;  // post[0] = input, post[l] = masked hidden output
  Eigen::VectorXd output;
};

Trace forward_trace(const Network& net, const Eigen::MatrixXd& x, const MaskView& mask) {
  const auto& p = net.params();
  const double beta = net.spec().leakiness;
  const std::size_t hidden = net.spec().hidden_sizes.size();
  Trace t;
  t.post.push_back(x);
  for (std::size_t l = 0; l < hidden; ++l) {
    Eigen::MatrixXd z = t.post.back() * p.weights[l].transpose();
    z.rowwise() += p.biases[l].transpose();
    Eigen::MatrixXd a = z.unaryExpr([beta](double v) { return leaky_relu(v, beta); });
    mask.apply(l, a);
    t.pre.push_back(std::move(z));
    t.post.push_back(std::move(a));
  }
  Eigen::MatrixXd out = t.post.back() * p.weights[hidden].transpose();
  out.rowwise() += p.biases[hidden].transpose();
  t.output = out.col(0);
  return t;
}

void check_batch(const Network& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() == 0) throw ShapeError("empty batch");
  check_input_dim(net, x.cols());
  if (x.rows() != y.size()) {
    throw ShapeError("feature rows and target count differ");
  }
  if (net.spec().output_dim != 1) {
    throw ShapeError("loss is defined for scalar-output networks only");
  }
}

double loss_impl(const Network& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                 const MaskView& mask) {
  const Trace t = forward_trace(net, x, mask);
  const double mse = (t.output - y).squaredNorm() / static_cast<double>(y.size());
  return mse + net.spec().l2_coeff * net.params().weight_norm_squared();
}

LossAndGradients backprop(const Network& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const MaskView& mask) {
  const auto& p = net.params();
  const double beta = net.spec().leakiness;
  const double alpha = net.spec().l2_coeff;
  const std::size_t hidden = net.spec().hidden_sizes.size();
  const double n = static_cast<double>(y.size());

  const Trace t = forward_trace(net, x, mask);
  const Eigen::VectorXd residual = t.output - y;

  LossAndGradients out;
  out.loss = residual.squaredNorm() / n + alpha * p.weight_norm_squared();
  out.grads = Parameters::zeros(net.spec());
  auto& g = out.grads;

  // delta holds d loss / d (layer pre-activation), rows = samples.
  Eigen::MatrixXd delta = (2.0 / n) * residual;
  for (std::size_t l = hidden + 1; l-- > 0;) {
    g.weights[l] = delta.transpose() * t.post[l] + 2.0 * alpha * p.weights[l];
    g.biases[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Eigen::MatrixXd upstream = delta * p.weights[l];
    mask.apply(l - 1, upstream);
    const Eigen::MatrixXd& z = t.pre[l - 1];
    delta = upstream.array() * z.unaryExpr([beta](double v) { return v >= 0.0 ? 1.0 : beta; }).array();
  }
  return out;
}

}  // namespace

double forward(const Network& net, const Eigen::Ref<const Eigen::VectorXd>& x,
               const DropoutMask* mask) {
  check_input_dim(net, x.size());
  if (mask != nullptr) check_mask(net.spec(), *mask);
  const auto& p = net.params();
  const double beta = net.spec().leakiness;
  const std::size_t hidden = net.spec().hidden_sizes.size();
  Eigen::VectorXd a = x;
  for (std::size_t l = 0; l < hidden; ++l) {
    Eigen::VectorXd z = p.weights[l] * a + p.biases[l];
    a = leaky_relu(z, beta);
    if (mask != nullptr) {
      a = a.cwiseProduct(mask->keep[l]) * (1.0 / mask->keep_prob);
    }
  }
  const Eigen::VectorXd out = p.weights[hidden] * a + p.biases[hidden];
  return out[0];
}

Eigen::VectorXd predict(const Network& net, const Eigen::MatrixXd& features) {
  check_input_dim(net, features.cols());
  return forward_trace(net, features, MaskView{}).output;
}

double loss(const Network& net, const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
            const DropoutMask* mask) {
  check_batch(net, features, targets);
  if (mask != nullptr) check_mask(net.spec(), *mask);
  return loss_impl(net, features, targets, MaskView(mask));
}

double loss(const Network& net, const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
            const BatchMask& mask) {
  check_batch(net, features, targets);
  check_mask(net.spec(), mask, features.rows());
  return loss_impl(net, features, targets, MaskView(&mask));
}

Parameters gradients(const Network& net, const Eigen::MatrixXd& features,
                     const Eigen::VectorXd& targets, const DropoutMask* mask) {
  check_batch(net, features, targets);
  if (mask != nullptr) check_mask(net.spec(), *mask);
  return backprop(net, features, targets, MaskView(mask)).grads;
}

Parameters gradients(const Network& net, const Eigen::MatrixXd& features,
                     const Eigen::VectorXd& targets, const BatchMask& mask) {
  check_batch(net, features, targets);
  check_mask(net.spec(), mask, features.rows());
  return backprop(net, features, targets, MaskView(&mask)).grads;
}

LossAndGradients loss_and_gradients(const Network& net, const Eigen::MatrixXd& features,
                                    const Eigen::VectorXd& targets, const BatchMask* mask) {
  check_batch(net, features, targets);
  if (mask != nullptr) {
    check_mask(net.spec(), *mask, features.rows());
    return backprop(net, features, targets, MaskView(mask));
  }
  return backprop(net, features, targets, MaskView{});
}

}  // namespace dropal
