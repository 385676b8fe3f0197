#include "dropal/optimizer.hpp"

#include <cmath>

#include "dropal/error.hpp"

namespace dropal {

void AdamConfig::validate() const {
  if (!(step_size > 0.0)) throw ConfigError("optimizer step size must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("optimizer moment decay rates must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("optimizer epsilon must be positive");
}

OptimizerState OptimizerState::for_network(const Network& net, AdamConfig config) {
  config.validate();
  OptimizerState s;
  s.config = config;
  s.first_moment = Parameters::zeros(net.spec());
  s.second_moment = Parameters::zeros(net.spec());
  return s;
}

namespace {

template <typename Param, typename Moment>
void adam_update(Param& param, const Moment& grad, Moment& m, Moment& v, const AdamConfig& c,
                 double correction1, double correction2) {
  m = c.beta1 * m + (1.0 - c.beta1) * grad;
  v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseAbs2();
  param.array() -= c.step_size * (m.array() / correction1) /
                   ((v.array() / correction2).sqrt() + c.epsilon);
}

}  // namespace

void optimizer_step(Network& net, const Parameters& grads, OptimizerState& state) {
  auto& p = net.params();
  if (!grads.same_shape(p) || !state.first_moment.same_shape(p) ||
      !state.second_moment.same_shape(p)) {
    throw ShapeError("gradient or optimizer state shape does not match the network");
  }
  if (!grads.all_finite()) throw DivergenceError("non-finite gradient", 0);

  ++state.step_count;
  const auto t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.config.beta1, t);
  const double correction2 = 1.0 - std::pow(state.config.beta2, t);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    adam_update(p.weights[l], grads.weights[l], state.first_moment.weights[l],
                state.second_moment.weights[l], state.config, correction1, correction2);
    adam_update(p.biases[l], grads.biases[l], state.first_moment.biases[l],
                state.second_moment.biases[l], state.config, correction1, correction2);
  }
}

}  // namespace dropal
