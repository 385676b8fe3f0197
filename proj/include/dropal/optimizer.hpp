#pragma once

#include <cstdint>

#include "dropal/network.hpp"

namespace dropal {

struct AdamConfig {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// First/second moment accumulators shaped like the network parameters.
struct OptimizerState {
  AdamConfig config;
  Parameters first_moment;
  Parameters second_moment;
  std::uint64_t step_count = 0;

  static OptimizerState for_network(const Network& net, AdamConfig config = {});
};

/// One bias-corrected Adam update, in place. Throws DivergenceError (epoch 0)
/// when the gradient holds a non-finite entry; parameters are left untouched then.
void optimizer_step(Network& net, const Parameters& grads, OptimizerState& state);

}  // namespace dropal
