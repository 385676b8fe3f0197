#include <cmath>
#include <filesystem>
#include <vector>

#include <gtest/gtest.h>

#include "dropal/checkpoint.hpp"
#include "dropal/error.hpp"
#include "dropal/network.hpp"
#include "dropal/optimizer.hpp"
#include "dropal/trainer.hpp"
#include "gradcheck_oracle.hpp"
#include "test_util.hpp"

using namespace dropal;
using dropal::testing::gradient_check;
using dropal::testing::random_matrix;
using dropal::testing::random_vector;

namespace {

NetworkSpec small_spec(std::size_t in, std::vector<std::size_t> hidden, double pi = 0.5,
                       double alpha = 0.0, double beta = 0.01) {
  NetworkSpec s;
  s.input_dim = in;
  s.hidden_sizes = std::move(hidden);
  s.dropout_prob = pi;
  s.l2_coeff = alpha;
  s.leakiness = beta;
  return s;
}

}  // namespace

TEST(NetworkSpec, RejectsInvalidFields) {
  NetworkSpec s = small_spec(2, {});
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec(2, {3, 0});
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec(2, {3}, 1.0);
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec(2, {3}, 0.5, -1.0);
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec(2, {3}, 0.5, 0.0, 0.0);
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec(0, {3});
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(InitNetwork, ShapesAndZeroBiases) {
  const Network net = init_network(small_spec(2, {3}), 7);
  const auto& p = net.params();
  ASSERT_EQ(p.weights.size(), 2u);
  EXPECT_EQ(p.weights[0].rows(), 3);
  EXPECT_EQ(p.weights[0].cols(), 2);
  EXPECT_EQ(p.weights[1].rows(), 1);
  EXPECT_EQ(p.weights[1].cols(), 3);
  for (const auto& b : p.biases) EXPECT_TRUE((b.array() == 0.0).all());
}

TEST(InitNetwork, DeterministicPerSeed) {
  const auto spec = small_spec(5, {16, 8});
  EXPECT_EQ(init_network(spec, 11), init_network(spec, 11));
  EXPECT_FALSE(init_network(spec, 11) == init_network(spec, 12));
}

TEST(InitNetwork, VarianceMatchesLeakyReluScaling) {
  NetworkSpec spec = small_spec(400, {400});
  const Network net = init_network(spec, 3);
  const Eigen::MatrixXd& w = net.params().weights[0];
  const double mean = w.mean();
  const double var = (w.array() - mean).square().mean();
  const double expected = 2.0 / (400.0 * (1.0 + 0.01 * 0.01));
  EXPECT_NEAR(mean, 0.0, 5e-4);
  EXPECT_NEAR(var / expected, 1.0, 0.02);
}

TEST(NetworkSpec, ParameterCountOfDefaultArchitecture) {
  NetworkSpec spec;
  spec.input_dim = 24;
  // 24*256+256 + 256*128+128 + 128*64+64 + 64*1+1
  const std::size_t by_hand = 6400 + 32896 + 8256 + 65;
  EXPECT_EQ(by_hand, 47617u);
  EXPECT_EQ(spec.parameter_count(), by_hand);
  EXPECT_EQ(init_network(spec, 0).params().size(), by_hand);
}

TEST(NetworkSpec, ParameterCountMatchesAllocatedShapesForRandomSpecs) {
  Stream s(99);
  for (int trial = 0; trial < 50; ++trial) {
    NetworkSpec spec;
    spec.input_dim = 1 + s.below(20);
    spec.hidden_sizes.clear();
    const auto layers = 1 + s.below(4);
    for (std::uint64_t l = 0; l < layers; ++l) spec.hidden_sizes.push_back(1 + s.below(32));
    EXPECT_EQ(Network(spec).params().size(), spec.parameter_count());
  }
}

TEST(LeakyRelu, HandValues) {
  EXPECT_EQ(leaky_relu(1.0, 0.01), 1.0);
  EXPECT_DOUBLE_EQ(leaky_relu(-1.0, 0.01), -0.01);
  EXPECT_EQ(leaky_relu(0.0, 0.01), 0.0);
  const Eigen::VectorXd z = (Eigen::VectorXd(3) << -2.0, 0.0, 3.0).finished();
  const Eigen::VectorXd a = leaky_relu(z, 0.01);
  EXPECT_DOUBLE_EQ(a[0], -0.02);
  EXPECT_EQ(a[1], 0.0);
  EXPECT_EQ(a[2], 3.0);
}

TEST(Forward, AffineIdentity) {
  // Identity activation (leakiness 1) reduces the net to W2 * W1 * x.
  Network net(small_spec(1, {1}, 0.5, 0.0, 1.0));
  net.params().weights[0](0, 0) = 2.0;
  net.params().weights[1](0, 0) = 1.0;
  EXPECT_EQ(forward(net, Eigen::VectorXd::Constant(1, 3.0)), 6.0);
}

TEST(Forward, InvertedDropoutRescalesKeptActivations) {
  Network net(small_spec(1, {1}, 0.5));
  net.params().weights[0](0, 0) = 4.0;  // hidden value 4 for x = 1
  net.params().weights[1](0, 0) = 1.0;
  DropoutMask keep = DropoutMask::all_keep(net.spec(), 0.5);
  EXPECT_EQ(forward(net, Eigen::VectorXd::Ones(1), &keep), 8.0);
  EXPECT_EQ(forward(net, Eigen::VectorXd::Ones(1)), 4.0);
}

TEST(Forward, FullDropLeavesOutputBias) {
  Network net = init_network(small_spec(3, {5, 4}), 1);
  net.params().biases[2][0] = 0.75;
  net.params().biases[0].setConstant(0.3);
  DropoutMask drop = DropoutMask::all_keep(net.spec(), 0.5);
  for (auto& k : drop.keep) k.setZero();
  EXPECT_EQ(forward(net, Eigen::VectorXd::Ones(3), &drop), 0.75);
}

TEST(Forward, DimensionMismatchThrows) {
  const Network net = init_network(small_spec(3, {4}), 1);
  EXPECT_THROW(forward(net, Eigen::VectorXd::Ones(2)), ShapeError);
  DropoutMask bad = DropoutMask::all_keep(small_spec(3, {5}));
  EXPECT_THROW(forward(net, Eigen::VectorXd::Ones(3), &bad), ShapeError);
  EXPECT_THROW(predict(net, Eigen::MatrixXd::Ones(4, 2)), ShapeError);
}

TEST(Forward, MaskFreePassIsDeterministic) {
  const Network net = init_network(small_spec(4, {8, 8}), 5);
  Stream s(1);
  const Eigen::VectorXd x = random_vector(4, s);
  const double first = forward(net, x);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(forward(net, x), first);
}

TEST(Forward, BatchedPredictAgreesWithSinglePass) {
  const Network net = init_network(small_spec(4, {16, 8}), 5);
  Stream s(2);
  const Eigen::MatrixXd x = random_matrix(20, 4, s);
  const Eigen::VectorXd batch = predict(net, x);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    EXPECT_NEAR(batch[r], forward(net, x.row(r).transpose()), 1e-12);
  }
}

TEST(Forward, ZeroDropoutMaskEqualsDeterministicPass) {
  const Network net = init_network(small_spec(3, {6, 5}, 0.0), 4);
  Stream s(8);
  const Eigen::VectorXd x = random_vector(3, s);
  for (int k = 0; k < 20; ++k) {
    const DropoutMask m = DropoutMask::sample(net.spec(), 0.0, s);
    EXPECT_EQ(forward(net, x, &m), forward(net, x));
  }
}

// Property: with identity activations the output is linear in every mask
// entry, so the mask-probability-weighted mean over all 2^H masks equals the
// mask-free output. For pi = 0.5 that weighted mean is the plain average.
TEST(Forward, LinearNetworkMaskExpectationByEnumeration) {
  Stream s(21);
  for (std::size_t width = 1; width <= 4; ++width) {
    for (double pi : {0.5, 0.2, 0.7}) {
      NetworkSpec spec = small_spec(3, {width}, pi, 0.0, 1.0);
      Network net(spec);
      net.params().weights[0] = random_matrix(static_cast<Eigen::Index>(width), 3, s);
      net.params().biases[0] = random_vector(static_cast<Eigen::Index>(width), s);
      net.params().weights[1] = random_matrix(1, static_cast<Eigen::Index>(width), s);
      net.params().biases[1] = random_vector(1, s);
      const Eigen::VectorXd x = random_vector(3, s);

      double weighted = 0.0;
      double plain = 0.0;
      const std::size_t count = std::size_t{1} << width;
      for (std::size_t bits = 0; bits < count; ++bits) {
        DropoutMask m = DropoutMask::all_keep(spec, 1.0 - pi);
        double prob = 1.0;
        for (std::size_t u = 0; u < width; ++u) {
          const bool kept = (bits >> u) & 1U;
          m.keep[0][static_cast<Eigen::Index>(u)] = kept ? 1.0 : 0.0;
          prob *= kept ? 1.0 - pi : pi;
        }
        const double y = forward(net, x, &m);
        weighted += prob * y;
        plain += y / static_cast<double>(count);
      }
      EXPECT_NEAR(weighted, forward(net, x), 1e-12) << "width " << width << " pi " << pi;
      if (pi == 0.5) EXPECT_NEAR(plain, forward(net, x), 1e-12);
    }
  }
}

TEST(Loss, HandValues) {
  Network net(small_spec(1, {1}, 0.5, 0.0, 1.0));
  net.params().weights[0](0, 0) = 1.0;
  net.params().weights[1](0, 0) = 1.0;
  const Eigen::MatrixXd x = (Eigen::MatrixXd(2, 1) << 1.0, 2.0).finished();

  EXPECT_EQ(loss(net, x, (Eigen::VectorXd(2) << 1.0, 2.0).finished()), 0.0);
  // residuals [1, -1]
  EXPECT_EQ(loss(net, x, (Eigen::VectorXd(2) << 0.0, 3.0).finished()), 1.0);

  NetworkSpec reg = net.spec();
  reg.l2_coeff = 1e-5;
  const Network regularized(reg, net.params());  // sum of squared weights = 2
  EXPECT_DOUBLE_EQ(loss(regularized, x, (Eigen::VectorXd(2) << 1.0, 2.0).finished()), 2e-5);
}

TEST(Loss, EmptyBatchThrows) {
  const Network net = init_network(small_spec(2, {3}), 0);
  EXPECT_THROW(loss(net, Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)), ShapeError);
}

TEST(Gradients, MatchCentralDifferencesOnRandomMaskedNetworks) {
  Stream s(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const double alpha = s.uniform(0.0, 0.1);
    NetworkSpec spec = small_spec(2, {8}, 0.5, alpha);
    Network net = init_network(spec, static_cast<std::uint64_t>(trial));
    for (auto& b : net.params().biases) b = random_vector(b.size(), s, -0.3, 0.3);
    const Eigen::MatrixXd x = random_matrix(6, 2, s);
    const Eigen::VectorXd y = random_vector(6, s);
    const DropoutMask mask = DropoutMask::sample(spec, 0.5, s);

    const Parameters g = gradients(net, x, y, &mask);
    const double rel = gradient_check(net, g, [&](const Network& n) { return loss(n, x, y, &mask); });
    EXPECT_LT(rel, 1e-5) << "trial " << trial;

    const BatchMask batch = BatchMask::sample(spec, 6, 0.5, s);
    const Parameters gb = gradients(net, x, y, batch);
    const double rel_b = gradient_check(net, gb, [&](const Network& n) { return loss(n, x, y, batch); });
    EXPECT_LT(rel_b, 1e-5) << "trial " << trial;
  }
}

TEST(Gradients, DroppedUnitReceivesNoGradient) {
  const NetworkSpec spec = small_spec(3, {5}, 0.5, 0.0);
  const Network net = init_network(spec, 9);
  Stream s(4);
  const Eigen::MatrixXd x = random_matrix(7, 3, s);
  const Eigen::VectorXd y = random_vector(7, s);
  DropoutMask mask = DropoutMask::all_keep(spec, 0.5);
  mask.keep[0][2] = 0.0;
  const Parameters g = gradients(net, x, y, &mask);
  EXPECT_TRUE((g.weights[0].row(2).array() == 0.0).all());
  EXPECT_EQ(g.biases[0][2], 0.0);
  EXPECT_EQ(g.weights[1](0, 2), 0.0);
  EXPECT_NE(g.weights[0].row(1).norm(), 0.0);
}

TEST(Gradients, RegularizerOnlyGradientIsTwoAlphaW) {
  const NetworkSpec spec = small_spec(3, {4, 4}, 0.5, 1e-3);
  const Network net = init_network(spec, 17);
  Stream s(5);
  const Eigen::MatrixXd x = random_matrix(5, 3, s);
  const Eigen::VectorXd y = predict(net, x);  // zero residuals
  const Parameters g = gradients(net, x, y);
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    EXPECT_TRUE(g.weights[l] == 2.0 * 1e-3 * net.params().weights[l]);
    EXPECT_TRUE((g.biases[l].array() == 0.0).all());
  }
}

TEST(Optimizer, ZeroGradientFromFreshStateLeavesParameters) {
  Network net = init_network(small_spec(2, {3}), 1);
  const Network before = net;
  auto state = OptimizerState::for_network(net);
  optimizer_step(net, Parameters::zeros(net.spec()), state);
  EXPECT_EQ(net, before);
  EXPECT_EQ(state.step_count, 1u);
}

TEST(Optimizer, ZeroGradientDecaysMoments) {
  Network net = init_network(small_spec(2, {3}), 1);
  auto state = OptimizerState::for_network(net);
  state.first_moment.weights[0].setConstant(0.5);
  state.second_moment.weights[0].setConstant(0.25);
  optimizer_step(net, Parameters::zeros(net.spec()), state);
  EXPECT_TRUE((state.first_moment.weights[0].array() == 0.9 * 0.5).all());
  EXPECT_TRUE((state.second_moment.weights[0].array() == 0.999 * 0.25).all());
}

TEST(Optimizer, FirstStepIsStepSizeTimesNormalizedGradient) {
  Network net(small_spec(1, {1}));
  auto state = OptimizerState::for_network(net);
  Parameters g = Parameters::zeros(net.spec());
  g.weights[0](0, 0) = 0.5;
  g.biases[1][0] = -2.0;
  optimizer_step(net, g, state);
  // m_hat = g and v_hat = g^2 after one bias-corrected step.
  EXPECT_NEAR(net.params().weights[0](0, 0), -1e-3 * 0.5 / (0.5 + 1e-8), 1e-18);
  EXPECT_NEAR(net.params().biases[1][0], 1e-3 * 2.0 / (2.0 + 1e-8), 1e-18);
  EXPECT_EQ(net.params().weights[1](0, 0), 0.0);
}

TEST(Optimizer, ConstantGradientStepApproachesStepSize) {
  Network net(small_spec(1, {1}));
  AdamConfig cfg;
  cfg.step_size = 0.01;
  auto state = OptimizerState::for_network(net, cfg);
  Parameters g = Parameters::zeros(net.spec());
  g.weights[0](0, 0) = 3.0;
  double last = 0.0;
  for (int i = 0; i < 500; ++i) {
    const double before = net.params().weights[0](0, 0);
    optimizer_step(net, g, state);
    last = before - net.params().weights[0](0, 0);
  }
  EXPECT_NEAR(last, 0.01, 1e-9);
}

TEST(Optimizer, NonFiniteGradientThrows) {
  Network net(small_spec(1, {2}));
  auto state = OptimizerState::for_network(net);
  Parameters g = Parameters::zeros(net.spec());
  g.biases[0][1] = std::nan("");
  EXPECT_THROW(optimizer_step(net, g, state), DivergenceError);
}

TEST(Train, ZeroEpochsReturnsNetworkUnchanged) {
  const Network net = init_network(small_spec(2, {4}), 3);
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_EQ(train(net, Eigen::MatrixXd::Ones(4, 2), Eigen::VectorXd::Ones(4), cfg), net);
}

TEST(Train, FitsLinearTarget) {
  const NetworkSpec spec = small_spec(1, {4}, 0.0, 0.0);
  Eigen::MatrixXd x(64, 1);
  for (Eigen::Index i = 0; i < 64; ++i) x(i, 0) = -1.0 + 2.0 * static_cast<double>(i) / 63.0;
  const Eigen::VectorXd y = 2.0 * x.col(0);
  TrainConfig cfg;
  cfg.epochs = 2000;
  cfg.batch_size = 16;
  cfg.seed = 1;
  const Network fitted = train(init_network(spec, 1), x, y, cfg);
  const double rmse = std::sqrt((predict(fitted, x) - y).squaredNorm() / 64.0);
  EXPECT_LT(rmse, 0.01);
}

TEST(Train, DeterministicGivenSeed) {
  const NetworkSpec spec = small_spec(3, {8, 4});
  Stream s(6);
  const Eigen::MatrixXd x = random_matrix(40, 3, s);
  const Eigen::VectorXd y = random_vector(40, s);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 8;
  cfg.seed = 77;
  for (MaskScope scope : {MaskScope::PerExample, MaskScope::PerBatch}) {
    cfg.mask_scope = scope;
    const Network a = train(init_network(spec, 2), x, y, cfg);
    const Network b = train(init_network(spec, 2), x, y, cfg);
    EXPECT_EQ(a, b);
    EXPECT_FALSE(a == init_network(spec, 2));
  }
}

TEST(Train, NonFiniteLossReportsEpoch) {
  const NetworkSpec spec = small_spec(1, {2});
  Eigen::VectorXd y = Eigen::VectorXd::Ones(4);
  y[2] = 1e308;
  TrainConfig cfg;
  cfg.epochs = 5;
  try {
    train(init_network(spec, 0), Eigen::MatrixXd::Ones(4, 1), y, cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 0u);
  }
}

TEST(Checkpoint, RoundTripIsExact) {
  NetworkSpec spec = small_spec(3, {7, 5}, 0.3, 1e-4, 0.02);
  Network net = init_network(spec, 12);
  net.params().biases[1].setConstant(1.0 / 3.0);
  Standardizer st;
  st.feature_mean = (Eigen::VectorXd(3) << 0.1, -2.0 / 7.0, 5.0).finished();
  st.feature_std = (Eigen::VectorXd(3) << 1.0, 0.3, 1e-7).finished();
  st.target_mean = 123.456789;
  st.target_std = 0.1;
  const auto path = std::filesystem::temp_directory_path() / "dropal_ckpt_test.json";
  save_checkpoint(path, {net, st});
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.network, net);
  ASSERT_TRUE(back.standardizer.has_value());
  EXPECT_TRUE(back.standardizer->feature_mean == st.feature_mean);
  EXPECT_TRUE(back.standardizer->feature_std == st.feature_std);
  EXPECT_EQ(back.standardizer->target_mean, st.target_mean);
  EXPECT_EQ(back.standardizer->target_std, st.target_std);
  std::filesystem::remove(path);
}
