#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "l2o/l2o.hpp"

using namespace l2o;

namespace {

L2OWeights tiny_net(double w_out) {
  L2OWeights w = L2OWeights::zeros({2, 1, 1});
  w.W[0](0, 0) = 1.0;  // hidden unit reads x only
  w.W[1](0, 0) = w_out;
  return w;
}

}  // namespace

TEST(Forward, HandComputedTwoCoordinates) {
  const L2OWeights w = tiny_net(1.0);
  const Vector X{1.0, -2.0}, G{-3.0, 5.0};
  const NetActivations a = nn_forward(w, X, G);
  ASSERT_EQ(a.G.size(), 2u);
  EXPECT_EQ(a.G[0](0, 1), -2.0);
  EXPECT_EQ(a.G[0](1, 0), -3.0);
  EXPECT_EQ(a.G[1](0, 0), 1.0);
  EXPECT_EQ(a.G[1](0, 1), 0.0);
  EXPECT_EQ(a.mask[1][0], 1);
  EXPECT_EQ(a.mask[1][1], 0);
  EXPECT_NEAR(a.P[0], 1.4621171572600098, 1e-15);
  EXPECT_EQ(a.P[1], 1.0);
}

TEST(Forward, MaskIsOneAtZeroPreactivation) {
  const L2OWeights w = tiny_net(1.0);
  const NetActivations a = nn_forward(w, Vector{0.0}, Vector{4.0});
  EXPECT_EQ(a.mask[1][0], 1);
  EXPECT_EQ(a.G[1](0, 0), 0.0);
}

TEST(Forward, TwoSigmoidStaysInsideOpenInterval) {
  EXPECT_EQ(detail::two_sigmoid(0.0), 1.0);
  EXPECT_LT(detail::two_sigmoid(800.0), 2.0);
  EXPECT_GT(detail::two_sigmoid(-800.0), 0.0);
  EXPECT_NEAR(detail::two_sigmoid(-1.0) + detail::two_sigmoid(1.0), 2.0, 1e-15);
  EXPECT_NEAR(detail::two_sigmoid(-40.0), 2.0 * std::exp(-40.0) / (1.0 + std::exp(-40.0)), 1e-30);
}

TEST(Forward, ZeroLastLayerGivesUnitStep) {
  InitConfig cfg;
  cfg.dims = {2, 3, 7, 1};
  cfg.e = 5.0;
  const L2OWeights w = init_weights(cfg);
  SeededRng rng(4);
  const NetActivations a = nn_forward(w, gaussian_vector(rng, 30), gaussian_vector(rng, 30));
  for (double p : a.P) EXPECT_EQ(p, 1.0);
}

TEST(Weights, ValidateRejectsMalformed) {
  EXPECT_THROW(L2OWeights::zeros({2}), std::invalid_argument);
  EXPECT_THROW(L2OWeights::zeros({3, 4, 1}), std::invalid_argument);
  EXPECT_THROW(L2OWeights::zeros({2, 4, 2}), std::invalid_argument);
  L2OWeights w = L2OWeights::zeros({2, 4, 1});
  w.W[0] = Matrix(4, 3);
  EXPECT_THROW(w.validate(), std::invalid_argument);
  w = L2OWeights::zeros({2, 4, 1});
  w.W[1](0, 2) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(w.validate(), std::invalid_argument);
}

TEST(Rollout, ZeroLastLayerIsGradientDescent) {
  const QuadraticBatch batch = make_batch(3, 4, 10, 6);
  InitConfig cfg;
  cfg.dims = {2, 2, 16, 1};
  cfg.e = 50.0;
  const L2OWeights w = init_weights(cfg);
  const auto tr = rollout(w, batch, batch.zero_point(), 30);
  const auto gd = gd_rollout(batch, batch.zero_point(), 30);
  for (std::size_t t = 0; t <= 30; ++t) EXPECT_EQ(tr.X[t], gd[t]);
  EXPECT_EQ(final_objective(batch, tr), objective(batch, gd.back()));
}

TEST(Rollout, TraceShapesAndCaching) {
  const QuadraticBatch batch = make_batch(5, 2, 6, 3);
  L2OWeights w = tiny_net(0.3);
  const auto a = rollout(w, batch, batch.zero_point(), 4);
  const auto b = rollout(w, batch, batch.zero_point(), 4, {.keep_activations = false});
  EXPECT_EQ(a.X.size(), 5u);
  EXPECT_EQ(a.Gamma.size(), 5u);
  EXPECT_EQ(a.P.size(), 4u);
  EXPECT_TRUE(a.has_activations());
  EXPECT_FALSE(b.has_activations());
  EXPECT_EQ(a.X.back(), b.X.back());
  for (std::size_t t = 0; t <= 4; ++t) EXPECT_EQ(a.Gamma[t], gradient(batch, a.X[t]));
}

TEST(Rollout, StepMatchesUpdateRule) {
  const QuadraticBatch batch = make_batch(8, 2, 5, 3);
  const L2OWeights w = tiny_net(-0.7);
  SeededRng rng(2);
  const Vector X0 = gaussian_vector(rng, batch.dim());
  const auto tr = rollout(w, batch, X0, 3);
  for (std::size_t t = 1; t <= 3; ++t) {
    const NetActivations a = nn_forward(w, tr.X[t - 1], tr.Gamma[t - 1]);
    for (std::size_t k = 0; k < X0.size(); ++k)
      EXPECT_DOUBLE_EQ(tr.X[t][k], tr.X[t - 1][k] - a.P[k] * tr.Gamma[t - 1][k] / batch.beta());
  }
}

TEST(Rollout, NonFiniteStartReportsStep) {
  const QuadraticBatch batch = make_batch(8, 1, 3, 2);
  Vector X0(3, 0.0);
  X0[1] = std::numeric_limits<double>::infinity();
  try {
    rollout(tiny_net(0.0), batch, X0, 5);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.step(), 1u);
  }
}

TEST(Rollout, RejectsBadArguments) {
  const QuadraticBatch batch = make_batch(8, 1, 3, 2);
  EXPECT_THROW(rollout(tiny_net(0.0), batch, batch.zero_point(), 0), std::invalid_argument);
  EXPECT_THROW(rollout(tiny_net(0.0), batch, Vector(5), 2), std::invalid_argument);
}
