#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "l2o/l2o.hpp"
#include "theory_oracle.hpp"

using namespace l2o;

namespace {

struct ScalarSet {
  std::vector<double> norms, C;
  double beta, beta0, x, g, y;
  std::size_t T;
};

ScalarSet random_set(SeededRng& rng, std::size_t T) {
  ScalarSet s;
  const std::size_t L = 2 + static_cast<std::size_t>(rng.uniform() * 2.0);
  for (std::size_t l = 0; l < L; ++l) {
    s.norms.push_back(0.05 + 0.5 * rng.uniform());
    s.C.push_back(0.5 + rng.uniform());
  }
  s.beta = 0.5 + 5.0 * rng.uniform();
  s.beta0 = s.beta * (0.01 + 0.5 * rng.uniform());
  s.x = 0.3 * rng.uniform();
  s.g = 0.05 + 0.3 * rng.uniform();
  s.y = 0.1 + rng.uniform();
  s.T = T;
  return s;
}

TheoryQuantities build(const ScalarSet& s, double alpha0) {
  return make_quantities(s.norms, s.C, s.beta, s.beta0, s.x, s.g, s.y, s.T, alpha0);
}

void expect_rel(double got, double want, double tol, const char* what) {
  EXPECT_NEAR(got, want, tol * std::abs(want)) << what;
}

}  // namespace

TEST(Quantities, HandEvaluationAtOrigin) {
  const auto q = make_quantities({0.0, 0.0}, {1.0, 1.0}, 1.0, 0.5, 0.0, 1.0, 1.0, 1, 0.3);
  EXPECT_DOUBLE_EQ(q.Phi[0], 1.0);
  EXPECT_DOUBLE_EQ(q.Lambda[0], 1.0);
  EXPECT_DOUBLE_EQ(q.Theta_L, 1.0);
  EXPECT_DOUBLE_EQ(q.S_lambda_L, 2.0);
  EXPECT_DOUBLE_EQ(q.delta1[0], 1.0);
  EXPECT_EQ(q.delta2, 0.0);
  EXPECT_FALSE(q.overflow);
}

TEST(Quantities, Delta4Limits) {
  // delta3 = 0 when X0 = 0, M^T Y = 0 and T = 1
  const auto q0 = make_quantities({1.0}, {1.0}, 2.0, 1.0, 0.0, 0.0, 1.0, 1, 1.0);
  EXPECT_DOUBLE_EQ(q0.delta4, 0.25);
  const auto big = make_quantities({1e3, 1e3, 1e3}, {1.0, 1.0, 1.0}, 50.0, 1.0, 1.0, 10.0, 5.0, 20, 1.0);
  EXPECT_GE(big.delta4, 0.0);
  EXPECT_TRUE(std::isfinite(big.log_delta4));
  EXPECT_LT(big.log_delta4, -1e9);
  EXPECT_NEAR(big.log_delta4, -big.delta3 * big.Theta_L, 1e-6 * big.delta3 * big.Theta_L);
}

TEST(Quantities, MatchNaiveSummationOracle) {
  SeededRng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t T = 1 + static_cast<std::size_t>(trial % 10);
    const ScalarSet s = random_set(rng, T);
    const auto q = build(s, 0.1);
    const auto o = test::naive_quantities(s.norms, s.C, s.beta, s.x, s.g, s.y, static_cast<int>(T));
    expect_rel(q.Theta_L, o.Theta_L, 1e-12, "Theta_L");
    expect_rel(q.Theta_Lm1, o.Theta_Lm1, 1e-12, "Theta_Lm1");
    expect_rel(q.S_lambda_L, o.S_lambda_L, 1e-12, "S_lambda_L");
    expect_rel(q.S_Lambda_T, o.S_Lambda_T, 1e-12, "S_Lambda_T");
    expect_rel(q.S_Lambda_Tm1, o.S_Lambda_Tm1, 1e-12, "S_Lambda_Tm1");
    expect_rel(q.zeta1, o.zeta1, 1e-12, "zeta1");
    expect_rel(q.zeta2, o.zeta2, 1e-12, "zeta2");
    expect_rel(q.delta2, o.delta2, 1e-12, "delta2");
    expect_rel(q.delta3, o.delta3, 1e-12, "delta3");
    expect_rel(q.delta4, o.delta4, 1e-12, "delta4");
    for (std::size_t t = 0; t < T; ++t) {
      expect_rel(q.Phi[t], o.Phi[t], 1e-12, "Phi");
      expect_rel(q.Lambda[t], o.Lambda[t], 1e-12, "Lambda");
      expect_rel(q.delta1[t], o.delta1[t], 1e-12, "delta1");
      expect_rel(std::exp(q.log_delta1[t]), o.delta1[t], 1e-12, "log_delta1");
    }
  }
}

TEST(Quantities, StructuralProperties) {
  SeededRng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = build(random_set(rng, 8), 0.5);
    for (std::size_t j = 1; j < q.T; ++j) {
      EXPECT_GE(q.Phi[j], q.Phi[j - 1]);
      EXPECT_GE(q.Lambda[j], q.Lambda[j - 1]);
    }
    EXPECT_GE(q.delta1.back(), q.S_Lambda_T * (1 - 1e-15));
    EXPECT_GT(q.delta4, 0.0);
    EXPECT_LE(q.delta4, 0.25);
  }
}

TEST(Quantities, LogFieldsSurviveOverflow) {
  const auto q = make_quantities({400.0, 400.0, 400.0}, {1.0, 1.0, 1.0}, 200.0, 0.3, 0.0, 500.0, 10.0, 40, 1.0);
  EXPECT_TRUE(q.overflow);
  EXPECT_TRUE(std::isfinite(q.log_delta1.back()));
  EXPECT_TRUE(std::isfinite(q.log_Theta_L));
  const auto r = check_conditions(q);
  EXPECT_TRUE(std::isfinite(r.log_eta_max_12a));
  EXPECT_TRUE(std::isfinite(r.log_eta_max_12b));
}

TEST(Quantities, RejectsBadInput) {
  EXPECT_THROW(make_quantities({1.0}, {}, 1.0, 1.0, 0, 1, 1, 0, 1), std::invalid_argument);
  EXPECT_THROW(make_quantities({}, {}, 1.0, 1.0, 0, 1, 1, 2, 1), std::invalid_argument);
  EXPECT_THROW(make_quantities({1.0}, {1.0, 2.0}, 1.0, 1.0, 0, 1, 1, 2, 1), std::invalid_argument);
  EXPECT_THROW(make_quantities({1.0}, {}, 0.0, 1.0, 0, 1, 1, 2, 1), std::invalid_argument);
}

TEST(Conditions, MonotoneInAlpha0) {
  SeededRng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const ScalarSet s = random_set(rng, 1 + trial % 6);
    bool prev[4] = {false, false, false, false};
    for (double la = -10.0; la <= 40.0; la += 0.5) {
      const auto r = check_conditions(build(s, std::exp(la)));
      const bool now[4] = {r.c11a.pass, r.c11b.pass, r.c11c.pass, r.c11d.pass};
      for (int i = 0; i < 4; ++i) {
        EXPECT_TRUE(now[i] || !prev[i]) << "condition " << i << " lost at log alpha0 " << la;
        prev[i] = now[i];
      }
    }
    EXPECT_TRUE(prev[0] && prev[1] && prev[2] && prev[3]);
  }
}

TEST(Conditions, ZeroAlpha0FailsEveryNonVacuousCondition) {
  SeededRng rng(3);
  const auto r = check_conditions(build(random_set(rng, 5), 0.0));
  EXPECT_FALSE(r.c11a.pass);
  EXPECT_TRUE(r.c11b.vacuous || !r.c11b.pass);
  EXPECT_FALSE(r.c11c.pass);
  EXPECT_FALSE(r.c11d.pass);
  EXPECT_FALSE(r.all_pass());
  EXPECT_EQ(r.eta_max_12b, std::numeric_limits<double>::infinity());
}

TEST(Conditions, LiteralValuesOnSmallSet) {
  SeededRng rng(8);
  const ScalarSet s = random_set(rng, 4);
  const double a0 = 2.0;
  const auto q = build(s, a0);
  const auto r = check_conditions(q, 1e-3);
  const auto o = test::naive_quantities(s.norms, s.C, s.beta, s.x, s.g, s.y, 4);
  const double b = s.beta, b0 = s.beta0, d4 = o.delta4;
  expect_rel(r.c11a.rhs, 8 * (1 + b) * o.zeta2, 1e-12, "11a");
  expect_rel(r.c11a.lhs, a0, 1e-15, "11a lhs");
  double worst = 0;
  for (std::size_t l = 0; l < s.norms.size(); ++l) worst = std::max(worst, o.Theta_L / (s.C[l] * o.lambda_bar[l]));
  expect_rel(r.c11c.rhs, worst * b * b * std::sqrt(b) / (8 * b0 * b0) / (d4 * d4) * o.zeta1 * o.S_Lambda_T, 1e-12,
             "11c");
  expect_rel(r.c11d.rhs,
             (1 + b) * b * b * std::sqrt(b) / (2 * b0 * b0) / (d4 * d4) * o.Theta_L * o.Theta_Lm1 * o.zeta1 *
                 o.zeta2 * o.S_lambda_L * o.S_Lambda_T,
             1e-12, "11d");
  const double LT = o.Lambda.back();
  const double bracket = -0.5 * o.Theta_Lm1 * o.Theta_Lm1 * LT * o.S_Lambda_Tm1 +
                         o.Theta_L * o.Theta_L * (LT + o.delta2) * o.S_lambda_L * o.S_Lambda_T;
  ASSERT_GT(bracket, 0.0);
  expect_rel(r.c11b.rhs, b * b * b / (4 * b0 * b0) / (d4 * d4) * bracket, 1e-11, "11b");
  expect_rel(r.eta_max_12a,
             8 / b * (o.delta2 + LT) / (o.delta2 + o.Theta_L * o.S_Lambda_T * o.S_lambda_L) /
                 (o.S_Lambda_T * o.S_Lambda_T),
             1e-12, "12a");
  expect_rel(r.eta_max_12b, 0.25 * b * b / (b0 * b0) / (d4 * d4) / (a0 * a0), 1e-12, "12b");
  EXPECT_DOUBLE_EQ(r.eta_admissible, std::min(r.eta_max_12a, r.eta_max_12b));
  ASSERT_TRUE(r.rate_base.has_value());
  expect_rel(*r.rate_base, 1 - 4e-3 * (b0 * b0) / (b * b) * d4 * d4 * a0 * a0, 1e-14, "rate base");
}

TEST(Conditions, BracketNeverNegative) {
  // Theta_L^2 S_lambda >= Theta_{L-1}^2, so the positive term always dominates.
  SeededRng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto r = check_conditions(build(random_set(rng, 1 + trial % 12), 1.0));
    EXPECT_FALSE(r.c11b.vacuous);
    EXPECT_GT(r.c11b.rhs, 0.0);
  }
}

TEST(Rate, BaseInsideUnitIntervalBelowCeiling) {
  SeededRng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = build(random_set(rng, 1 + trial % 10), 0.01 + 3 * rng.uniform());
    const auto r = check_conditions(q);
    for (double frac : {1e-9, 1e-3, 0.5, 0.999}) {
      const double base = rate_base(q, frac * r.eta_max_12b);
      EXPECT_GT(base, 0.0);
      EXPECT_LT(base, 1.0);
    }
  }
}

TEST(Rate, CeilingIsRejectedWithBase) {
  SeededRng rng(12);
  const auto q = build(random_set(rng, 3), 1.0);
  const auto r = check_conditions(q);
  try {
    rate_base(q, r.eta_max_12b);
    FAIL() << "expected RateError";
  } catch (const RateError& e) {
    EXPECT_NEAR(e.base(), 0.0, 1e-12);
  }
  EXPECT_THROW(predicted_rate(q, 2 * r.eta_max_12b, 3), RateError);
  EXPECT_THROW(predicted_rate(q, 0.0, 3), std::invalid_argument);
}

TEST(Rate, PowersAndAlignedBound) {
  SeededRng rng(13);
  const auto q = build(random_set(rng, 5), 1.0);
  const double eta = 0.3 * check_conditions(q).eta_max_12b;
  const double base = rate_base(q, eta);
  EXPECT_EQ(predicted_rate(q, eta, 0), 1.0);
  EXPECT_NEAR(predicted_rate(q, eta, 7), std::pow(base, 7), 1e-14);
  const Vector X0{1.0, 2.0}, Xs{0.0, 0.0};
  EXPECT_DOUBLE_EQ(aligned_bound(q, eta, 0, 5, X0, Xs), q.beta / 5.0 * 5.0);
  EXPECT_EQ(aligned_bound(q, eta, 4, 5, X0, X0), 0.0);
  EXPECT_NEAR(aligned_bound(q, eta, 10, 5, X0, Xs), std::pow(base, 10) * q.beta, 1e-12);
  EXPECT_THROW(aligned_bound(q, eta, 1, 5, X0, Vector{1.0}), std::invalid_argument);
}

TEST(Bounds, InitTimeRunHoldsWithZeroInnerGradients) {
  const QuadraticBatch batch = make_batch(31, 3, 8, 5);
  InitConfig cfg;
  cfg.dims = {2, 2, 8, 1};
  cfg.e = 3.0;
  const L2OWeights w = init_weights(cfg);
  const auto tr = rollout(w, batch, batch.zero_point(), 6);
  const auto g = backward(tr, w, batch);
  const auto q = quantities(w, batch, batch.zero_point(), 6);
  const auto rep = verify_bounds(tr, g, w, batch, q, 50, 1, true);
  EXPECT_TRUE(rep.all_pass());
  for (const auto& c : rep.checks) {
    if (c.name == "x_bound_t0") {
      EXPECT_EQ(c.lhs, c.rhs);
    }
    if (c.name == "grad_bound_l1" || c.name == "grad_bound_l2") {
      EXPECT_EQ(c.lhs, 0.0);
    }
  }
  // d > b leaves a null space, so the norm is 1; power iteration approaches from below
  EXPECT_NEAR(rep.contraction_operator_norm, 1.0, 1e-4);
  EXPECT_LE(rep.contraction_operator_norm, 1.0 + 1e-12);
}

TEST(Bounds, RandomWeightsInsideBallPass) {
  for (std::uint64_t s = 0; s < 6; ++s) {
    const QuadraticBatch batch = make_batch(s + 60, 2, 6, 3);
    InitConfig cfg;
    cfg.dims = {2, 3, 5, 1};
    cfg.seed = s;
    const L2OWeights w0 = init_weights(cfg);
    const auto q = quantities(w0, batch, batch.zero_point(), 5);
    L2OWeights w = w0;
    SeededRng rng(s + 1);
    for (std::size_t l = 0; l < w.L(); ++l) {
      const Matrix D = gaussian_matrix(rng, w.W[l].rows(), w.W[l].cols());
      w.W[l] += (0.5 * q.C[l] / spectral_norm(D)) * D;
    }
    const auto tr = rollout(w, batch, batch.zero_point(), 5);
    const auto rep = verify_bounds(tr, backward(tr, w, batch), w, batch, q, 20, s);
    for (const auto& c : rep.checks) {
      EXPECT_TRUE(c.applicable) << c.name;
      EXPECT_TRUE(c.pass) << c.name << " " << c.lhs << " > " << c.rhs;
    }
    for (const auto& c : check_semi_smoothness(w0, w, batch, batch.zero_point(), q)) {
      EXPECT_TRUE(c.applicable);
      EXPECT_TRUE(c.pass) << c.name;
    }
  }
}

TEST(Bounds, OutsideBallIsNotApplicable) {
  const QuadraticBatch batch = make_batch(9, 2, 6, 3);
  InitConfig cfg;
  cfg.dims = {2, 3, 1};
  const L2OWeights w0 = init_weights(cfg);
  const auto q = quantities(w0, batch, batch.zero_point(), 3);
  L2OWeights w = w0;
  w.W[0] *= 100.0;
  const auto semi = check_semi_smoothness(w0, w, batch, batch.zero_point(), q);
  for (const auto& c : semi) EXPECT_FALSE(c.applicable);
  EXPECT_DOUBLE_EQ(weighted_distance(w0, w0, q), 0.0);
}
