#include <gtest/gtest.h>

#include <cmath>

#include "kgd/models.hpp"
#include "kgd/oracles.hpp"
#include "test_helpers.hpp"

using namespace kgd;
using namespace kgd::models;
using kgd::testing::rel_error;

TEST(Mfnn, ZeroWeightsGiveTheBias) {
  Vector x(4);
  x << 0.0, 0.0, 0.0, 1.7;
  for (double z : {0.0, 0.3, 1.0}) {
    EXPECT_DOUBLE_EQ(mfnn_forward(x, z), 1.7);
    Vector expected = Vector::Zero(4);
    expected(3) = 1.0;
    EXPECT_EQ(mfnn_grad(x, z), expected);
  }
}

TEST(Mfnn, SaturatedUnit) {
  Vector x(4);
  x << 1e6, 0.0, 1.0, 0.0;
  EXPECT_NEAR(mfnn_forward(x, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(mfnn_grad(x, 1.0)(0), 0.0, 1e-15);
}

TEST(Mfnn, GradientAndHessianMatchFiniteDifferences) {
  RandomStream rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = rng.normal_vector(4);
    const double z = rng.uniform();
    const Vector fd = oracles::fd_gradient([&](const Eigen::Ref<const Vector>& p) { return mfnn_forward(p, z); }, x);
    EXPECT_LT(rel_error(mfnn_grad(x, z), fd), 1e-6);
    const Matrix h = mfnn_hessian(x, z);
    for (Eigen::Index a = 0; a < 4; ++a) {
      const Vector col = oracles::fd_gradient(
          [&](const Eigen::Ref<const Vector>& p) { return mfnn_grad(p, z)(a); }, x);
      EXPECT_LT(rel_error(Vector(h.col(a)), col), 1e-6);
    }
    EXPECT_EQ((h - h.transpose()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(MfnnData, DefaultSizeAndRange) {
  const auto data = gen_mfnn_data(1, 300);
  ASSERT_EQ(data.size(), 300u);
  EXPECT_GE(data.z.minCoeff(), 0.0);
  EXPECT_LE(data.z.maxCoeff(), 1.0);
}

TEST(MfnnData, NoiseIsCentredAndReproducible) {
  const auto data = gen_mfnn_data(7, 100000);
  double total = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double e = data.y[static_cast<Eigen::Index>(i)] - mfnn_target_mean(data.z[static_cast<Eigen::Index>(i)]);
    total += e;
    sq += e * e;
  }
  EXPECT_LT(std::abs(total / 1e5), 0.002);
  EXPECT_NEAR(std::sqrt(sq / 1e5), 0.1, 0.002);
  const auto again = gen_mfnn_data(7, 100000);
  EXPECT_EQ(data.z, again.z);
  EXPECT_EQ(data.y, again.y);
  EXPECT_NE(gen_mfnn_data(8, 10).y, gen_mfnn_data(7, 10).y);
}

TEST(MfnnData, TargetMean) {
  EXPECT_NEAR(mfnn_target_mean(0.0), 3.0 * std::tanh(0.5) - 3.0, 1e-15);
}

TEST(LotkaVolterra, DataGeneratingParameters) {
  const auto p = LVParams::data_generating();
  EXPECT_NEAR(p.alpha(), logistic(-1.0), 1e-15);
  EXPECT_NEAR(p.beta(), logistic(-3.0), 1e-15);
  EXPECT_NEAR(p.x[1], -1.5413, 1e-4);
}

TEST(LotkaVolterra, InitialStateAndGrid) {
  const auto traj = lv_solve(LVParams::data_generating());
  ASSERT_EQ(traj.states.size(), 61u);
  EXPECT_EQ(traj.states[0], Eigen::Vector2d(10.0, 15.0));
  for (std::size_t t = 0; t < traj.times.size(); ++t) EXPECT_EQ(traj.times[t], static_cast<double>(t));
}

TEST(LotkaVolterra, EquilibriumIsFixed) {
  LVParams p = LVParams::data_generating();
  const Eigen::Vector2d eq(p.gamma / p.delta, p.alpha() / p.beta());
  EXPECT_LT(lv_rhs(p, eq).cwiseAbs().maxCoeff(), 1e-10);
  p.xi1 = eq[0];
  p.xi2 = eq[1];
  const auto traj = lv_solve(p);
  for (const auto& u : traj.states) EXPECT_LT((u - eq).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(LotkaVolterra, RejectsStepsThatDoNotDivideTheGrid) {
  EXPECT_THROW(lv_solve(LVParams::data_generating(), 0.3), InvalidArgument);
  EXPECT_THROW(lv_solve(LVParams::data_generating(), -0.01), InvalidArgument);
}

TEST(LotkaVolterra, BlowUpIsReported) {
  LVParams p = LVParams::data_generating();
  p.gamma = -50.0;  // predator grows without bound
  p.delta = 5.0;
  EXPECT_THROW(lv_solve(p, 0.1), DivergenceError);
}

TEST(LotkaVolterra, Rk4ConvergesAtFourthOrder) {
  const auto p = LVParams::data_generating();
  const auto ref = lv_solve(p, 0.1 / 16.0);
  auto err = [&](double h) {
    const auto traj = lv_solve(p, h);
    double e = 0.0;
    for (std::size_t t = 0; t < traj.states.size(); ++t) e = std::max(e, (traj.states[t] - ref.states[t]).cwiseAbs().maxCoeff());
    return e;
  };
  const double order = std::log2(err(0.1) / err(0.05));
  EXPECT_GE(order, 3.7);
  EXPECT_LE(order, 4.2);
}

TEST(LotkaVolterra, SensitivitiesStartAtZero) {
  const auto traj = lv_sensitivities(LVParams::data_generating());
  EXPECT_EQ(traj.sensitivities[0], Eigen::Matrix2d::Zero());
}

TEST(LotkaVolterra, SensitivitiesMatchFiniteDifferencesAtEveryTime) {
  RandomStream rng(22);
  for (int trial = 0; trial < 3; ++trial) {
    LVParams p = LVParams::data_generating();
    if (trial > 0) p.x += 0.1 * Eigen::Vector2d(rng.normal(), rng.normal());
    const auto traj = lv_sensitivities(p);
    double worst = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double h = 1e-5 * (1.0 + std::abs(p.x[k]));
      LVParams up = p, down = p;
      up.x[k] += h;
      down.x[k] -= h;
      const auto tu = lv_solve(up), td = lv_solve(down);
      for (std::size_t t = 1; t < traj.states.size(); ++t) {
        const Eigen::Vector2d fd = (tu.states[t] - td.states[t]) / (2.0 * h);
        const Eigen::Vector2d an = traj.sensitivities[t].col(k);
        worst = std::max(worst, (an - fd).cwiseAbs().maxCoeff() / std::max(fd.cwiseAbs().maxCoeff(), 1e-3));
      }
    }
    EXPECT_LT(worst, 1e-4);
    // The state part of the augmented solve matches the plain solve.
    const auto plain = lv_solve(p);
    for (std::size_t t = 0; t < plain.states.size(); ++t)
      EXPECT_LT((plain.states[t] - traj.states[t]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(LotkaVolterra, SensitivityToX2OnlyEntersThroughPredation) {
  // Just after t = 0 only beta depends on x2, so the prey equation moves first:
  // d(du/dx2)/dt at t = 0 is (-dbeta/dx2 u1 u2, 0).
  const auto p = LVParams::data_generating();
  const auto traj = lv_sensitivities(p, 0.01, 1);
  const double dbeta = p.beta() * (1.0 - logistic(p.x[1]));
  // After one unit of time the prey sensitivity to x2 is dominated by -dbeta u1 u2 t.
  EXPECT_LT(traj.sensitivities[1](0, 1), 0.0);
  EXPECT_NEAR(traj.sensitivities[1](0, 1) / (-dbeta * 10.0 * 15.0), 1.0, 0.5);
}

TEST(LotkaVolterraData, NoiselessDataEqualsTheSolver) {
  LVDataOptions opts;
  opts.noise1 = opts.noise2 = opts.obs_sd = 0.0;
  const auto data = gen_lv_data(3, LVParams::data_generating(), opts);
  const auto traj = lv_solve(LVParams::data_generating(), opts.step);
  ASSERT_EQ(data.observations.rows(), 61);
  for (int t = 0; t <= 60; ++t) {
    EXPECT_LT(std::abs(data.observations(t, 0) - traj.states[static_cast<std::size_t>(t)][0]), 1e-12);
    EXPECT_LT(std::abs(data.observations(t, 1) - traj.states[static_cast<std::size_t>(t)][1]), 1e-12);
  }
}

TEST(LotkaVolterraData, DefaultsAndReproducibility) {
  const LVDataOptions opts;
  EXPECT_EQ(opts.noise1, 0.1);
  EXPECT_EQ(opts.noise2, 0.2);
  EXPECT_EQ(opts.obs_sd, 1.0);
  const auto a = gen_lv_data(5);
  const auto b = gen_lv_data(5);
  EXPECT_EQ(a.observations, b.observations);
  EXPECT_EQ(a.times.size(), 61u);
  EXPECT_NE(gen_lv_data(6).observations, a.observations);
}

TEST(MeasurementModels, LocationModelIsIdentity) {
  const LocationModel model(3, 4, 0.5);
  Vector x(3);
  x << 1.0, -2.0, 0.5;
  const auto out = model.evaluate(x);
  ASSERT_EQ(out.means.rows(), 4);
  for (int t = 0; t < 4; ++t) {
    EXPECT_EQ(Vector(out.means.row(t).transpose()), x);
    EXPECT_EQ(out.sensitivities[static_cast<std::size_t>(t)], Matrix::Identity(3, 3));
  }
}

TEST(MeasurementModels, LotkaVolterraModelWrapsTheSensitivitySolve) {
  const LotkaVolterraModel model;
  const Vector x = LVParams::data_generating().x;
  const auto out = model.evaluate(x);
  const auto traj = lv_sensitivities(LVParams::data_generating());
  ASSERT_EQ(out.means.rows(), 61);
  EXPECT_EQ(out.means(60, 1), traj.states[60][1]);
  EXPECT_EQ(Matrix(out.sensitivities[60]), Matrix(traj.sensitivities[60]));
}
