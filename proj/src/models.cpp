#include "kgd/models.hpp"

#include <cmath>
#include <sstream>

#include "kgd/random.hpp"

namespace kgd::models {

double mfnn_forward(const Eigen::Ref<const Vector>& x, double z) {
  return x[2] * std::tanh(x[0] * z + x[1]) + x[3];
}

Vector mfnn_grad(const Eigen::Ref<const Vector>& x, double z) {
  const double t = std::tanh(x[0] * z + x[1]);
  const double dt = 1.0 - t * t;
  Vector g(4);
  g << x[2] * dt * z, x[2] * dt, t, 1.0;
  return g;
}

Matrix mfnn_hessian(const Eigen::Ref<const Vector>& x, double z) {
  const double t = std::tanh(x[0] * z + x[1]);
  const double dt = 1.0 - t * t;
  const double ddt = -2.0 * t * dt;
  Matrix h = Matrix::Zero(4, 4);
  h(0, 0) = x[2] * ddt * z * z;
  h(0, 1) = h(1, 0) = x[2] * ddt * z;
  h(0, 2) = h(2, 0) = dt * z;
  h(1, 1) = x[2] * ddt;
  h(1, 2) = h(2, 1) = dt;
  return h;
}

double mfnn_target_mean(double z) { return 3.0 * std::tanh(3.0 * z + 0.5) - 3.0; }

RegressionData gen_mfnn_data(std::uint64_t seed, std::size_t n, double noise_sd) {
  require(n >= 1, "gen_mfnn_data: need at least one datum");
  RandomStream rng(seed);
  RegressionData data{Vector(static_cast<Eigen::Index>(n)), Vector(static_cast<Eigen::Index>(n))};
  for (Eigen::Index i = 0; i < data.z.size(); ++i) {
    data.z[i] = rng.uniform();
    data.y[i] = mfnn_target_mean(data.z[i]) + noise_sd * rng.normal();
  }
  return data;
}

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

LVParams LVParams::data_generating() {
  LVParams p;
  const double alpha = logistic(-1.0);
  const double beta = logistic(-3.0);
  p.x = {-1.0, logit(beta / alpha)};
  return p;
}

Eigen::Vector2d lv_rhs(const LVParams& params, const Eigen::Vector2d& u) {
  const double a = params.alpha();
  const double b = params.beta();
  return {a * u[0] - b * u[0] * u[1], params.delta * u[0] * u[1] - params.gamma * u[1]};
}

namespace {

using State = Eigen::Matrix<double, 6, 1>;  // (u1, u2, S11, S21, S12, S22), S column-major

int steps_per_unit(double h) {
  require(std::isfinite(h) && h > 0.0 && h <= 1.0, "ODE step must lie in (0, 1]");
  const double inv = 1.0 / h;
  const double rounded = std::round(inv);
  require(std::abs(inv - rounded) < 1e-9 * rounded, "ODE step must divide the unit observation spacing");
  return static_cast<int>(rounded);
}

struct AugmentedRhs {
  double alpha, beta, gamma, delta;
  Eigen::Matrix2d param_partials_coeff;  // d(alpha, beta) / d(x1, x2)

  explicit AugmentedRhs(const LVParams& p)
      : alpha(p.alpha()), beta(p.beta()), gamma(p.gamma), delta(p.delta) {
    const double s2 = logistic(p.x[1]);
    param_partials_coeff << alpha * (1.0 - alpha), 0.0,  //
        beta * (1.0 - alpha), beta * (1.0 - s2);
  }

  State operator()(const State& y, bool with_sens) const {
    const double u1 = y[0], u2 = y[1];
    State dy = State::Zero();
    dy[0] = alpha * u1 - beta * u1 * u2;
    dy[1] = delta * u1 * u2 - gamma * u2;
    if (!with_sens) return dy;
    Eigen::Matrix2d jac;
    jac << alpha - beta * u2, -beta * u1,  //
        delta * u2, delta * u1 - gamma;
    // df/d(alpha, beta): only the prey equation depends on alpha and beta.
    Eigen::Matrix2d df_dab;
    df_dab << u1, -u1 * u2,  //
        0.0, 0.0;
    const Eigen::Map<const Eigen::Matrix2d> sens(y.data() + 2);
    const Eigen::Matrix2d dsens = jac * sens + df_dab * param_partials_coeff;
    Eigen::Map<Eigen::Matrix2d>(dy.data() + 2) = dsens;
    return dy;
  }
};

Trajectory integrate(const LVParams& params, double h, int horizon, bool with_sens) {
  require(horizon >= 0, "ODE horizon must be nonnegative");
  const int per_unit = steps_per_unit(h);
  const double step = 1.0 / per_unit;
  const AugmentedRhs rhs(params);

  State y = State::Zero();
  y[0] = params.xi1;
  y[1] = params.xi2;

  Trajectory traj;
  auto record = [&](int t) {
    traj.times.push_back(static_cast<double>(t));
    traj.states.emplace_back(y[0], y[1]);
    if (with_sens) traj.sensitivities.push_back(Eigen::Map<const Eigen::Matrix2d>(y.data() + 2));
  };
  record(0);
  for (int t = 0; t < horizon; ++t) {
    for (int s = 0; s < per_unit; ++s) {
      const State k1 = rhs(y, with_sens);
      const State k2 = rhs(y + 0.5 * step * k1, with_sens);
      const State k3 = rhs(y + 0.5 * step * k2, with_sens);
      const State k4 = rhs(y + step * k3, with_sens);
      y += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!y.allFinite()) {
      std::ostringstream msg;
      msg << "Lotka-Volterra solution became nonfinite before t=" << (t + 1);
      throw DivergenceError(msg.str(), static_cast<std::size_t>(t + 1));
    }
    record(t + 1);
  }
  return traj;
}

}  // namespace

Trajectory lv_solve(const LVParams& params, double h, int horizon) { return integrate(params, h, horizon, false); }

Trajectory lv_sensitivities(const LVParams& params, double h, int horizon) {
  return integrate(params, h, horizon, true);
}

LVData gen_lv_data(std::uint64_t seed, const LVParams& params, const LVDataOptions& options) {
  const int per_unit = steps_per_unit(options.step);
  const double step = 1.0 / per_unit;
  const double root_step = std::sqrt(step);
  RandomStream intrinsic = RandomStream(seed).substream(1);
  RandomStream observation = RandomStream(seed).substream(2);

  const AugmentedRhs rhs(params);
  State y = State::Zero();
  y[0] = params.xi1;
  y[1] = params.xi2;

  LVData data;
  data.observations.resize(options.horizon + 1, 2);
  auto observe = [&](int t) {
    data.times.push_back(static_cast<double>(t));
    data.observations(t, 0) = y[0] + options.obs_sd * observation.normal();
    data.observations(t, 1) = y[1] + options.obs_sd * observation.normal();
  };
  observe(0);
  for (int t = 0; t < options.horizon; ++t) {
    for (int s = 0; s < per_unit; ++s) {
      // RK4 drift plus additive Brownian increment.
      const State k1 = rhs(y, false);
      const State k2 = rhs(y + 0.5 * step * k1, false);
      const State k3 = rhs(y + 0.5 * step * k2, false);
      const State k4 = rhs(y + step * k3, false);
      y += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      y[0] += options.noise1 * root_step * intrinsic.normal();
      y[1] += options.noise2 * root_step * intrinsic.normal();
    }
    if (!y.allFinite()) throw DivergenceError("stochastic Lotka-Volterra path became nonfinite", static_cast<std::size_t>(t + 1));
    observe(t + 1);
  }
  return data;
}

LotkaVolterraModel::LotkaVolterraModel(LVParams fixed, double step, int horizon)
    : fixed_(fixed), step_(step), horizon_(horizon) {
  steps_per_unit(step_);
  require(horizon_ >= 0, "LV horizon must be nonnegative");
}

ModelOutput LotkaVolterraModel::evaluate(const Eigen::Ref<const Vector>& x) const {
  require(x.size() == 2, "LV model takes two free parameters");
  LVParams p = fixed_;
  p.x = x;
  const auto traj = lv_sensitivities(p, step_, horizon_);
  ModelOutput out;
  out.means.resize(static_cast<Eigen::Index>(traj.states.size()), 2);
  out.sensitivities.reserve(traj.states.size());
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    out.means.row(static_cast<Eigen::Index>(i)) = traj.states[i].transpose();
    out.sensitivities.emplace_back(traj.sensitivities[i]);
  }
  return out;
}

LocationModel::LocationModel(std::size_t dim, std::size_t num_times, double noise_sd)
    : dim_(dim), times_(num_times), sd_(noise_sd) {
  require(dim_ >= 1 && times_ >= 1, "location model needs dim >= 1 and at least one time");
  require(sd_ >= 0.0, "location model noise must be nonnegative");
}

ModelOutput LocationModel::evaluate(const Eigen::Ref<const Vector>& x) const {
  require(static_cast<std::size_t>(x.size()) == dim_, "location model: dimension mismatch");
  const auto d = static_cast<Eigen::Index>(dim_);
  ModelOutput out;
  out.means = x.transpose().replicate(static_cast<Eigen::Index>(times_), 1);
  out.sensitivities.assign(times_, Matrix::Identity(d, d));
  return out;
}

}  // namespace kgd::models
