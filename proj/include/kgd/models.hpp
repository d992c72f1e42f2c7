#pragma once

#include <cstdint>
#include <vector>

#include "kgd/core.hpp"

namespace kgd::models {

// --- Two-layer mean-field network unit, x = (w1, b1, w2, b2) -------------

inline constexpr std::size_t kMfnnDim = 4;

double mfnn_forward(const Eigen::Ref<const Vector>& x, double z);
Vector mfnn_grad(const Eigen::Ref<const Vector>& x, double z);
Matrix mfnn_hessian(const Eigen::Ref<const Vector>& x, double z);

struct RegressionData {
  Vector z;
  Vector y;
  std::size_t size() const { return static_cast<std::size_t>(z.size()); }
};

/// Regression mean 3 tanh(3z + 1/2) - 3.
double mfnn_target_mean(double z);

/// z ~ U(0,1), y ~ N(mfnn_target_mean(z), noise_sd^2).
RegressionData gen_mfnn_data(std::uint64_t seed, std::size_t n, double noise_sd = 0.1);

// --- Lotka-Volterra --------------------------------------------------------

double logistic(double v);
double logit(double p);

/// Free parameters x = (logit(alpha), logit(beta / alpha)); everything else fixed.
struct LVParams {
  Eigen::Vector2d x{0.0, 0.0};
  double gamma = 0.4;
  double delta = 0.02;
  double xi1 = 10.0;
  double xi2 = 15.0;
  double sigma = 1.0;

  double alpha() const { return logistic(x[0]); }
  double beta() const { return alpha() * logistic(x[1]); }

  /// alpha = logistic(-1), beta = logistic(-3).
  static LVParams data_generating();
};

/// States and forward sensitivities on the integer grid 0, 1, ..., horizon.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::Vector2d> states;
  /// d u / d x at each time, rows = species, cols = free parameter. Empty if not requested.
  std::vector<Eigen::Matrix2d> sensitivities;
};

/// Right-hand side of the LV system at state u.
Eigen::Vector2d lv_rhs(const LVParams& params, const Eigen::Vector2d& u);

/// Classical RK4 with fixed step h (h must divide 1).
Trajectory lv_solve(const LVParams& params, double h = 0.01, int horizon = 60);

/// RK4 on the state augmented with the forward sensitivity equations.
Trajectory lv_sensitivities(const LVParams& params, double h = 0.01, int horizon = 60);

struct LVDataOptions {
  double noise1 = 0.1;
  double noise2 = 0.2;
  double obs_sd = 1.0;
  double step = 0.005;
  int horizon = 60;
};

struct LVData {
  std::vector<double> times;
  /// One row per observation time, one column per species.
  Matrix observations;
};

/// Intrinsic-noise LV trajectory observed at integer times with Gaussian noise.
LVData gen_lv_data(std::uint64_t seed, const LVParams& params = LVParams::data_generating(),
                   const LVDataOptions& options = {});

// --- Measurement models for prediction-centric losses ----------------------

/// Predictive means and their parameter sensitivities at the observation times.
struct ModelOutput {
  /// num_times x outputs.
  Matrix means;
  /// One (outputs x param_dim) block per observation time.
  std::vector<Matrix> sensitivities;
};

/// Gaussian measurement model y(t_i) ~ N(m(x, t_i), sigma^2 I) with differentiable mean.
class MeasurementModel {
 public:
  virtual ~MeasurementModel() = default;
  virtual std::size_t param_dim() const = 0;
  virtual std::size_t outputs() const = 0;
  virtual std::size_t num_times() const = 0;
  virtual double noise_sd() const = 0;
  virtual ModelOutput evaluate(const Eigen::Ref<const Vector>& x) const = 0;
};

/// LV populations at t = 0..horizon; x is the two free parameters.
class LotkaVolterraModel final : public MeasurementModel {
 public:
  explicit LotkaVolterraModel(LVParams fixed = LVParams::data_generating(), double step = 0.01, int horizon = 60);
  std::size_t param_dim() const override { return 2; }
  std::size_t outputs() const override { return 2; }
  std::size_t num_times() const override { return static_cast<std::size_t>(horizon_ + 1); }
  double noise_sd() const override { return fixed_.sigma; }
  ModelOutput evaluate(const Eigen::Ref<const Vector>& x) const override;

 private:
  LVParams fixed_;
  double step_;
  int horizon_;
};

/// Gaussian location model: m(x, t_i) = x for every time, outputs = dim.
class LocationModel final : public MeasurementModel {
 public:
  LocationModel(std::size_t dim, std::size_t num_times, double noise_sd);
  std::size_t param_dim() const override { return dim_; }
  std::size_t outputs() const override { return dim_; }
  std::size_t num_times() const override { return times_; }
  double noise_sd() const override { return sd_; }
  ModelOutput evaluate(const Eigen::Ref<const Vector>& x) const override;

 private:
  std::size_t dim_;
  std::size_t times_;
  double sd_;
};

}  // namespace kgd::models
