#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kgd/core.hpp"
#include "kgd/models.hpp"

namespace kgd {

/// Second-order information for grad_V L at the atoms of Q.
///
/// query[j]        d x d, derivative of x -> grad_V L(Q)(x) at x = x_j
/// measure[j*n+i]  d x d, derivative of grad_V L(Q)(x_j) with respect to atom x_i, query held fixed
struct LossJacobian {
  std::vector<Matrix> query;
  std::vector<Matrix> measure;
};

/// A loss functional L on probability measures, exposed through its variational gradient.
///
/// Implementations are immutable after construction. The evaluation counter
/// tracks the expensive unit of work (a backpropagation or an ODE solve) and
/// is the only mutable state.
class VariationalLoss {
 public:
  virtual ~VariationalLoss() = default;

  virtual std::string name() const = 0;
  /// Required parameter dimension, or 0 if any dimension is accepted.
  virtual std::size_t dim() const { return 0; }

  virtual bool has_value() const { return false; }
  /// L(Q_n), up to an additive constant. Throws if !has_value().
  virtual double value(const EmpiricalMeasure& q) const;

  /// grad_V L(Q)(x) for every column x of `queries`; returns d x m.
  virtual Matrix var_grad_batch(const EmpiricalMeasure& q, const Matrix& queries) const = 0;
  /// grad_V L(Q)(x_j) at the atoms of Q.
  virtual Matrix var_grad_atoms(const EmpiricalMeasure& q) const { return var_grad_batch(q, q.atoms()); }
  Vector var_grad(const EmpiricalMeasure& q, const Eigen::Ref<const Vector>& x) const;

  virtual bool has_second_order() const { return false; }
  virtual LossJacobian var_grad_jacobian(const EmpiricalMeasure& q) const;

  std::size_t evaluations() const { return evaluations_.load(); }
  void reset_evaluations() const { evaluations_.store(0); }

 protected:
  void count(std::size_t k) const { evaluations_.fetch_add(k); }
  void check_dims(const EmpiricalMeasure& q, const Matrix& queries) const;

 private:
  mutable std::atomic<std::size_t> evaluations_{0};
};

inline Vector var_grad(const VariationalLoss& loss, const EmpiricalMeasure& q, const Eigen::Ref<const Vector>& x) {
  return loss.var_grad(q, x);
}

/// max-norm gap between grad_V L(Q)(x_i) and n times the central-difference gradient of
/// (x_1..x_n) -> L(Q_n) in x_i, step h0 (1 + |x_ia|). Requires loss.has_value().
double euclid_identity_check(const VariationalLoss& loss, const EmpiricalMeasure& q, std::size_t i,
                             double h0 = 1e-5);

/// L = 0; the target is Q0 itself.
class ZeroLoss final : public VariationalLoss {
 public:
  std::string name() const override { return "zero"; }
  bool has_value() const override { return true; }
  double value(const EmpiricalMeasure&) const override { return 0.0; }
  Matrix var_grad_batch(const EmpiricalMeasure& q, const Matrix& queries) const override;
  bool has_second_order() const override { return true; }
  LossJacobian var_grad_jacobian(const EmpiricalMeasure& q) const override;
};

/// Potential energy L(Q) = int u dQ, so grad_V L(Q) = grad u regardless of Q.
class LinearLoss final : public VariationalLoss {
 public:
  using Potential = std::function<double(const Eigen::Ref<const Vector>&)>;
  using Field = std::function<Vector(const Eigen::Ref<const Vector>&)>;
  using HessianField = std::function<Matrix(const Eigen::Ref<const Vector>&)>;

  LinearLoss(Potential u, Field grad_u, HessianField hess_u = {});
  /// u(x) = scale/2 |x - center|^2.
  static std::shared_ptr<LinearLoss> quadratic(double scale, Vector center);

  std::string name() const override { return "linear"; }
  bool has_value() const override { return true; }
  double value(const EmpiricalMeasure& q) const override;
  Matrix var_grad_batch(const EmpiricalMeasure& q, const Matrix& queries) const override;
  bool has_second_order() const override { return static_cast<bool>(hess_u_); }
  LossJacobian var_grad_jacobian(const EmpiricalMeasure& q) const override;

  Vector grad_u(const Eigen::Ref<const Vector>& x) const { return grad_u_(x); }

 private:
  Potential u_;
  Field grad_u_;
  HessianField hess_u_;
};

/// Per-point data reused across pair evaluations.
struct PointFeatures {
  virtual ~PointFeatures() = default;
};

/// Losses of interaction form L(Q) = (c/2) iint w dQ dQ with symmetric w,
/// so that grad_V L(Q)(x) = (c/n) sum_j grad_1 w(x, x_j).
class PairwiseLoss : public VariationalLoss {
 public:
  virtual double coupling() const = 0;
  /// Counts one model evaluation.
  virtual std::shared_ptr<const PointFeatures> features(const Eigen::Ref<const Vector>& x) const = 0;
  virtual double pair_value(const PointFeatures& a, const PointFeatures& b) const = 0;
  /// grad_1 w(a, b).
  virtual Vector pair_grad(const PointFeatures& a, const PointFeatures& b) const = 0;

  std::vector<std::shared_ptr<const PointFeatures>> features_of(const Matrix& points) const;

  bool has_value() const override { return true; }
  double value(const EmpiricalMeasure& q) const override;
  Matrix var_grad_batch(const EmpiricalMeasure& q, const Matrix& queries) const override;
  Matrix var_grad_atoms(const EmpiricalMeasure& q) const override;
};

/// Interaction energy with a user-supplied symmetric pair potential; coupling 2,
/// i.e. L(Q_n) = (1/n^2) sum_jk w(x_j, x_k).
class InteractionLoss final : public PairwiseLoss {
 public:
  using PairPotential = std::function<double(const Eigen::Ref<const Vector>&, const Eigen::Ref<const Vector>&)>;
  using PairField = std::function<Vector(const Eigen::Ref<const Vector>&, const Eigen::Ref<const Vector>&)>;
  using PairBlock = std::function<Matrix(const Eigen::Ref<const Vector>&, const Eigen::Ref<const Vector>&)>;

  /// grad11 = d^2 w / dx dx, grad12 = d/dy grad_1 w (row index on x, column index on y).
  InteractionLoss(PairPotential w, PairField grad1_w, PairBlock grad11_w = {}, PairBlock grad12_w = {});
  /// w(x, y) = scale/2 |x - y|^2.
  static std::shared_ptr<InteractionLoss> quadratic(double scale = 1.0);

  std::string name() const override { return "interaction"; }
  double coupling() const override { return 2.0; }
  std::shared_ptr<const PointFeatures> features(const Eigen::Ref<const Vector>& x) const override;
  double pair_value(const PointFeatures& a, const PointFeatures& b) const override;
  Vector pair_grad(const PointFeatures& a, const PointFeatures& b) const override;

  Matrix var_grad_batch(const EmpiricalMeasure& q, const Matrix& queries) const override;
  Matrix var_grad_atoms(const EmpiricalMeasure& q) const override;

  bool has_second_order() const override { return grad11_w_ && grad12_w_; }
  LossJacobian var_grad_jacobian(const EmpiricalMeasure& q) const override;

 private:
  // Set by quadratic(): grad_V L(Q)(x) = 2 scale (x - mean(Q)) in closed form.
  std::optional<double> quadratic_scale_;
  PairPotential w_;
  PairField grad1_w_;
  PairBlock grad11_w_;
  PairBlock grad12_w_;
};

/// Scaled squared-error risk of a mean-field two-layer network:
/// L(Q) = (lambda/N) sum_i (y_i - E_Q[Phi(z_i, X)])^2.
class MFNNLoss final : public VariationalLoss {
 public:
  MFNNLoss(models::RegressionData data, double lambda);

  std::string name() const override { return "mfnn"; }
  std::size_t dim() const override { return models::kMfnnDim; }
  bool has_value() const override { return true; }
  double value(const EmpiricalMeasure& q) const override;
  Matrix var_grad_batch(const EmpiricalMeasure& q, const Matrix& queries) const override;
  bool has_second_order() const override { return true; }
  LossJacobian var_grad_jacobian(const EmpiricalMeasure& q) const override;

  /// y_i - E_Q[Phi(z_i, X)] for every datum.
  Vector residuals(const EmpiricalMeasure& q) const;
  const models::RegressionData& data() const { return data_; }
  double lambda() const { return lambda_; }

 private:
  models::RegressionData data_;
  double lambda_;
};

/// E over y ~ N(m, s^2), y' ~ N(m', s^2) of exp(-(y - y')^2 / 2), with delta = m - m'.
double gaussian_pair_overlap(double delta, double sigma);
/// E over y ~ N(m, s^2) of exp(-(obs - y)^2 / 2), with delta = obs - m.
double gaussian_data_overlap(double delta, double sigma);

/// Prediction-centric loss L(Q) = 1/(2 lambda_N) MMD^2(P_Q, P_N) with a unit-bandwidth
/// Gaussian observation kernel that ignores the time coordinate.
class PCUQLoss final : public PairwiseLoss {
 public:
  /// `observations` has one row per model observation time and one column per output.
  PCUQLoss(std::shared_ptr<const models::MeasurementModel> model, Matrix observations, double lambda_n);

  std::string name() const override { return "pcuq"; }
  std::size_t dim() const override { return model_->param_dim(); }
  double coupling() const override { return 1.0 / lambda_n_; }
  std::shared_ptr<const PointFeatures> features(const Eigen::Ref<const Vector>& x) const override;
  double pair_value(const PointFeatures& a, const PointFeatures& b) const override;
  Vector pair_grad(const PointFeatures& a, const PointFeatures& b) const override;

  struct PairTerms {
    double value = 0.0;
    Vector grad1;
  };
  /// kappa_{P_N}(x, x') and its gradient in x.
  PairTerms pcuq_pair_terms(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x_prime) const;

  const models::MeasurementModel& model() const { return *model_; }
  double lambda_n() const { return lambda_n_; }

 private:
  std::shared_ptr<const models::MeasurementModel> model_;
  Matrix observations_;
  double lambda_n_;
};

}  // namespace kgd
