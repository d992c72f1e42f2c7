#include "kgd/losses.hpp"

#include <cmath>

namespace kgd {

// --- VariationalLoss -----------------------------------------------------

double VariationalLoss::value(const EmpiricalMeasure&) const {
  throw InvalidArgument("loss '" + name() + "' has no scalar value");
}

Vector VariationalLoss::var_grad(const EmpiricalMeasure& q, const Eigen::Ref<const Vector>& x) const {
  Matrix queries = x;
  return var_grad_batch(q, queries).col(0);
}

LossJacobian VariationalLoss::var_grad_jacobian(const EmpiricalMeasure&) const {
  throw InvalidArgument("loss '" + name() + "' provides no second-order information");
}

double euclid_identity_check(const VariationalLoss& loss, const EmpiricalMeasure& q, std::size_t i, double h0) {
  if (!loss.has_value()) throw InvalidArgument("loss '" + loss.name() + "' has no scalar value");
  require(i < q.size(), "euclid_identity_check: atom index out of range");
  require(h0 > 0.0, "euclid_identity_check: step must be positive");
  const auto col = static_cast<Eigen::Index>(i);
  const Vector vg = loss.var_grad(q, q.atom(i));
  Matrix atoms = q.atoms();
  Vector fd(atoms.rows());
  for (Eigen::Index a = 0; a < atoms.rows(); ++a) {
    const double x0 = atoms(a, col);
    const double h = h0 * (1.0 + std::abs(x0));
    atoms(a, col) = x0 + h;
    const double up = loss.value(EmpiricalMeasure(atoms));
    atoms(a, col) = x0 - h;
    const double down = loss.value(EmpiricalMeasure(atoms));
    atoms(a, col) = x0;
    fd(a) = (up - down) / (2.0 * h);
  }
  return (vg - static_cast<double>(q.size()) * fd).cwiseAbs().maxCoeff();
}

void VariationalLoss::check_dims(const EmpiricalMeasure& q, const Matrix& queries) const {
  require(queries.rows() == static_cast<Eigen::Index>(q.dim()), "var_grad: query dimension differs from measure");
  if (dim() != 0) require(q.dim() == dim(), "var_grad: loss '" + name() + "' expects dimension " + std::to_string(dim()));
}

namespace {

LossJacobian zero_jacobian(std::size_t n, std::size_t d) {
  const auto di = static_cast<Eigen::Index>(d);
  LossJacobian jac;
  jac.query.assign(n, Matrix::Zero(di, di));
  jac.measure.assign(n * n, Matrix::Zero(di, di));
  return jac;
}

}  // namespace

// --- ZeroLoss ------------------------------------------------------------

Matrix ZeroLoss::var_grad_batch(const EmpiricalMeasure& q, const Matrix& queries) const {
  check_dims(q, queries);
  return Matrix::Zero(queries.rows(), queries.cols());
}

LossJacobian ZeroLoss::var_grad_jacobian(const EmpiricalMeasure& q) const { return zero_jacobian(q.size(), q.dim()); }

// --- LinearLoss ----------------------------------------------------------

LinearLoss::LinearLoss(Potential u, Field grad_u, HessianField hess_u)
    : u_(std::move(u)), grad_u_(std::move(grad_u)), hess_u_(std::move(hess_u)) {
  require(static_cast<bool>(u_) && static_cast<bool>(grad_u_), "linear loss needs u and grad u");
}

std::shared_ptr<LinearLoss> LinearLoss::quadratic(double scale, Vector center) {
  return std::make_shared<LinearLoss>(
      [scale, center](const Eigen::Ref<const Vector>& x) { return 0.5 * scale * (x - center).squaredNorm(); },
      [scale, center](const Eigen::Ref<const Vector>& x) -> Vector { return scale * (x - center); },
      [scale](const Eigen::Ref<const Vector>& x) -> Matrix {
        return scale * Matrix::Identity(x.size(), x.size());
      });
}

double LinearLoss::value(const EmpiricalMeasure& q) const {
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) total += u_(q.atom(i));
  return total / static_cast<double>(q.size());
}

Matrix LinearLoss::var_grad_batch(const EmpiricalMeasure& q, const Matrix& queries) const {
  check_dims(q, queries);
  Matrix out(queries.rows(), queries.cols());
  for (Eigen::Index j = 0; j < queries.cols(); ++j) out.col(j) = grad_u_(queries.col(j));
  count(static_cast<std::size_t>(queries.cols()));
  return out;
}

LossJacobian LinearLoss::var_grad_jacobian(const EmpiricalMeasure& q) const {
  require(has_second_order(), "linear loss constructed without a Hessian");
  auto jac = zero_jacobian(q.size(), q.dim());
  for (std::size_t j = 0; j < q.size(); ++j) jac.query[j] = hess_u_(q.atom(j));
  return jac;
}

// --- PairwiseLoss --------------------------------------------------------

std::vector<std::shared_ptr<const PointFeatures>> PairwiseLoss::features_of(const Matrix& points) const {
  std::vector<std::shared_ptr<const PointFeatures>> out;
  out.reserve(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index j = 0; j < points.cols(); ++j) out.push_back(features(points.col(j)));
  return out;
}

double PairwiseLoss::value(const EmpiricalMeasure& q) const {
  if (dim() != 0) require(q.dim() == dim(), "loss '" + name() + "' expects dimension " + std::to_string(dim()));
  const auto feats = features_of(q.atoms());
  const std::size_t n = feats.size();
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    total += pair_value(*feats[j], *feats[j]);
    for (std::size_t k = j + 1; k < n; ++k) total += 2.0 * pair_value(*feats[j], *feats[k]);
  }
  return 0.5 * coupling() * total / static_cast<double>(n * n);
}

Matrix PairwiseLoss::var_grad_batch(const EmpiricalMeasure& q, const Matrix& queries) const {
  check_dims(q, queries);
  const auto atoms = features_of(q.atoms());
  const auto scale = coupling() / static_cast<double>(q.size());
  Matrix out = Matrix::Zero(queries.rows(), queries.cols());
  for (Eigen::Index m = 0; m < queries.cols(); ++m) {
    const auto f = features(queries.col(m));
    for (const auto& a : atoms) out.col(m) += pair_grad(*f, *a);
    out.col(m) *= scale;
  }
  return out;
}

Matrix PairwiseLoss::var_grad_atoms(const EmpiricalMeasure& q) const {
  check_dims(q, q.atoms());
  const auto atoms = features_of(q.atoms());
  const auto scale = coupling() / static_cast<double>(q.size());
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(q.dim()), static_cast<Eigen::Index>(q.size()));
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    for (const auto& a : atoms) out.col(static_cast<Eigen::Index>(j)) += pair_grad(*atoms[j], *a);
  }
  return out * scale;
}

// --- InteractionLoss -----------------------------------------------------

namespace {

struct PointOnly final : PointFeatures {
  explicit PointOnly(Vector p) : x(std::move(p)) {}
  Vector x;
};

const Vector& point_of(const PointFeatures& f) { return static_cast<const PointOnly&>(f).x; }

}  // namespace

InteractionLoss::InteractionLoss(PairPotential w, PairField grad1_w, PairBlock grad11_w, PairBlock grad12_w)
    : w_(std::move(w)), grad1_w_(std::move(grad1_w)), grad11_w_(std::move(grad11_w)), grad12_w_(std::move(grad12_w)) {
  require(static_cast<bool>(w_) && static_cast<bool>(grad1_w_), "interaction loss needs w and grad_1 w");
}

std::shared_ptr<InteractionLoss> InteractionLoss::quadratic(double scale) {
  using R = Eigen::Ref<const Vector>;
  auto loss = std::make_shared<InteractionLoss>(
      [scale](const R& x, const R& y) { return 0.5 * scale * (x - y).squaredNorm(); },
      [scale](const R& x, const R& y) -> Vector { return scale * (x - y); },
      [scale](const R& x, const R&) -> Matrix { return scale * Matrix::Identity(x.size(), x.size()); },
      [scale](const R& x, const R&) -> Matrix { return -scale * Matrix::Identity(x.size(), x.size()); });
  loss->quadratic_scale_ = scale;
  return loss;
}

Matrix InteractionLoss::var_grad_batch(const EmpiricalMeasure& q, const Matrix& queries) const {
  if (!quadratic_scale_) return PairwiseLoss::var_grad_batch(q, queries);
  check_dims(q, queries);
  count(q.size() + static_cast<std::size_t>(queries.cols()));
  const Vector mean = q.atoms().rowwise().mean();
  return (coupling() * *quadratic_scale_) * (queries.colwise() - mean);
}

Matrix InteractionLoss::var_grad_atoms(const EmpiricalMeasure& q) const {
  if (!quadratic_scale_) return PairwiseLoss::var_grad_atoms(q);
  check_dims(q, q.atoms());
  count(q.size());
  const Vector mean = q.atoms().rowwise().mean();
  return (coupling() * *quadratic_scale_) * (q.atoms().colwise() - mean);
}

std::shared_ptr<const PointFeatures> InteractionLoss::features(const Eigen::Ref<const Vector>& x) const {
  count(1);
  return std::make_shared<PointOnly>(x);
}

double InteractionLoss::pair_value(const PointFeatures& a, const PointFeatures& b) const {
  return w_(point_of(a), point_of(b));
}

Vector InteractionLoss::pair_grad(const PointFeatures& a, const PointFeatures& b) const {
  return grad1_w_(point_of(a), point_of(b));
}

LossJacobian InteractionLoss::var_grad_jacobian(const EmpiricalMeasure& q) const {
  require(has_second_order(), "interaction loss constructed without second-order blocks");
  const std::size_t n = q.size();
  const double scale = coupling() / static_cast<double>(n);
  auto jac = zero_jacobian(n, q.dim());
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      jac.query[j] += scale * grad11_w_(q.atom(j), q.atom(i));
      jac.measure[j * n + i] = scale * grad12_w_(q.atom(j), q.atom(i));
    }
  }
  return jac;
}

// --- MFNNLoss ------------------------------------------------------------

MFNNLoss::MFNNLoss(models::RegressionData data, double lambda) : data_(std::move(data)), lambda_(lambda) {
  require(data_.size() >= 1, "MFNN loss constructed without data");
  require(data_.z.size() == data_.y.size(), "MFNN data: z and y lengths differ");
  require(std::isfinite(lambda_) && lambda_ > 0.0, "MFNN loss scale lambda must be positive");
}

Vector MFNNLoss::residuals(const EmpiricalMeasure& q) const {
  require(q.dim() == models::kMfnnDim, "MFNN loss expects dimension 4");
  Vector r = data_.y;
  const double w = q.weight();
  for (Eigen::Index i = 0; i < data_.z.size(); ++i) {
    double mean = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) mean += models::mfnn_forward(q.atom(k), data_.z[i]);
    r[i] -= w * mean;
  }
  return r;
}

double MFNNLoss::value(const EmpiricalMeasure& q) const {
  return lambda_ / static_cast<double>(data_.size()) * residuals(q).squaredNorm();
}

Matrix MFNNLoss::var_grad_batch(const EmpiricalMeasure& q, const Matrix& queries) const {
  check_dims(q, queries);
  const Vector r = residuals(q);
  const double scale = -2.0 * lambda_ / static_cast<double>(data_.size());
  Matrix out = Matrix::Zero(queries.rows(), queries.cols());
  for (Eigen::Index m = 0; m < queries.cols(); ++m) {
    const auto x = queries.col(m);
    for (Eigen::Index i = 0; i < data_.z.size(); ++i) {
      const double z = data_.z[i];
      const double t = std::tanh(x[0] * z + x[1]);
      const double dt = 1.0 - t * t;
      const double ri = r[i];
      out(0, m) += ri * x[2] * dt * z;
      out(1, m) += ri * x[2] * dt;
      out(2, m) += ri * t;
      out(3, m) += ri;
    }
  }
  count(static_cast<std::size_t>(queries.cols()));
  return scale * out;
}

LossJacobian MFNNLoss::var_grad_jacobian(const EmpiricalMeasure& q) const {
  const Vector r = residuals(q);
  const std::size_t n = q.size();
  const auto N = data_.z.size();
  const double scale = 2.0 * lambda_ / static_cast<double>(N);

  std::vector<Matrix> grads(n, Matrix(N, 4));  // rows: grad_x Phi(z_i, x_j)
  LossJacobian jac;
  jac.query.assign(n, Matrix::Zero(4, 4));
  for (std::size_t j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < N; ++i) {
      grads[j].row(i) = models::mfnn_grad(q.atom(j), data_.z[i]).transpose();
      jac.query[j] -= scale * r[i] * models::mfnn_hessian(q.atom(j), data_.z[i]);
    }
  }
  const double cross = scale / static_cast<double>(n);
  jac.measure.resize(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) jac.measure[j * n + i] = cross * grads[j].transpose() * grads[i];
  count(n);
  return jac;
}

// --- PCUQLoss ------------------------------------------------------------

double gaussian_pair_overlap(double delta, double sigma) {
  const double v = 1.0 + 2.0 * sigma * sigma;
  return std::exp(-0.5 * delta * delta / v) / std::sqrt(v);
}

double gaussian_data_overlap(double delta, double sigma) {
  const double v = 1.0 + sigma * sigma;
  return std::exp(-0.5 * delta * delta / v) / std::sqrt(v);
}

namespace {

struct TrajectoryFeatures final : PointFeatures {
  models::ModelOutput output;
  double data_value = 0.0;  // (1/N) sum_i E[kappa(y_i, Y)], Y ~ P(.|x, t_i)
  Vector data_grad;         // its gradient in x
};

const TrajectoryFeatures& traj_of(const PointFeatures& f) { return static_cast<const TrajectoryFeatures&>(f); }

}  // namespace

PCUQLoss::PCUQLoss(std::shared_ptr<const models::MeasurementModel> model, Matrix observations, double lambda_n)
    : model_(std::move(model)), observations_(std::move(observations)), lambda_n_(lambda_n) {
  require(model_ != nullptr, "PCUQ loss constructed without a measurement model");
  require(observations_.size() > 0, "PCUQ loss constructed without data");
  require(static_cast<std::size_t>(observations_.rows()) == model_->num_times(),
          "PCUQ data rows must match the model's observation times");
  require(static_cast<std::size_t>(observations_.cols()) == model_->outputs(),
          "PCUQ data columns must match the model's outputs");
  require(std::isfinite(lambda_n_) && lambda_n_ > 0.0, "PCUQ learning rate lambda_N must be positive");
}

std::shared_ptr<const PointFeatures> PCUQLoss::features(const Eigen::Ref<const Vector>& x) const {
  auto f = std::make_shared<TrajectoryFeatures>();
  f->output = model_->evaluate(x);
  count(1);
  const auto& out = f->output;
  require(out.sensitivities.size() == static_cast<std::size_t>(out.means.rows()),
          "measurement model returned no sensitivities");
  const double sigma = model_->noise_sd();
  const double v = 1.0 + sigma * sigma;
  const auto times = out.means.rows();
  const auto outputs = static_cast<double>(out.means.cols());
  const double norm = std::pow(v, -0.5 * outputs);
  f->data_grad = Vector::Zero(x.size());
  for (Eigen::Index i = 0; i < times; ++i) {
    const Vector resid = (observations_.row(i) - out.means.row(i)).transpose();
    const double g = norm * std::exp(-0.5 * resid.squaredNorm() / v);
    f->data_value += g;
    // d/dx of g = g * (obs - m)/v . dm/dx
    f->data_grad += (g / v) * (out.sensitivities[static_cast<std::size_t>(i)].transpose() * resid);
  }
  f->data_value /= static_cast<double>(times);
  f->data_grad /= static_cast<double>(times);
  return f;
}

double PCUQLoss::pair_value(const PointFeatures& a, const PointFeatures& b) const {
  const auto& fa = traj_of(a);
  const auto& fb = traj_of(b);
  const double sigma = model_->noise_sd();
  const double v = 1.0 + 2.0 * sigma * sigma;
  const auto& ma = fa.output.means;
  const auto& mb = fb.output.means;
  const double norm = std::pow(v, -0.5 * static_cast<double>(ma.cols()));
  const Eigen::Index outs = ma.cols();
  double cross = 0.0;
  for (Eigen::Index i = 0; i < ma.rows(); ++i) {
    for (Eigen::Index j = 0; j < mb.rows(); ++j) {
      double sq = 0.0;
      for (Eigen::Index s = 0; s < outs; ++s) {
        const double diff = ma(i, s) - mb(j, s);
        sq += diff * diff;
      }
      cross += std::exp(-0.5 * sq / v);
    }
  }
  const auto nt = static_cast<double>(ma.rows());
  return norm * cross / (nt * nt) - fa.data_value - fb.data_value;
}

Vector PCUQLoss::pair_grad(const PointFeatures& a, const PointFeatures& b) const {
  const auto& fa = traj_of(a);
  const auto& fb = traj_of(b);
  const double sigma = model_->noise_sd();
  const double v = 1.0 + 2.0 * sigma * sigma;
  const auto& ma = fa.output.means;
  const auto& mb = fb.output.means;
  const double norm = std::pow(v, -0.5 * static_cast<double>(ma.cols()));
  Vector grad = Vector::Zero(fa.data_grad.size());
  const Eigen::Index outs = ma.cols();
  Vector weighted(outs);
  Vector delta(outs);
  for (Eigen::Index i = 0; i < ma.rows(); ++i) {
    weighted.setZero();
    for (Eigen::Index j = 0; j < mb.rows(); ++j) {
      double sq = 0.0;
      for (Eigen::Index s = 0; s < outs; ++s) {
        delta[s] = ma(i, s) - mb(j, s);
        sq += delta[s] * delta[s];
      }
      const double g = std::exp(-0.5 * sq / v);
      for (Eigen::Index s = 0; s < outs; ++s) weighted[s] += g * delta[s];
    }
    grad -= fa.output.sensitivities[static_cast<std::size_t>(i)].transpose() * weighted;
  }
  const auto nt = static_cast<double>(ma.rows());
  return grad * (norm / (v * nt * nt)) - fa.data_grad;
}

PCUQLoss::PairTerms PCUQLoss::pcuq_pair_terms(const Eigen::Ref<const Vector>& x,
                                              const Eigen::Ref<const Vector>& x_prime) const {
  require(x.size() == x_prime.size() && static_cast<std::size_t>(x.size()) == model_->param_dim(),
          "pcuq_pair_terms: dimension mismatch");
  const auto fa = features(x);
  const auto fb = features(x_prime);
  return {pair_value(*fa, *fb), pair_grad(*fa, *fb)};
}

}  // namespace kgd
