#include "kgd/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kgd {

void OptimizerSpec::validate() const {
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw InvalidArgument("step size must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("adam beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("adam beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw InvalidArgument("adam epsilon must be positive");
}

SamplerState make_mfld_state(EmpiricalMeasure q, std::uint64_t seed) {
  SamplerState state(std::move(q));
  const RandomStream root(seed);
  state.noise.reserve(state.q.size());
  for (std::size_t i = 0; i < state.q.size(); ++i) state.noise.push_back(root.substream(i));
  return state;
}

void check_particles(const Matrix& atoms, std::size_t step) {
  for (Eigen::Index i = 0; i < atoms.cols(); ++i) {
    const double norm = atoms.col(i).norm();
    if (!std::isfinite(norm) || norm > kDivergenceRadius)
      throw DivergenceError("particle " + std::to_string(i) + " diverged at step " + std::to_string(step), step);
  }
}

void apply_descent(SamplerState& state, const Matrix& grad, const OptimizerSpec& optimizer) {
  optimizer.validate();
  Matrix atoms = state.q.atoms();
  require(grad.rows() == atoms.rows() && grad.cols() == atoms.cols(), "apply_descent: gradient shape mismatch");
  if (optimizer.method == Integrator::Euler) {
    atoms -= optimizer.step_size * grad;
  } else {
    if (state.adam_m.rows() != grad.rows() || state.adam_m.cols() != grad.cols()) {
      state.adam_m = Matrix::Zero(grad.rows(), grad.cols());
      state.adam_v = Matrix::Zero(grad.rows(), grad.cols());
    }
    state.adam_m = optimizer.beta1 * state.adam_m + (1.0 - optimizer.beta1) * grad;
    state.adam_v = optimizer.beta2 * state.adam_v + (1.0 - optimizer.beta2) * grad.cwiseAbs2();
    const double t = static_cast<double>(state.step + 1);
    const double c1 = 1.0 - std::pow(optimizer.beta1, t);
    const double c2 = 1.0 - std::pow(optimizer.beta2, t);
    const Matrix m_hat = state.adam_m / c1;
    const Matrix v_hat = state.adam_v / c2;
    atoms.array() -= optimizer.step_size * m_hat.array() / (v_hat.array().sqrt() + optimizer.epsilon);
  }
  ++state.step;
  check_particles(atoms, state.step);
  state.q = EmpiricalMeasure(std::move(atoms));
}

void mfld_step(SamplerState& state, const ReferenceDistribution& ref, const VariationalLoss& loss, double epsilon,
               double noise_scale) {
  require(epsilon > 0.0, "step size must be positive");
  const std::size_t n = state.q.size();
  require(state.noise.size() == n, "mfld_step: state needs one noise stream per particle");
  const Matrix scores = gen_scores_at_atoms(ref, loss, state.q);
  Matrix atoms = state.q.atoms() + epsilon * scores;
  const double amplitude = noise_scale * std::sqrt(2.0 * epsilon);
  for (std::size_t i = 0; i < n; ++i) {
    auto col = atoms.col(static_cast<Eigen::Index>(i));
    for (Eigen::Index a = 0; a < col.size(); ++a) col(a) += amplitude * state.noise[i].normal();
  }
  ++state.step;
  check_particles(atoms, state.step);
  state.q = EmpiricalMeasure(std::move(atoms));
}

Matrix vgd_rhs(const ScalarKernelSpec& kernel, const Matrix& atoms, const Matrix& scores) {
  kernel.validate();
  const auto n = atoms.cols();
  const auto d = atoms.rows();
  Matrix rhs = Matrix::Zero(d, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Vector delta = atoms.col(j) - atoms.col(i);
      const auto p = radial_profile(kernel, delta.squaredNorm());
      // grad_1 k(x_j, x_i) = 2 phi'(r) (x_j - x_i)
      rhs.col(i) += p.phi * scores.col(j) + 2.0 * p.d1 * delta;
    }
  }
  return rhs / static_cast<double>(n);
}

Matrix vgd_rhs(const ReferenceDistribution& ref, const VariationalLoss& loss, const ScalarKernelSpec& kernel,
               const EmpiricalMeasure& q) {
  return vgd_rhs(kernel, q.atoms(), gen_scores_at_atoms(ref, loss, q));
}

void vgd_step(SamplerState& state, const ReferenceDistribution& ref, const VariationalLoss& loss,
              const ScalarKernelSpec& kernel, const OptimizerSpec& optimizer) {
  // Descent integrators move against the gradient, so feed them -rhs.
  apply_descent(state, -vgd_rhs(ref, loss, kernel, state.q), optimizer);
}

namespace {

Matrix kgdd_grad_fd(const EmpiricalMeasure& q, const ReferenceDistribution& ref, const VariationalLoss& loss,
                    const KernelSpec& kernel, double h0) {
  Matrix atoms = q.atoms();
  Matrix grad(atoms.rows(), atoms.cols());
  for (Eigen::Index i = 0; i < atoms.cols(); ++i) {
    for (Eigen::Index a = 0; a < atoms.rows(); ++a) {
      const double x0 = atoms(a, i);
      const double h = h0 * (1.0 + std::abs(x0));
      atoms(a, i) = x0 + h;
      const double up = kgd_v_squared(ref, loss, kernel, EmpiricalMeasure(atoms)).value_squared;
      atoms(a, i) = x0 - h;
      const double down = kgd_v_squared(ref, loss, kernel, EmpiricalMeasure(atoms)).value_squared;
      atoms(a, i) = x0;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw DivergenceError("kgdd_grad: nonfinite KGD inside the difference stencil", 0);
      grad(a, i) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

// Chain rule through the Stein kernel with delta = x - y, r = |delta|^2:
//   d/dx k^Q (scores fixed) = delta [-4 d phi'' - 8 phi'' - 8 r phi''' + 4 phi'' delta.(b_y - b_x) + 2 phi' b_x.b_y]
//                             + 2 phi' (b_y - b_x)
//   d/db_x k^Q = -2 phi' delta + phi b_y
// and each score depends on every atom through the loss Jacobian.
Matrix kgdd_grad_analytic(const EmpiricalMeasure& q, const ReferenceDistribution& ref, const VariationalLoss& loss,
                          const ScalarKernelSpec& kernel) {
  require(loss.has_second_order(), "analytic KGD-descent gradient needs a loss with second-order information");
  kernel.validate();
  const auto n = static_cast<Eigen::Index>(q.size());
  const auto d = static_cast<Eigen::Index>(q.dim());
  const double dd = static_cast<double>(d);
  const Matrix& atoms = q.atoms();
  const Matrix scores = gen_scores_at_atoms(ref, loss, q);

  Matrix explicit_part = Matrix::Zero(d, n);
  Matrix beta = Matrix::Zero(d, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const Vector delta = atoms.col(i) - atoms.col(c);
      const double r = delta.squaredNorm();
      const auto p = radial_profile(kernel, r);
      const Vector db = scores.col(c) - scores.col(i);
      const double coef = -4.0 * dd * p.d2 - 8.0 * p.d2 - 8.0 * r * p.d3 + 4.0 * p.d2 * delta.dot(db) +
                          2.0 * p.d1 * scores.col(i).dot(scores.col(c));
      explicit_part.col(i) += coef * delta + 2.0 * p.d1 * db;
      beta.col(i) += -2.0 * p.d1 * delta + p.phi * scores.col(c);
    }
  }

  const LossJacobian jac = loss.var_grad_jacobian(q);
  const Vector ref_hess = ref.log_hessian_diag();
  Matrix grad = 2.0 * explicit_part;
  for (Eigen::Index i = 0; i < n; ++i) {
    // J_{i,i} carries the reference and query-point terms.
    Matrix own = -jac.query[static_cast<std::size_t>(i)];
    own.diagonal() += ref_hess;
    grad.col(i) += 2.0 * own.transpose() * beta.col(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Matrix& m = jac.measure[static_cast<std::size_t>(j * n + i)];
      grad.col(i) -= 2.0 * m.transpose() * beta.col(j);
    }
  }
  return grad / static_cast<double>(n * n);
}

}  // namespace

Matrix kgdd_grad(const EmpiricalMeasure& q, const ReferenceDistribution& ref, const VariationalLoss& loss,
                 const KernelSpec& kernel, GradientMethod method, double h0) {
  if (method == GradientMethod::FiniteDifference) {
    require(h0 > 0.0, "finite-difference step must be positive");
    return kgdd_grad_fd(q, ref, loss, kernel, h0);
  }
  const auto* scalar = std::get_if<ScalarKernelSpec>(&kernel);
  require(scalar != nullptr, "analytic KGD-descent gradient supports scalar kernels only");
  return kgdd_grad_analytic(q, ref, loss, *scalar);
}

void kgdd_run(SamplerState& state, const ReferenceDistribution& ref, const VariationalLoss& loss,
              const KernelSpec& kernel, const OptimizerSpec& optimizer, std::size_t iters, GradientMethod method,
              const StepObserver& observer) {
  require(iters >= 1, "kgdd_run: iters must be at least 1");
  optimizer.validate();
  for (std::size_t t = 0; t < iters; ++t) {
    apply_descent(state, kgdd_grad(state.q, ref, loss, kernel, method), optimizer);
    if (observer) observer(state);
  }
}

SearchSpec SearchSpec::grid(Vector lower, Vector upper, std::size_t points_per_dim) {
  SearchSpec s;
  s.kind = Kind::Grid;
  s.lower = std::move(lower);
  s.upper = std::move(upper);
  s.points_per_dim = points_per_dim;
  return s;
}

SearchSpec SearchSpec::sampled(Vector center, double scale, std::size_t count, std::uint64_t seed) {
  SearchSpec s;
  s.kind = Kind::Sampled;
  s.center = std::move(center);
  s.scale = scale;
  s.count = count;
  s.seed = seed;
  return s;
}

namespace {

// Scores KGD_V^2(current + delta_x) for many x. Pairwise losses reuse the
// per-atom features and partial sums of the current measure, so a candidate
// costs one feature evaluation; the arithmetic is ordered exactly as in
// PairwiseLoss::var_grad_atoms on the extended measure.
class GreedyEvaluator {
 public:
  GreedyEvaluator(const std::optional<EmpiricalMeasure>& current, const ReferenceDistribution& ref,
                  const VariationalLoss& loss, const KernelSpec& kernel)
      : ref_(ref), loss_(loss), kernel_(kernel), pairwise_(dynamic_cast<const PairwiseLoss*>(&loss)) {
    if (current) {
      require(current->dim() == ref.dim(), "greedy: measure and reference dimensions differ");
      atoms_ = current->atoms();
    } else {
      atoms_ = Matrix(ref.dim(), 0);
    }
    if (pairwise_ != nullptr) {
      features_ = pairwise_->features_of(atoms_);
      const auto n = static_cast<std::size_t>(atoms_.cols());
      sums_ = Matrix::Zero(atoms_.rows(), atoms_.cols());
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          sums_.col(static_cast<Eigen::Index>(j)) += pairwise_->pair_grad(*features_[j], *features_[k]);
    }
  }

  double operator()(const Eigen::Ref<const Vector>& x) {
    ++evaluations_;
    const auto n = atoms_.cols();
    Matrix extended(atoms_.rows(), n + 1);
    extended.leftCols(n) = atoms_;
    extended.col(n) = x;
    if (pairwise_ == nullptr) {
      const EmpiricalMeasure q(std::move(extended));
      return kgd_v_squared(ref_, loss_, kernel_, q).value_squared;
    }
    const auto fx = pairwise_->features(x);
    const double scale = pairwise_->coupling() / static_cast<double>(n + 1);
    Matrix grads(atoms_.rows(), n + 1);
    Vector own = Vector::Zero(atoms_.rows());
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& fj = *features_[static_cast<std::size_t>(j)];
      grads.col(j) = sums_.col(j) + pairwise_->pair_grad(fj, *fx);
      own += pairwise_->pair_grad(*fx, fj);
    }
    own += pairwise_->pair_grad(*fx, *fx);
    grads.col(n) = own;
    Matrix scores = -scale * grads;
    const Vector inv_var = ref_.variances().cwiseInverse();
    scores -= (extended.colwise() - ref_.mean()).cwiseProduct(inv_var.replicate(1, n + 1));
    return v_statistic(stein_gram(kernel_, extended, scores));
  }

  const Matrix& atoms() const { return atoms_; }
  std::size_t evaluations() const { return evaluations_; }

 private:
  const ReferenceDistribution& ref_;
  const VariationalLoss& loss_;
  const KernelSpec& kernel_;
  const PairwiseLoss* pairwise_;
  Matrix atoms_;
  std::vector<std::shared_ptr<const PointFeatures>> features_;
  Matrix sums_;
  std::size_t evaluations_ = 0;
};

}  // namespace

double greedy_objective(const std::optional<EmpiricalMeasure>& current, const ReferenceDistribution& ref,
                        const VariationalLoss& loss, const KernelSpec& kernel, const Eigen::Ref<const Vector>& x) {
  require(static_cast<std::size_t>(x.size()) == ref.dim(), "greedy_objective: dimension mismatch");
  GreedyEvaluator eval(current, ref, loss, kernel);
  return eval(x);
}

GreedyResult greedy_next(const std::optional<EmpiricalMeasure>& current, const ReferenceDistribution& ref,
                         const VariationalLoss& loss, const KernelSpec& kernel, const SearchSpec& search) {
  const auto d = static_cast<Eigen::Index>(ref.dim());
  require(search.shrink > 0.0 && search.shrink < 1.0, "greedy: refinement shrink factor must lie in (0, 1)");
  require(search.min_step > 0.0, "greedy: refinement min_step must be positive");
  Vector lower, upper;
  std::vector<Vector> candidates;
  double default_step = 0.0;
  if (search.kind == SearchSpec::Kind::Grid) {
    require(search.lower.size() == d && search.upper.size() == d, "greedy: grid bounds must match the dimension");
    require((search.upper.array() > search.lower.array()).all(), "greedy: grid bounds must satisfy lower < upper");
    require(search.points_per_dim >= 2, "greedy: need at least two grid points per axis");
    lower = search.lower;
    upper = search.upper;
    const auto m = search.points_per_dim;
    const Vector spacing = (upper - lower) / static_cast<double>(m - 1);
    default_step = spacing.maxCoeff();
    std::vector<std::size_t> index(static_cast<std::size_t>(d), 0);
    while (true) {
      Vector x(d);
      for (Eigen::Index a = 0; a < d; ++a) x(a) = lower(a) + static_cast<double>(index[static_cast<std::size_t>(a)]) * spacing(a);
      candidates.push_back(std::move(x));
      std::size_t a = 0;
      while (a < index.size() && ++index[a] == m) index[a++] = 0;
      if (a == index.size()) break;
    }
  } else {
    require(search.center.size() == d, "greedy: proposal centre must match the dimension");
    require(search.scale > 0.0, "greedy: proposal scale must be positive");
    lower = search.center.array() - 6.0 * search.scale;
    upper = search.center.array() + 6.0 * search.scale;
    default_step = search.scale / 4.0;
    RandomStream rng(search.seed);
    for (std::size_t k = 0; k < search.count; ++k) {
      Vector x = search.center + search.scale * rng.normal_vector(static_cast<std::size_t>(d));
      candidates.push_back(x.cwiseMax(lower).cwiseMin(upper));
    }
  }
  if (search.include_atoms && current) {
    for (std::size_t i = 0; i < current->size(); ++i) candidates.emplace_back(current->atom(i));
  }
  if (candidates.empty()) throw InvalidArgument("greedy: empty candidate set");

  GreedyEvaluator eval(current, ref, loss, kernel);
  GreedyResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (const auto& x : candidates) {
    const double value = eval(x);
    if (value < best.objective) {
      best.objective = value;
      best.point = x;
    }
  }
  if (!std::isfinite(best.objective)) throw DivergenceError("greedy: no candidate has a finite objective", 0);

  double step = search.initial_step > 0.0 ? search.initial_step : default_step;
  const std::size_t budget = eval.evaluations() + search.max_refine_evals;
  while (step >= search.min_step && eval.evaluations() < budget) {
    bool improved = false;
    for (Eigen::Index a = 0; a < d && eval.evaluations() < budget; ++a) {
      for (const double sign : {1.0, -1.0}) {
        Vector x = best.point;
        x(a) = std::clamp(x(a) + sign * step, lower(a), upper(a));
        if (x(a) == best.point(a)) continue;
        const double value = eval(x);
        if (value < best.objective) {
          best.objective = value;
          best.point = std::move(x);
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= search.shrink;
  }
  best.evaluations = eval.evaluations();
  return best;
}

double param_vi_objective(const ReferenceDistribution& ref, const VariationalLoss& loss, const KernelSpec& kernel,
                          const EmpiricalMeasure& sample) {
  return kgd_u_squared(ref, loss, kernel, sample).value_squared;
}

}  // namespace kgd
