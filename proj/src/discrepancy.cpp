#include "kgd/discrepancy.hpp"

#include <cmath>

namespace kgd {

Vector gen_score(const ReferenceDistribution& ref, const VariationalLoss& loss, const EmpiricalMeasure& q,
                 const Eigen::Ref<const Vector>& x) {
  require(static_cast<std::size_t>(x.size()) == ref.dim(), "gen_score: dimension mismatch");
  return ref.log_grad(x) - loss.var_grad(q, x);
}

Matrix gen_scores_at_atoms(const ReferenceDistribution& ref, const VariationalLoss& loss, const EmpiricalMeasure& q) {
  require(q.dim() == ref.dim(), "gen_scores: measure and reference dimensions differ");
  Matrix scores = -loss.var_grad_atoms(q);
  const Vector inv_var = ref.variances().cwiseInverse();
  scores -= (q.atoms().colwise() - ref.mean()).cwiseProduct(inv_var.replicate(1, q.atoms().cols()));
  return scores;
}

double stein_kernel_value(const DerivativeBundle& k, const Eigen::Ref<const Vector>& bx,
                          const Eigen::Ref<const Vector>& by) {
  return k.trace12 + k.grad1.dot(by) + k.grad2.dot(bx) + k.value * bx.dot(by);
}

double matrix_stein_kernel_value(const MatrixKernelBlocks& k, const Eigen::Ref<const Vector>& bx,
                                 const Eigen::Ref<const Vector>& by) {
  return bx.dot(k.value * by) + by.dot(k.div1) + bx.dot(k.div2) + k.div12;
}

double stein_kernel(const KernelSpec& kernel, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                    const Eigen::Ref<const Vector>& bx, const Eigen::Ref<const Vector>& by) {
  if (const auto* scalar = std::get_if<ScalarKernelSpec>(&kernel))
    return stein_kernel_value(kernel_derivatives(*scalar, x, y), bx, by);
  return matrix_stein_kernel_value(recommended_eval(std::get<RecommendedKernelSpec>(kernel), x, y), bx, by);
}

SteinKernelContext::SteinKernelContext(const ReferenceDistribution& ref, const VariationalLoss& loss,
                                       KernelSpec kernel, const EmpiricalMeasure& q)
    : ref_(&ref), loss_(&loss), kernel_(std::move(kernel)), q_(q), scores_(gen_scores_at_atoms(ref, loss, q)) {}

SteinKernelContext::SteinKernelContext(KernelSpec kernel, const EmpiricalMeasure& q, Matrix atom_scores)
    : kernel_(std::move(kernel)), q_(q), scores_(std::move(atom_scores)) {
  require(scores_.rows() == static_cast<Eigen::Index>(q_.dim()) &&
              scores_.cols() == static_cast<Eigen::Index>(q_.size()),
          "SteinKernelContext: score matrix shape differs from the measure");
}

double SteinKernelContext::eval(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) const {
  require(ref_ != nullptr && loss_ != nullptr, "SteinKernelContext built from cached scores cannot score new points");
  const Vector bx = gen_score(*ref_, *loss_, q_, x);
  const Vector by = gen_score(*ref_, *loss_, q_, y);
  return stein_kernel(kernel_, x, y, bx, by);
}

double SteinKernelContext::eval_atoms(std::size_t i, std::size_t j) const {
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  return stein_kernel(kernel_, q_.atom(i), q_.atom(j), scores_.col(ii), scores_.col(jj));
}

namespace {

// Radial kernels: with delta = x - y and r = |delta|^2,
//   k^Q = -2 d phi' - 4 r phi'' + 2 phi' delta.(b_y - b_x) + phi b_x.b_y
Matrix radial_gram(const ScalarKernelSpec& spec, const Matrix& atoms, const Matrix& scores) {
  const auto n = atoms.cols();
  const auto d = atoms.rows();
  const auto dd = static_cast<double>(d);
  Matrix gram(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      double r = 0.0;
      double proj = 0.0;
      double bb = 0.0;
      for (Eigen::Index a = 0; a < d; ++a) {
        const double delta = atoms(a, i) - atoms(a, j);
        r += delta * delta;
        proj += delta * (scores(a, j) - scores(a, i));
        bb += scores(a, i) * scores(a, j);
      }
      const auto p = radial_profile(spec, r);
      const double value = -2.0 * dd * p.d1 - 4.0 * r * p.d2 + 2.0 * p.d1 * proj + p.phi * bb;
      gram(i, j) = value;
      gram(j, i) = value;
    }
  }
  return gram;
}

}  // namespace

Matrix stein_gram(const KernelSpec& kernel, const Matrix& atoms, const Matrix& scores) {
  require(atoms.rows() == scores.rows() && atoms.cols() == scores.cols(), "stein_gram: atoms/scores shape mismatch");
  if (const auto* scalar = std::get_if<ScalarKernelSpec>(&kernel)) return radial_gram(*scalar, atoms, scores);
  const auto& rec = std::get<RecommendedKernelSpec>(kernel);
  const auto n = atoms.cols();
  Matrix gram(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double value =
          matrix_stein_kernel_value(recommended_eval(rec, atoms.col(i), atoms.col(j)), scores.col(i), scores.col(j));
      gram(i, j) = value;
      gram(j, i) = value;
    }
  }
  return gram;
}

Matrix stein_gram(const SteinKernelContext& ctx) {
  return stein_gram(ctx.kernel(), ctx.measure().atoms(), ctx.scores());
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 64;
  if (values.size() <= kBlock) {
    double total = 0.0;
    for (double v : values) total += v;
    return total;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double v_statistic(const Matrix& gram) {
  require(gram.rows() == gram.cols() && gram.rows() >= 1, "v_statistic: need a nonempty square Gram matrix");
  const auto n = static_cast<double>(gram.rows());
  const double total = pairwise_sum(std::span<const double>(gram.data(), static_cast<std::size_t>(gram.size())));
  // Rounding can only push an exactly-zero PSD double sum slightly negative.
  return std::max(0.0, total / (n * n));
}

double u_statistic(const Matrix& gram) {
  require(gram.rows() == gram.cols(), "u_statistic: Gram matrix must be square");
  require(gram.rows() >= 2, "U-statistic needs at least two atoms");
  const auto n = static_cast<double>(gram.rows());
  const double total = pairwise_sum(std::span<const double>(gram.data(), static_cast<std::size_t>(gram.size())));
  const Vector diag = gram.diagonal();
  const double trace = pairwise_sum(std::span<const double>(diag.data(), static_cast<std::size_t>(diag.size())));
  return (total - trace) / (n * (n - 1.0));
}

KGDEstimate kgd_v_squared(const ReferenceDistribution& ref, const VariationalLoss& loss, const KernelSpec& kernel,
                          const EmpiricalMeasure& q) {
  const SteinKernelContext ctx(ref, loss, kernel, q);
  return {v_statistic(stein_gram(ctx)), Estimator::V, q.size(), describe(kernel), loss.name()};
}

KGDEstimate kgd_u_squared(const ReferenceDistribution& ref, const VariationalLoss& loss, const KernelSpec& kernel,
                          const EmpiricalMeasure& q) {
  require(q.size() >= 2, "U-statistic needs at least two atoms");
  const SteinKernelContext ctx(ref, loss, kernel, q);
  return {u_statistic(stein_gram(ctx)), Estimator::U, q.size(), describe(kernel), loss.name()};
}

double least_squares_slope(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, "least_squares_slope: need matching inputs of length >= 2");
  const auto m = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  require(sxx > 0.0, "least_squares_slope: degenerate abscissae");
  return sxy / sxx;
}

ScalingStudy clt_scaling_study(const ReferenceDistribution& ref, const VariationalLoss& loss,
                               const KernelSpec& kernel, const MeasureSampler& sampler,
                               std::span<const std::size_t> n_grid, std::size_t replicates, std::uint64_t seed) {
  require(n_grid.size() >= 2, "clt_scaling_study: need at least two sample sizes");
  require(replicates >= 2, "clt_scaling_study: need at least two replicates");
  ScalingStudy study;
  std::vector<double> log_n, log_sd, log_mean;
  const RandomStream root(seed);
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const std::size_t n = n_grid[g];
    require(n >= 2, "clt_scaling_study: sample sizes must be >= 2");
    if (g > 0) require(n != n_grid[g - 1], "clt_scaling_study: degenerate grid");
    std::vector<double> v(replicates), u(replicates);
    for (std::size_t r = 0; r < replicates; ++r) {
      RandomStream rng = root.substream(g).substream(r);
      const auto q = sampler(n, rng);
      const Matrix gram = stein_gram(SteinKernelContext(ref, loss, kernel, q));
      v[r] = v_statistic(gram);
      u[r] = u_statistic(gram);
    }
    auto mean_of = [](const std::vector<double>& xs) {
      return pairwise_sum(xs) / static_cast<double>(xs.size());
    };
    auto sd_of = [](const std::vector<double>& xs, double mean) {
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      return std::sqrt(ss / static_cast<double>(xs.size() - 1));
    };
    const double vm = mean_of(v);
    const double um = mean_of(u);
    study.n.push_back(n);
    study.mean.push_back(vm);
    study.sd.push_back(sd_of(v, vm));
    study.u_mean.push_back(um);
    study.u_se.push_back(sd_of(u, um) / std::sqrt(static_cast<double>(replicates)));
    log_n.push_back(std::log(static_cast<double>(n)));
    log_sd.push_back(std::log(study.sd.back()));
    log_mean.push_back(std::log(vm));
  }
  study.sd_slope = least_squares_slope(log_n, log_sd);
  study.mean_slope = least_squares_slope(log_n, log_mean);
  return study;
}

}  // namespace kgd
