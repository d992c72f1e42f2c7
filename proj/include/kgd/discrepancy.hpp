#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kgd/core.hpp"
#include "kgd/kernels.hpp"
#include "kgd/losses.hpp"
#include "kgd/random.hpp"

namespace kgd {

/// Generalised score b_Q(x) = grad log q0(x) - grad_V L(Q)(x).
Vector gen_score(const ReferenceDistribution& ref, const VariationalLoss& loss, const EmpiricalMeasure& q,
                 const Eigen::Ref<const Vector>& x);

/// b_Q at every atom of Q, as a d x n matrix.
Matrix gen_scores_at_atoms(const ReferenceDistribution& ref, const VariationalLoss& loss, const EmpiricalMeasure& q);

/// Stein kernel for K = k I given the derivative bundle of k at (x, y) and the scores at x and y:
///   trace12 + grad1 . b(y) + grad2 . b(x) + k b(x) . b(y)
double stein_kernel_value(const DerivativeBundle& k, const Eigen::Ref<const Vector>& bx,
                          const Eigen::Ref<const Vector>& by);

/// Matrix-kernel Stein kernel:
///   b(x)^T K b(y) + b(y) . div_1 K + b(x) . div_2 K + div_1 div_2 K
double matrix_stein_kernel_value(const MatrixKernelBlocks& k, const Eigen::Ref<const Vector>& bx,
                                 const Eigen::Ref<const Vector>& by);

/// Dispatch on the kernel type: scalar kernels go through the scalar formula, weighted
/// matrix kernels through the matrix formula.
double stein_kernel(const KernelSpec& kernel, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
                    const Eigen::Ref<const Vector>& bx, const Eigen::Ref<const Vector>& by);

/// (kernel, reference, loss) bound to a fixed empirical measure, with the per-atom
/// scores computed once at construction.
class SteinKernelContext {
 public:
  SteinKernelContext(const ReferenceDistribution& ref, const VariationalLoss& loss, KernelSpec kernel,
                     const EmpiricalMeasure& q);
  /// Reuses precomputed atom scores (d x n).
  SteinKernelContext(KernelSpec kernel, const EmpiricalMeasure& q, Matrix atom_scores);

  const EmpiricalMeasure& measure() const { return q_; }
  const KernelSpec& kernel() const { return kernel_; }
  const Matrix& scores() const { return scores_; }

  /// k_K^Q at two arbitrary points; scores evaluated against the bound measure.
  double eval(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) const;
  /// k_K^Q between atoms i and j.
  double eval_atoms(std::size_t i, std::size_t j) const;

 private:
  const ReferenceDistribution* ref_ = nullptr;
  const VariationalLoss* loss_ = nullptr;
  KernelSpec kernel_;
  EmpiricalMeasure q_;
  Matrix scores_;
};

inline double stein_kernel_eval(const SteinKernelContext& ctx, const Eigen::Ref<const Vector>& x,
                                const Eigen::Ref<const Vector>& y) {
  return ctx.eval(x, y);
}

/// Symmetric n x n matrix G_ij = k_K^Q(x_i, x_j).
Matrix stein_gram(const SteinKernelContext& ctx);
/// Same, straight from atoms and scores.
Matrix stein_gram(const KernelSpec& kernel, const Matrix& atoms, const Matrix& scores);

enum class Estimator { V, U };

struct KGDEstimate {
  double value_squared = 0.0;
  Estimator estimator = Estimator::V;
  std::size_t n = 0;
  std::string kernel;
  std::string loss;
};

/// Pairwise (cascade) summation; error grows like O(log n) ulp.
double pairwise_sum(std::span<const double> values);

/// (1/n^2) sum_ij G_ij.
double v_statistic(const Matrix& gram);
/// (1/(n(n-1))) sum_{i != j} G_ij. Requires n >= 2.
double u_statistic(const Matrix& gram);

KGDEstimate kgd_v_squared(const ReferenceDistribution& ref, const VariationalLoss& loss, const KernelSpec& kernel,
                          const EmpiricalMeasure& q);
KGDEstimate kgd_u_squared(const ReferenceDistribution& ref, const VariationalLoss& loss, const KernelSpec& kernel,
                          const EmpiricalMeasure& q);

/// Draws an n-point empirical measure from a fixed distribution.
using MeasureSampler = std::function<EmpiricalMeasure(std::size_t n, RandomStream& rng)>;

struct ScalingStudy {
  std::vector<std::size_t> n;
  std::vector<double> mean;  // mean KGD_V^2 over replicates
  std::vector<double> sd;    // sample standard deviation of KGD_V^2
  std::vector<double> u_mean;
  std::vector<double> u_se;
  double sd_slope = 0.0;  // least-squares slope of log sd against log n
  double mean_slope = 0.0;
};

/// Replicated KGD estimates over a grid of sample sizes, with log-log slopes.
ScalingStudy clt_scaling_study(const ReferenceDistribution& ref, const VariationalLoss& loss,
                               const KernelSpec& kernel, const MeasureSampler& sampler,
                               std::span<const std::size_t> n_grid, std::size_t replicates, std::uint64_t seed);

/// Ordinary least-squares slope of ys on xs.
double least_squares_slope(std::span<const double> xs, std::span<const double> ys);

}  // namespace kgd
