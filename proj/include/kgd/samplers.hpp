#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "kgd/core.hpp"
#include "kgd/discrepancy.hpp"
#include "kgd/kernels.hpp"
#include "kgd/losses.hpp"
#include "kgd/random.hpp"

namespace kgd {

enum class Integrator { Euler, Adam };

struct OptimizerSpec {
  Integrator method = Integrator::Euler;
  double step_size = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// Particle cloud plus whatever per-run state the samplers need.
struct SamplerState {
  explicit SamplerState(EmpiricalMeasure measure) : q(std::move(measure)) {}

  EmpiricalMeasure q;
  std::size_t step = 0;
  // Adam moments, sized lazily on first use.
  Matrix adam_m;
  Matrix adam_v;
  // One noise stream per particle (MFLD only).
  std::vector<RandomStream> noise;
};

/// State whose particle i draws its MFLD noise from substream i of `seed`.
SamplerState make_mfld_state(EmpiricalMeasure q, std::uint64_t seed);

/// Particles further than this from the origin count as diverged.
inline constexpr double kDivergenceRadius = 1e8;

/// Throws DivergenceError if any particle is nonfinite or beyond kDivergenceRadius.
void check_particles(const Matrix& atoms, std::size_t step);

/// Applies one integrator update x <- x - step(grad) to the cloud.
void apply_descent(SamplerState& state, const Matrix& grad, const OptimizerSpec& optimizer);

/// X_i <- X_i + eps b_{Q_n}(X_i) + noise_scale sqrt(2 eps) Z_i, scores from the pre-step cloud.
void mfld_step(SamplerState& state, const ReferenceDistribution& ref, const VariationalLoss& loss, double epsilon,
               double noise_scale = 1.0);

/// Right-hand side (1/n) sum_j k(x_i, x_j) b(x_j) + grad_1 k(x_j, x_i) for every particle (d x n).
Matrix vgd_rhs(const ReferenceDistribution& ref, const VariationalLoss& loss, const ScalarKernelSpec& kernel,
               const EmpiricalMeasure& q);
/// Same, from precomputed atom scores.
Matrix vgd_rhs(const ScalarKernelSpec& kernel, const Matrix& atoms, const Matrix& scores);

void vgd_step(SamplerState& state, const ReferenceDistribution& ref, const VariationalLoss& loss,
              const ScalarKernelSpec& kernel, const OptimizerSpec& optimizer);

enum class GradientMethod { FiniteDifference, Analytic };

/// Gradient of (x_1..x_n) -> KGD_V^2(Q_n), d x n.
///
/// FiniteDifference uses central differences with step h0 (1 + |x_ia|). Analytic needs a
/// scalar kernel and a loss with second-order information.
Matrix kgdd_grad(const EmpiricalMeasure& q, const ReferenceDistribution& ref, const VariationalLoss& loss,
                 const KernelSpec& kernel, GradientMethod method = GradientMethod::FiniteDifference,
                 double h0 = 1e-5);

/// Called after every completed step.
using StepObserver = std::function<void(const SamplerState&)>;

void kgdd_run(SamplerState& state, const ReferenceDistribution& ref, const VariationalLoss& loss,
              const KernelSpec& kernel, const OptimizerSpec& optimizer, std::size_t iters,
              GradientMethod method = GradientMethod::FiniteDifference, const StepObserver& observer = {});

/// Candidate generation and local refinement for the greedy sampler.
struct SearchSpec {
  enum class Kind { Grid, Sampled };
  Kind kind = Kind::Grid;
  /// Grid: box [lower, upper] with points_per_dim points per axis.
  Vector lower;
  Vector upper;
  std::size_t points_per_dim = 21;
  /// Sampled: `count` draws from N(center, scale^2 I); refinement stays within center +- 6 scale.
  Vector center;
  double scale = 1.0;
  std::size_t count = 100;
  std::uint64_t seed = 0;
  /// Existing atoms join the candidate set.
  bool include_atoms = true;
  /// Coordinate refinement; initial_step <= 0 picks the grid spacing (or scale / 4 when sampled).
  double initial_step = 0.0;
  double shrink = 0.5;
  double min_step = 1e-6;
  std::size_t max_refine_evals = 4000;

  static SearchSpec grid(Vector lower, Vector upper, std::size_t points_per_dim);
  static SearchSpec sampled(Vector center, double scale, std::size_t count, std::uint64_t seed);
};

struct GreedyResult {
  Point point;
  double objective = 0.0;  // KGD_V^2 of the extended measure
  std::size_t evaluations = 0;
};

/// KGD_V^2 of current + delta_x (just delta_x when current is empty).
double greedy_objective(const std::optional<EmpiricalMeasure>& current, const ReferenceDistribution& ref,
                        const VariationalLoss& loss, const KernelSpec& kernel, const Eigen::Ref<const Vector>& x);

/// argmin over x of KGD_V^2(current + delta_x), by candidate search then coordinate refinement.
GreedyResult greedy_next(const std::optional<EmpiricalMeasure>& current, const ReferenceDistribution& ref,
                         const VariationalLoss& loss, const KernelSpec& kernel, const SearchSpec& search);

/// U-statistic KGD^2 of a sample from a parametric approximation.
double param_vi_objective(const ReferenceDistribution& ref, const VariationalLoss& loss, const KernelSpec& kernel,
                          const EmpiricalMeasure& sample);

}  // namespace kgd
