#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kgd/config.hpp"
#include "kgd/discrepancy.hpp"
#include "kgd/io.hpp"

namespace kgd::experiments {

/// Everything a sampler run needs besides its own settings.
struct Problem {
  ReferenceDistribution ref;
  std::shared_ptr<VariationalLoss> loss;
  KernelSpec kernel;       // objective kernel
  KernelSpec eval_kernel;  // reporting kernel
};

Problem build_problem(const config::RunConfig& config);

struct TraceRow {
  std::string method;
  std::size_t step = 0;
  std::size_t cost = 0;  // loss evaluations spent by the sampler (backpropagations or ODE solves)
  double kgd_squared = 0.0;
  double wall_seconds = 0.0;
};

struct SamplerRun {
  std::optional<EmpiricalMeasure> particles;
  std::vector<TraceRow> trace;
  bool diverged = false;
  std::size_t diverged_step = 0;
  std::string message;
};

/// mean + scale * Z for n iid standard normal Z.
EmpiricalMeasure gaussian_cloud(const Vector& mean, double scale, std::size_t n, RandomStream& rng);

/// Runs one sampler, recording KGD_V^2 under the reporting kernel every trace_every steps.
/// Divergence is caught and reported in the result rather than thrown.
SamplerRun run_sampler(const Problem& problem, const config::SamplerConfig& sampler, std::uint64_t seed,
                       const std::string& label = "");

// --- studies ---------------------------------------------------------------

/// E KGD_V^2 against n for samples drawn from Q0 itself under the zero loss.
ScalingStudy identity_study(std::size_t dim, const std::vector<std::size_t>& n_grid, std::size_t replicates,
                            double lengthscale, std::uint64_t seed);

/// Spread of KGD_V^2 against n for Q0 samples under a quadratic interaction loss (target != Q0).
ScalingStudy clt_study(std::size_t dim, const std::vector<std::size_t>& n_grid, std::size_t replicates,
                       double interaction_scale, double lengthscale, std::uint64_t seed);

struct StepsizeParams {
  std::size_t particles = 50;
  std::size_t iterations = 200;
  std::size_t replicates = 5;
  std::vector<double> log10_eps{-6.0, -5.5, -5.0, -4.5, -4.0, -3.5, -3.0, -2.5, -2.0, -1.5, -1.0};
  std::size_t data_size = 300;
  double lambda = 300.0;
  std::uint64_t data_seed = 0;
  std::uint64_t seed = 0;
};

struct StepsizeRow {
  double log10_eps = 0.0;
  double median = 0.0;
  double p05 = 0.0;
  double p95 = 0.0;
  std::size_t diverged = 0;
  std::vector<double> values;  // final KGD_V^2 per replicate, +inf when diverged
};

std::vector<StepsizeRow> mfnn_stepsize(const StepsizeParams& params);

/// Nearest-rank quantile of an unsorted sample (p in [0, 1]).
double quantile(std::vector<double> values, double p);

// --- presets ---------------------------------------------------------------

struct Output {
  config::Json resolved;  // preset parameters after overrides, plus seed and library version
  config::Json results;   // headline numbers
  io::Table trace;
  io::Table summary;
  std::optional<EmpiricalMeasure> particles;
  bool diverged = false;
};

std::vector<std::string> preset_names();
/// Default parameters of a preset; overrides may only touch these keys.
config::Json preset_defaults(const std::string& name);
Output run_experiment(const std::string& preset, std::uint64_t seed, const std::vector<std::string>& overrides);

/// Turns sampler traces into a CSV table (wall time only when requested).
io::Table trace_table(const std::vector<TraceRow>& rows, bool timing);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace kgd::experiments
