#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgd/core.hpp"
#include "kgd/kernels.hpp"
#include "kgd/losses.hpp"
#include "kgd/samplers.hpp"

namespace kgd::config {

using Json = nlohmann::ordered_json;

/// Malformed or invalid configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReferenceConfig {
  std::vector<double> mean;       // empty: zeros
  std::vector<double> variances;  // empty: ones
};

struct LossConfig {
  std::string type = "zero";  // zero | quadratic-potential | interaction | mfnn | pcuq
  double scale = 1.0;         // quadratic-potential and interaction
  double lambda = 300.0;      // mfnn
  std::size_t data_size = 300;
  std::uint64_t data_seed = 0;
  double lambda_n = 0.0;      // pcuq; 0 selects 0.1 / number of observation times
  double ode_step = 0.01;     // pcuq
};

struct KernelConfig {
  std::string family = "imq";  // imq | gaussian | mixture | recommended
  std::vector<double> lengthscales{1.0};
  std::vector<double> weights;
  std::string component = "imq";
  // recommended kernel only; the base kernel is built from family-independent
  // fields base_family and lengthscales.
  double c = 1.0;
  double s = 0.0;
  std::string base_family = "imq";
};

struct SearchConfig {
  std::string kind = "grid";  // grid | sampled
  std::vector<double> lower{-3.0};
  std::vector<double> upper{3.0};
  std::size_t points = 61;
  std::vector<double> center;  // empty: reference mean
  double scale = 0.5;
  std::size_t count = 200;
};

struct SamplerConfig {
  std::string algorithm = "mfld";  // mfld | vgd | kgdd | greedy
  std::string method = "euler";    // euler | adam
  double step_size = 1e-2;
  std::size_t iterations = 200;
  std::size_t particles = 50;
  std::vector<double> init_mean;  // empty: reference mean
  double init_scale = 1.0;
  std::size_t trace_every = 10;
  double noise_scale = 1.0;
  std::string gradient = "fd";  // fd | analytic
  SearchConfig search;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t dim = 1;
  ReferenceConfig reference;
  LossConfig loss;
  KernelConfig kernel;       // objective kernel for VGD, KGD descent and greedy
  KernelConfig eval_kernel;  // kernel used to report KGD
  SamplerConfig sampler;
  std::string particles_file;  // input cloud for `kgd eval`
  std::string output_dir = "kgd-out";
  bool timing = false;         // adds a wall-time column to traces
};

/// Parses and validates; unknown keys and type mismatches raise ConfigError naming the key.
RunConfig parse_config(const Json& doc);
RunConfig parse_config_file(const std::string& path);
/// Fully resolved config, defaults included.
Json to_json(const RunConfig& config);

/// Applies "a.b.c=value" to a JSON document. The path must already exist unless
/// allow_new is set; the value is parsed as JSON when possible, else kept as a string.
void apply_override(Json& doc, const std::string& assignment, bool allow_new = false);

ReferenceDistribution build_reference(const RunConfig& config);
KernelSpec build_kernel(const KernelConfig& config);
std::shared_ptr<VariationalLoss> build_loss(const LossConfig& config, std::size_t dim);
OptimizerSpec build_optimizer(const SamplerConfig& config);

}  // namespace kgd::config
