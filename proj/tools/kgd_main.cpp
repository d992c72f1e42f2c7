// kgd: kernel gradient discrepancy estimates, samplers and preset experiments.

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kgd/config.hpp"
#include "kgd/experiments.hpp"
#include "kgd/io.hpp"
#include "kgd/losses.hpp"
#include "kgd/oracles.hpp"

namespace fs = std::filesystem;
using kgd::config::ConfigError;
using kgd::config::Json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

void write_outputs(const fs::path& dir, const Json& meta, const kgd::io::Table& trace, const kgd::io::Table& summary,
                   const std::optional<kgd::EmpiricalMeasure>& particles) {
  fs::create_directories(dir);
  kgd::io::write_text((dir / "meta.json").string(), meta.dump(2) + "\n");
  if (!trace.columns.empty()) kgd::io::write_text((dir / "trace.csv").string(), trace.to_csv());
  if (!summary.columns.empty()) kgd::io::write_text((dir / "summary.csv").string(), summary.to_csv());
  if (particles) {
    kgd::io::write_particles((dir / "particles.csv").string(), *particles,
                             {std::string("kgd ") + kgd::experiments::kVersion, "one particle per row"});
  }
}

int cmd_eval(const std::string& config_path, const std::string& gram_path) {
  const auto cfg = kgd::config::parse_config_file(config_path);
  if (cfg.particles_file.empty()) throw ConfigError("particles_file is required for eval");
  fs::path particles = cfg.particles_file;
  if (particles.is_relative()) particles = fs::path(config_path).parent_path() / particles;
  const auto q = kgd::io::read_particles(particles.string());
  if (q.dim() != cfg.dim) throw ConfigError("particle file dimension differs from dim");
  const auto problem = kgd::experiments::build_problem(cfg);
  const kgd::SteinKernelContext ctx(problem.ref, *problem.loss, problem.eval_kernel, q);
  const kgd::Matrix gram = kgd::stein_gram(ctx);
  Json out{{"n", q.size()},
           {"kernel", kgd::describe(problem.eval_kernel)},
           {"loss", problem.loss->name()},
           {"kgd_v_squared", kgd::v_statistic(gram)}};
  if (q.size() >= 2) out["kgd_u_squared"] = kgd::u_statistic(gram);
  std::cout << out.dump(2) << "\n";
  if (!gram_path.empty()) {
    kgd::io::Table t;
    for (Eigen::Index j = 0; j < gram.cols(); ++j) t.columns.push_back("g" + std::to_string(j));
    for (Eigen::Index i = 0; i < gram.rows(); ++i) {
      std::vector<std::string> row;
      for (Eigen::Index j = 0; j < gram.cols(); ++j) row.push_back(kgd::io::format_double(gram(i, j)));
      t.add_row(std::move(row));
    }
    kgd::io::write_text(gram_path, t.to_csv());
  }
  return 0;
}

int cmd_sample(const std::string& config_path, const std::string& out_dir) {
  const auto cfg = kgd::config::parse_config_file(config_path);
  const auto problem = kgd::experiments::build_problem(cfg);
  const auto run = kgd::experiments::run_sampler(problem, cfg.sampler, cfg.seed);
  Json meta{{"version", kgd::experiments::kVersion}, {"config", kgd::config::to_json(cfg)}};
  if (run.diverged) meta["divergence"] = {{"step", run.diverged_step}, {"message", run.message}};
  write_outputs(out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir), meta,
                kgd::experiments::trace_table(run.trace, cfg.timing), {}, run.particles);
  const auto& last = run.trace.back();
  std::cout << cfg.sampler.algorithm << ": step " << last.step << ", cost " << last.cost << ", KGD_V^2 "
            << kgd::io::format_double(last.kgd_squared) << "\n";
  if (run.diverged) {
    std::cerr << "diverged: " << run.message << "\n";
    return kExitDivergence;
  }
  return 0;
}

int cmd_experiment(const std::string& preset, std::uint64_t seed, const std::vector<std::string>& overrides,
                   const std::string& out_dir) {
  const auto out = kgd::experiments::run_experiment(preset, seed, overrides);
  Json meta = out.resolved;
  meta["results"] = out.results;
  write_outputs(out_dir.empty() ? fs::path("kgd-" + preset) : fs::path(out_dir), meta, out.trace, out.summary,
                out.particles);
  std::cout << meta["results"].dump(2) << "\n";
  if (out.diverged) {
    std::cerr << "at least one sampler diverged; see trace.csv\n";
    return kExitDivergence;
  }
  return 0;
}

// Quick oracle cross-checks of the production code paths.
int cmd_self_check() {
  using namespace kgd;
  int failures = 0;
  auto report = [&failures](const std::string& name, bool ok, double err) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << " (error " << io::format_double(err) << ")\n";
    if (!ok) ++failures;
  };

  RandomStream rng(20240601);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(trial % 4);
    const auto potential = LinearLoss::quadratic(0.5 + rng.uniform(), rng.normal_vector(d));
    const auto ref = ReferenceDistribution::standard_normal(d);
    const auto kernel = trial % 2 ? ScalarKernelSpec::gaussian(0.5 + rng.uniform()) : ScalarKernelSpec::imq(0.5 + rng.uniform());
    const EmpiricalMeasure q(rng.normal_matrix(d, 5 + static_cast<std::size_t>(trial), 1.5));
    const double kgd = kgd_v_squared(ref, *potential, kernel, q).value_squared;
    const double ksd = oracles::reference_ksd_squared(
        [&](const Eigen::Ref<const Vector>& x) -> Vector { return ref.log_grad(x) - potential->grad_u(x); }, kernel, q);
    worst = std::max(worst, std::abs(kgd - ksd) / std::abs(ksd));
  }
  report("KGD equals Langevin KSD under a potential loss", worst <= 1e-12, worst);

  worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = rng.normal_vector(3);
    const Vector y = rng.normal_vector(3);
    const auto spec = ScalarKernelSpec::imq(0.5 + rng.uniform());
    const auto bundle = kernel_derivatives(spec, x, y);
    const Vector fd = oracles::fd_gradient([&](const Eigen::Ref<const Vector>& z) { return kernel_eval(spec, z, y); }, x);
    worst = std::max(worst, (bundle.grad1 - fd).norm() / std::max(1.0, fd.norm()));
  }
  report("kernel gradient matches finite differences", worst <= 1e-5, worst);

  worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const double m = rng.normal(), mp = rng.normal(), sigma = 0.2 + rng.uniform();
    const double gh = oracles::gauss_hermite_2d(
        [](double a, double b) { return std::exp(-0.5 * (a - b) * (a - b)); }, m, mp, sigma, 60);
    worst = std::max(worst, std::abs(gh - gaussian_pair_overlap(m - mp, sigma)));
  }
  report("Gaussian overlap matches Gauss-Hermite quadrature", worst <= 1e-8, worst);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel gradient discrepancy: estimates, samplers and preset experiments"};
  app.require_subcommand(1);

  std::string config_path, gram_path, out_dir, preset;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;

  auto* eval = app.add_subcommand("eval", "KGD of a particle file");
  eval->add_option("--config", config_path, "config file (JSON)")->required();
  eval->add_option("--gram", gram_path, "also write the Stein Gram matrix to this CSV");

  auto* sample = app.add_subcommand("sample", "run a sampler");
  sample->add_option("--config", config_path, "config file (JSON)")->required();
  sample->add_option("--out", out_dir, "output directory (default: output_dir from the config)");

  auto* experiment = app.add_subcommand("experiment", "run a preset experiment");
  experiment->add_option("--preset", preset, "preset name")
      ->required()
      ->check(CLI::IsMember(kgd::experiments::preset_names()));
  experiment->add_option("--seed", seed, "random seed");
  experiment->add_option("--set", overrides, "override a preset parameter, key=value");
  experiment->add_option("--out", out_dir, "output directory (default: kgd-<preset>)");

  auto* self_check = app.add_subcommand("self-check", "cross-check production code against the oracles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*eval) return cmd_eval(config_path, gram_path);
    if (*sample) return cmd_sample(config_path, out_dir);
    if (*experiment) return cmd_experiment(preset, seed, overrides, out_dir);
    if (*self_check) return cmd_self_check();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const kgd::DivergenceError& e) {
    std::cerr << "diverged at step " << e.step() << ": " << e.what() << "\n";
    return kExitDivergence;
  } catch (const kgd::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
