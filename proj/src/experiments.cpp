#include "kgd/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "kgd/models.hpp"
#include "kgd/samplers.hpp"

namespace kgd::experiments {

using config::ConfigError;
using config::Json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fixed labels keep initialisation and noise draws on disjoint substreams.
constexpr std::uint64_t kInitLabel = 0x1417;
constexpr std::uint64_t kNoiseLabel = 0x4e015e;
constexpr std::uint64_t kSearchLabel = 0x5ea4c4;

std::uint64_t noise_seed(std::uint64_t seed) { return mix64(seed ^ kNoiseLabel); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Tracks loss evaluations spent by a sampler, excluding those spent on reporting.
class CostMeter {
 public:
  explicit CostMeter(const VariationalLoss& loss) : loss_(loss), base_(loss.evaluations()) {}

  std::size_t cost() const { return loss_.evaluations() - base_ - excluded_; }

  double report(const ReferenceDistribution& ref, const KernelSpec& kernel, const EmpiricalMeasure& q) {
    const std::size_t before = loss_.evaluations();
    const double value = kgd_v_squared(ref, loss_, kernel, q).value_squared;
    excluded_ += loss_.evaluations() - before;
    return value;
  }

 private:
  const VariationalLoss& loss_;
  std::size_t base_;
  std::size_t excluded_ = 0;
};

template <typename T>
T param(const Json& params, const std::string& key) {
  if (!params.contains(key)) throw ConfigError("missing preset parameter '" + key + "'");
  try {
    return params.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("key '" + key + "' has the wrong type");
  }
}

void positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw ConfigError(what + " must be positive");
}

}  // namespace

Problem build_problem(const config::RunConfig& c) {
  return Problem{config::build_reference(c), config::build_loss(c.loss, c.dim), config::build_kernel(c.kernel),
                 config::build_kernel(c.eval_kernel)};
}

EmpiricalMeasure gaussian_cloud(const Vector& mean, double scale, std::size_t n, RandomStream& rng) {
  Matrix atoms = rng.normal_matrix(static_cast<std::size_t>(mean.size()), n, scale);
  atoms.colwise() += mean;
  return EmpiricalMeasure(std::move(atoms));
}

SamplerRun run_sampler(const Problem& problem, const config::SamplerConfig& s, std::uint64_t seed,
                       const std::string& label) {
  const auto& ref = problem.ref;
  const auto& loss = *problem.loss;
  const std::string method = label.empty() ? s.algorithm : label;
  const auto start = std::chrono::steady_clock::now();
  const RandomStream root(seed);
  CostMeter meter(loss);
  SamplerRun run;

  auto record = [&](const EmpiricalMeasure& q, std::size_t step) {
    const std::size_t cost = meter.cost();
    const double kgd = meter.report(ref, problem.eval_kernel, q);
    run.trace.push_back({method, step, cost, kgd, seconds_since(start)});
  };
  auto due = [&](std::size_t step, std::size_t last) { return step % s.trace_every == 0 || step == last; };

  const Vector mean = s.init_mean.empty()
                          ? ref.mean()
                          : Vector(Eigen::Map<const Vector>(s.init_mean.data(), static_cast<Eigen::Index>(s.init_mean.size())));
  std::size_t step = 0;
  try {
    if (s.algorithm == "greedy") {
      std::optional<EmpiricalMeasure> current;
      const auto d = static_cast<Eigen::Index>(ref.dim());
      for (step = 1; step <= s.particles; ++step) {
        SearchSpec search;
        if (s.search.kind == "grid") {
          auto bound = [d](const std::vector<double>& v) {
            return v.size() == 1 ? Vector(Vector::Constant(d, v[0]))
                                 : Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
          };
          search = SearchSpec::grid(bound(s.search.lower), bound(s.search.upper), s.search.points);
        } else {
          const Vector center =
              s.search.center.empty()
                  ? mean
                  : Vector(Eigen::Map<const Vector>(s.search.center.data(), static_cast<Eigen::Index>(s.search.center.size())));
          search = SearchSpec::sampled(center, s.search.scale, s.search.count,
                                       root.substream(kSearchLabel).substream(step).engine()());
        }
        const auto res = greedy_next(current, ref, loss, problem.kernel, search);
        current = current ? current->with_atom(res.point) : EmpiricalMeasure(Matrix(res.point));
        if (due(step, s.particles)) record(*current, step);
      }
      run.particles = current;
      return run;
    }

    RandomStream init_rng = root.substream(kInitLabel);
    SamplerState state = s.algorithm == "mfld" ? make_mfld_state(gaussian_cloud(mean, s.init_scale, s.particles, init_rng), noise_seed(seed))
                                               : SamplerState(gaussian_cloud(mean, s.init_scale, s.particles, init_rng));
    record(state.q, 0);
    const OptimizerSpec optimizer = config::build_optimizer(s);
    const ScalarKernelSpec* scalar = std::get_if<ScalarKernelSpec>(&problem.kernel);
    if (s.algorithm == "vgd" && scalar == nullptr) throw ConfigError("vgd needs a scalar translation-invariant kernel");
    const GradientMethod gradient = s.gradient == "analytic" ? GradientMethod::Analytic : GradientMethod::FiniteDifference;
    for (step = 1; step <= s.iterations; ++step) {
      if (s.algorithm == "mfld") {
        mfld_step(state, ref, loss, s.step_size, s.noise_scale);
      } else if (s.algorithm == "vgd") {
        vgd_step(state, ref, loss, *scalar, optimizer);
      } else {
        apply_descent(state, kgdd_grad(state.q, ref, loss, problem.kernel, gradient), optimizer);
      }
      if (due(step, s.iterations)) record(state.q, step);
    }
    run.particles = state.q;
  } catch (const DivergenceError& e) {
    run.diverged = true;
    run.diverged_step = step;
    run.message = e.what();
    run.trace.push_back({method, step, meter.cost(), kInf, seconds_since(start)});
  }
  return run;
}

ScalingStudy identity_study(std::size_t dim, const std::vector<std::size_t>& n_grid, std::size_t replicates,
                            double lengthscale, std::uint64_t seed) {
  const auto ref = ReferenceDistribution::standard_normal(dim);
  const ZeroLoss loss;
  const MeasureSampler draw = [dim](std::size_t n, RandomStream& rng) {
    return gaussian_cloud(Vector::Zero(static_cast<Eigen::Index>(dim)), 1.0, n, rng);
  };
  return clt_scaling_study(ref, loss, ScalarKernelSpec::imq(lengthscale), draw, n_grid, replicates, seed);
}

ScalingStudy clt_study(std::size_t dim, const std::vector<std::size_t>& n_grid, std::size_t replicates,
                       double interaction_scale, double lengthscale, std::uint64_t seed) {
  const auto ref = ReferenceDistribution::standard_normal(dim);
  const auto loss = InteractionLoss::quadratic(interaction_scale);
  const MeasureSampler draw = [dim](std::size_t n, RandomStream& rng) {
    return gaussian_cloud(Vector::Zero(static_cast<Eigen::Index>(dim)), 1.0, n, rng);
  };
  return clt_scaling_study(ref, *loss, ScalarKernelSpec::imq(lengthscale), draw, n_grid, replicates, seed);
}

double quantile(std::vector<double> values, double p) {
  require(!values.empty(), "quantile of an empty sample");
  require(p >= 0.0 && p <= 1.0, "quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const auto m = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(p * m)));
  return values[std::min(rank, values.size()) - 1];
}

namespace {

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  return m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

}  // namespace

std::vector<StepsizeRow> mfnn_stepsize(const StepsizeParams& p) {
  require(p.replicates >= 1 && p.particles >= 1 && p.iterations >= 1, "mfnn_stepsize: counts must be positive");
  const MFNNLoss loss(models::gen_mfnn_data(p.data_seed, p.data_size), p.lambda);
  const auto ref = ReferenceDistribution::standard_normal(models::kMfnnDim);
  const KernelSpec kernel = ScalarKernelSpec::imq(1.0);
  const RandomStream root(p.seed);
  std::vector<StepsizeRow> rows;
  for (const double le : p.log10_eps) {
    const double eps = std::pow(10.0, le);
    StepsizeRow row;
    row.log10_eps = le;
    for (std::size_t r = 0; r < p.replicates; ++r) {
      // The same initial cloud and noise for every step size.
      RandomStream init_rng = root.substream(r).substream(kInitLabel);
      SamplerState state = make_mfld_state(gaussian_cloud(ref.mean(), 1.0, p.particles, init_rng),
                                           noise_seed(root.substream(r).engine()()));
      double value = kInf;
      try {
        for (std::size_t t = 0; t < p.iterations; ++t) mfld_step(state, ref, loss, eps);
        value = kgd_v_squared(ref, loss, kernel, state.q).value_squared;
      } catch (const DivergenceError&) {
        ++row.diverged;
      }
      row.values.push_back(value);
    }
    row.median = median(row.values);
    row.p05 = quantile(row.values, 0.05);
    row.p95 = quantile(row.values, 0.95);
    rows.push_back(std::move(row));
  }
  return rows;
}

io::Table trace_table(const std::vector<TraceRow>& rows, bool timing) {
  io::Table t;
  t.columns = {"method", "step", "cost", "kgd_squared"};
  if (timing) t.columns.push_back("wall_seconds");
  for (const auto& r : rows) {
    std::vector<std::string> cells{r.method, std::to_string(r.step), std::to_string(r.cost),
                                   io::format_double(r.kgd_squared)};
    if (timing) cells.push_back(io::format_double(r.wall_seconds));
    t.add_row(std::move(cells));
  }
  return t;
}

namespace {

Output scaling_output(const std::vector<std::pair<std::size_t, ScalingStudy>>& studies) {
  Output out;
  out.trace.columns = {"dim", "n", "mean_v", "sd_v", "mean_u", "se_u"};
  out.results = Json::array();
  for (const auto& [dim, st] : studies) {
    for (std::size_t g = 0; g < st.n.size(); ++g) {
      out.trace.add_row({std::to_string(dim), std::to_string(st.n[g]), io::format_double(st.mean[g]),
                         io::format_double(st.sd[g]), io::format_double(st.u_mean[g]), io::format_double(st.u_se[g])});
    }
    out.results.push_back({{"dim", dim}, {"mean_slope", st.mean_slope}, {"sd_slope", st.sd_slope}});
  }
  return out;
}

std::vector<std::size_t> size_grid(const Json& params, const std::string& key) {
  auto grid = param<std::vector<std::size_t>>(params, key);
  if (grid.size() < 2) throw ConfigError(key + " needs at least two entries");
  for (auto n : grid)
    if (n < 2) throw ConfigError(key + " entries must be at least 2");
  return grid;
}

Output run_gauss_identity(const Json& p, std::uint64_t seed) {
  const auto dim = param<std::size_t>(p, "dim");
  if (dim < 1) throw ConfigError("dim must be at least 1");
  const auto reps = param<std::size_t>(p, "replicates");
  if (reps < 2) throw ConfigError("replicates must be at least 2");
  const double ell = param<double>(p, "lengthscale");
  positive(ell, "lengthscale");
  return scaling_output({{dim, identity_study(dim, size_grid(p, "n_grid"), reps, ell, seed)}});
}

Output run_clt_study(const Json& p, std::uint64_t seed) {
  const auto reps = param<std::size_t>(p, "replicates");
  if (reps < 2) throw ConfigError("replicates must be at least 2");
  const double scale = param<double>(p, "interaction_scale");
  const double ell = param<double>(p, "lengthscale");
  positive(ell, "lengthscale");
  const auto grid = size_grid(p, "n_grid");
  std::vector<std::pair<std::size_t, ScalingStudy>> studies;
  for (const auto dim : param<std::vector<std::size_t>>(p, "dims")) {
    if (dim < 1) throw ConfigError("dims entries must be at least 1");
    studies.emplace_back(dim, clt_study(dim, grid, reps, scale, ell, mix64(seed) ^ dim));
  }
  return scaling_output(studies);
}

Output run_mfnn_stepsize(const Json& p, std::uint64_t seed) {
  StepsizeParams sp;
  sp.particles = param<std::size_t>(p, "particles");
  sp.iterations = param<std::size_t>(p, "iterations");
  sp.replicates = param<std::size_t>(p, "replicates");
  sp.log10_eps = param<std::vector<double>>(p, "log10_eps");
  sp.data_size = param<std::size_t>(p, "data_size");
  sp.lambda = param<double>(p, "lambda");
  sp.data_seed = param<std::uint64_t>(p, "data_seed");
  sp.seed = seed;
  if (sp.particles < 1 || sp.iterations < 1 || sp.replicates < 1 || sp.data_size < 1)
    throw ConfigError("particles, iterations, replicates and data_size must be positive");
  positive(sp.lambda, "lambda");
  if (sp.log10_eps.empty()) throw ConfigError("log10_eps must not be empty");
  const auto rows = mfnn_stepsize(sp);
  Output out;
  std::size_t diverged = 0;
  out.trace.columns = {"log10_eps", "replicate", "kgd_squared"};
  out.summary.columns = {"log10_eps", "median", "p05", "p95", "diverged"};
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.values.size(); ++k)
      out.trace.add_row({io::format_double(r.log10_eps), std::to_string(k), io::format_double(r.values[k])});
    out.summary.add_row({io::format_double(r.log10_eps), io::format_double(r.median), io::format_double(r.p05),
                         io::format_double(r.p95), std::to_string(r.diverged)});
    diverged += r.diverged;
  }
  // A sweep is expected to hit unstable step sizes, so divergence is data here, not failure.
  out.results = {{"diverged_runs", diverged}};
  return out;
}

// Affine pushforward x = A u + mu of u ~ N(0, I), fitted by Adam on the U-statistic
// KGD^2 of a fixed base sample, gradients by central differences over theta.
SamplerRun run_param_vi(const Problem& problem, std::size_t sample_size, std::size_t eval_size,
                        std::size_t iterations, std::size_t trace_every, double step, double init_scale,
                        std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(problem.ref.dim());
  const auto& loss = *problem.loss;
  const RandomStream root(seed);
  RandomStream base_rng = root.substream(1);
  RandomStream eval_rng = root.substream(2);
  const Matrix base = base_rng.normal_matrix(static_cast<std::size_t>(d), sample_size);
  const Matrix eval_base = eval_rng.normal_matrix(static_cast<std::size_t>(d), eval_size);
  Vector theta(d * d + d);
  theta.setZero();
  for (Eigen::Index a = 0; a < d; ++a) theta(a * d + a) = init_scale;
  auto push = [d](const Vector& th, const Matrix& u) {
    const Eigen::Map<const Matrix> A(th.data(), d, d);
    Matrix x = A * u;
    x.colwise() += th.tail(d);
    return x;
  };
  auto objective = [&](const Vector& th) {
    const Matrix x = push(th, base);
    check_particles(x, 0);
    return param_vi_objective(problem.ref, loss, problem.kernel, EmpiricalMeasure(x));
  };

  const auto start = std::chrono::steady_clock::now();
  CostMeter meter(loss);
  SamplerRun run;
  auto record = [&](std::size_t t) {
    const std::size_t cost = meter.cost();
    const double kgd = meter.report(problem.ref, problem.eval_kernel, EmpiricalMeasure(push(theta, eval_base)));
    run.trace.push_back({"param-vi", t, cost, kgd, seconds_since(start)});
  };
  OptimizerSpec adam;
  adam.method = Integrator::Adam;
  adam.step_size = step;
  Vector m = Vector::Zero(theta.size());
  Vector v = Vector::Zero(theta.size());
  std::size_t t = 0;
  try {
    record(0);
    for (t = 1; t <= iterations; ++t) {
      Vector grad(theta.size());
      for (Eigen::Index k = 0; k < theta.size(); ++k) {
        const double h = 1e-5 * (1.0 + std::abs(theta(k)));
        Vector up = theta, down = theta;
        up(k) += h;
        down(k) -= h;
        grad(k) = (objective(up) - objective(down)) / (2.0 * h);
      }
      m = adam.beta1 * m + (1.0 - adam.beta1) * grad;
      v = adam.beta2 * v + (1.0 - adam.beta2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(t));
      theta.array() -= adam.step_size * (m.array() / c1) / ((v.array() / c2).sqrt() + adam.epsilon);
      if (!theta.allFinite()) throw DivergenceError("param-vi: nonfinite parameters", t);
      if (t % trace_every == 0 || t == iterations) record(t);
    }
    run.particles = EmpiricalMeasure(push(theta, eval_base));
  } catch (const DivergenceError& e) {
    run.diverged = true;
    run.diverged_step = t;
    run.message = e.what();
    run.trace.push_back({"param-vi", t, meter.cost(), kInf, seconds_since(start)});
  }
  return run;
}

Output comparison_output(const std::vector<SamplerRun>& runs, const std::vector<std::string>& names, bool timing) {
  Output out;
  std::vector<TraceRow> all;
  out.summary.columns = {"method", "cost", "kgd_squared", "diverged"};
  out.results = Json::object();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    all.insert(all.end(), runs[k].trace.begin(), runs[k].trace.end());
    const auto& last = runs[k].trace.back();
    out.summary.add_row({names[k], std::to_string(last.cost), io::format_double(last.kgd_squared),
                         runs[k].diverged ? "1" : "0"});
    out.diverged = out.diverged || runs[k].diverged;
    out.results[names[k]] = {{"cost", last.cost}, {"kgd_squared", last.kgd_squared}, {"diverged", runs[k].diverged}};
    if (runs[k].diverged) out.results[names[k]]["message"] = runs[k].message;
  }
  out.trace = trace_table(all, timing);
  return out;
}

std::vector<std::string> method_list(const Json& p, const std::vector<std::string>& allowed) {
  const auto methods = param<std::vector<std::string>>(p, "methods");
  if (methods.empty()) throw ConfigError("methods must not be empty");
  for (const auto& m : methods)
    if (std::find(allowed.begin(), allowed.end(), m) == allowed.end())
      throw ConfigError("unknown method '" + m + "'");
  return methods;
}

Output run_mfnn_compare(const Json& p, std::uint64_t seed) {
  const auto methods = method_list(p, {"mfld", "kgdd", "param-vi"});
  config::RunConfig rc;
  rc.dim = models::kMfnnDim;
  rc.loss.type = "mfnn";
  rc.loss.data_size = param<std::size_t>(p, "data_size");
  rc.loss.lambda = param<double>(p, "lambda");
  rc.loss.data_seed = param<std::uint64_t>(p, "data_seed");
  positive(rc.loss.lambda, "lambda");
  if (rc.loss.data_size < 1) throw ConfigError("data_size must be positive");
  const Problem problem = build_problem(rc);

  config::SamplerConfig base;
  base.particles = param<std::size_t>(p, "particles");
  base.iterations = param<std::size_t>(p, "iterations");
  base.trace_every = param<std::size_t>(p, "trace_every");
  base.init_scale = param<double>(p, "init_scale");
  if (base.particles < 2 || base.iterations < 1 || base.trace_every < 1)
    throw ConfigError("particles must be >= 2 and iterations, trace_every >= 1");

  std::vector<SamplerRun> runs;
  for (const auto& m : methods) {
    if (m == "param-vi") {
      const double step = param<double>(p, "pvi_step");
      positive(step, "pvi_step");
      const auto sample = param<std::size_t>(p, "pvi_sample");
      if (sample < 2) throw ConfigError("pvi_sample must be at least 2");
      runs.push_back(run_param_vi(problem, sample, base.particles, base.iterations, base.trace_every, step,
                                  base.init_scale, mix64(seed) ^ 3));
      continue;
    }
    config::SamplerConfig s = base;
    s.algorithm = m;
    if (m == "mfld") {
      s.step_size = param<double>(p, "mfld_step");
    } else {
      s.method = "adam";
      s.step_size = param<double>(p, "kgdd_step");
      s.gradient = param<std::string>(p, "kgdd_gradient");
      if (s.gradient != "fd" && s.gradient != "analytic") throw ConfigError("kgdd_gradient must be fd or analytic");
    }
    positive(s.step_size, m + " step size");
    runs.push_back(run_sampler(problem, s, seed, m));
  }
  Output out = comparison_output(runs, methods, param<bool>(p, "timing"));
  for (std::size_t k = 0; k < runs.size(); ++k)
    if (runs[k].particles) out.particles = out.particles ? out.particles : runs[k].particles;
  return out;
}

Output run_lv_compare(const Json& p, std::uint64_t seed) {
  const auto methods = method_list(p, {"mfld", "vgd", "greedy"});
  config::RunConfig rc;
  rc.dim = 2;
  rc.loss.type = "pcuq";
  rc.loss.ode_step = param<double>(p, "ode_step");
  rc.loss.data_seed = param<std::uint64_t>(p, "data_seed");
  positive(rc.loss.ode_step, "ode_step");
  // Greedy objective and reporting kernel: IMQ mixture with squared lengthscales 0.03 and 0.1.
  rc.kernel.family = "mixture";
  rc.kernel.lengthscales = {std::sqrt(0.03), std::sqrt(0.1)};
  rc.eval_kernel = rc.kernel;
  Problem problem = build_problem(rc);
  const auto truth = models::LVParams::data_generating().x;
  const std::vector<double> truth_v{truth[0], truth[1]};

  config::SamplerConfig base;
  base.particles = param<std::size_t>(p, "particles");
  base.iterations = param<std::size_t>(p, "iterations");
  base.trace_every = param<std::size_t>(p, "trace_every");
  if (base.particles < 2 || base.iterations < 1 || base.trace_every < 1)
    throw ConfigError("particles must be >= 2 and iterations, trace_every >= 1");

  std::vector<SamplerRun> runs;
  for (const auto& m : methods) {
    config::SamplerConfig s = base;
    s.algorithm = m;
    Problem local = problem;
    if (m == "mfld") {
      s.step_size = param<double>(p, "mfld_step");
      s.init_mean = truth_v;
      s.init_scale = param<double>(p, "mfld_init_sd");
    } else if (m == "vgd") {
      s.method = "adam";
      s.step_size = param<double>(p, "vgd_step");
      s.init_scale = 1.0;
      local.kernel = ScalarKernelSpec::mixture({0.01, 0.1, 1.0});
    } else {
      s.search.kind = "sampled";
      s.search.center = truth_v;
      s.search.scale = param<double>(p, "greedy_scale");
      s.search.count = param<std::size_t>(p, "greedy_candidates");
      positive(s.search.scale, "greedy_scale");
      if (s.search.count < 1) throw ConfigError("greedy_candidates must be positive");
    }
    positive(s.step_size, m + " step size");
    runs.push_back(run_sampler(local, s, seed, m));
  }
  Output out = comparison_output(runs, methods, param<bool>(p, "timing"));
  for (const auto& r : runs)
    if (r.particles && !out.particles) out.particles = r.particles;
  return out;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"gauss-identity", "mfnn-stepsize", "mfnn-compare", "lv-compare", "clt-study"};
}

Json preset_defaults(const std::string& name) {
  if (name == "gauss-identity")
    return {{"dim", 2}, {"n_grid", {25, 50, 100, 200, 400, 800}}, {"replicates", 100}, {"lengthscale", 1.0}};
  if (name == "clt-study")
    return {{"dims", {2, 5}},
            {"n_grid", {100, 200, 400, 800, 1600}},
            {"replicates", 200},
            {"interaction_scale", 1.0},
            {"lengthscale", 1.0}};
  if (name == "mfnn-stepsize") {
    const StepsizeParams sp;
    return {{"particles", sp.particles}, {"iterations", sp.iterations}, {"replicates", sp.replicates},
            {"log10_eps", sp.log10_eps}, {"data_size", sp.data_size},   {"lambda", sp.lambda},
            {"data_seed", sp.data_seed}};
  }
  if (name == "mfnn-compare")
    return {{"methods", {"mfld", "kgdd", "param-vi"}},
            {"particles", 20},
            {"iterations", 100},
            {"trace_every", 10},
            {"init_scale", 3.0},
            {"data_size", 300},
            {"lambda", 300.0},
            {"data_seed", 0},
            {"mfld_step", 1e-4},
            {"kgdd_step", 1e-2},
            {"kgdd_gradient", "analytic"},
            {"pvi_step", 1e-2},
            {"pvi_sample", 100},
            {"timing", false}};
  if (name == "lv-compare")
    return {{"methods", {"mfld", "vgd", "greedy"}},
            {"particles", 10},
            {"iterations", 40},
            {"trace_every", 5},
            {"ode_step", 0.01},
            {"data_seed", 0},
            {"mfld_step", 1e-5},
            {"mfld_init_sd", 1e-3},
            {"vgd_step", 1e-3},
            {"greedy_scale", 0.5},
            {"greedy_candidates", 100},
            {"timing", false}};
  throw ConfigError("unknown preset '" + name + "'");
}

Output run_experiment(const std::string& preset, std::uint64_t seed, const std::vector<std::string>& overrides) {
  Json params = preset_defaults(preset);
  for (const auto& o : overrides) config::apply_override(params, o);
  Output out;
  if (preset == "gauss-identity") {
    out = run_gauss_identity(params, seed);
  } else if (preset == "clt-study") {
    out = run_clt_study(params, seed);
  } else if (preset == "mfnn-stepsize") {
    out = run_mfnn_stepsize(params, seed);
  } else if (preset == "mfnn-compare") {
    out = run_mfnn_compare(params, seed);
  } else {
    out = run_lv_compare(params, seed);
  }
  out.resolved = {{"preset", preset},
                  {"seed", seed},
                  {"version", kVersion},
                  {"eval_kernel", preset == "lv-compare" ? "imq mixture, squared lengthscales 0.03 and 0.1"
                                                         : "imq lengthscale 1"},
                  {"params", params}};
  return out;
}

}  // namespace kgd::experiments
