#include "kgd/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "kgd/models.hpp"

namespace kgd::config {

namespace {

// Walks one JSON object, binding each known key to a setter and rejecting the rest.
class ObjectReader {
 public:
  ObjectReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError("'" + where() + "' must be an object");
  }

  template <typename T>
  ObjectReader& field(const std::string& key, T& target) {
    handlers_[key] = [this, key, &target](const Json& value) {
      try {
        target = value.get<T>();
      } catch (const nlohmann::json::exception&) {
        throw ConfigError("key '" + qualified(key) + "' has the wrong type");
      }
    };
    return *this;
  }

  ObjectReader& nested(const std::string& key, std::function<void(const Json&, const std::string&)> read) {
    handlers_[key] = [this, key, read](const Json& value) { read(value, qualified(key)); };
    return *this;
  }

  void run() {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      const auto h = handlers_.find(it.key());
      if (h == handlers_.end()) throw ConfigError("unknown key '" + qualified(it.key()) + "'");
      h->second(it.value());
    }
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json& obj_;
  std::string path_;
  std::map<std::string, std::function<void(const Json&)>> handlers_;
};

void read_kernel(const Json& j, const std::string& path, KernelConfig& k) {
  ObjectReader(j, path)
      .field("family", k.family)
      .field("lengthscales", k.lengthscales)
      .field("weights", k.weights)
      .field("component", k.component)
      .field("c", k.c)
      .field("s", k.s)
      .field("base_family", k.base_family)
      .run();
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void validate(const RunConfig& c) {
  check(c.dim >= 1, "dim must be at least 1");
  check(c.reference.mean.empty() || c.reference.mean.size() == c.dim, "reference.mean must have dim entries");
  check(c.reference.variances.empty() || c.reference.variances.size() == c.dim,
        "reference.variances must have dim entries");
  for (double v : c.reference.variances) check(v > 0.0, "reference variances must be positive");
  static const std::vector<std::string> losses{"zero", "quadratic-potential", "interaction", "mfnn", "pcuq"};
  check(std::find(losses.begin(), losses.end(), c.loss.type) != losses.end(),
        "loss.type must be one of zero, quadratic-potential, interaction, mfnn, pcuq");
  check(c.loss.lambda > 0.0, "loss.lambda must be positive");
  check(c.loss.lambda_n >= 0.0, "loss.lambda_n must be nonnegative");
  check(c.loss.ode_step > 0.0, "loss.ode_step must be positive");
  if (c.loss.type == "mfnn") check(c.dim == models::kMfnnDim, "the mfnn loss needs dim 4");
  if (c.loss.type == "pcuq") check(c.dim == 2, "the pcuq loss needs dim 2");
  const auto& s = c.sampler;
  static const std::vector<std::string> algorithms{"mfld", "vgd", "kgdd", "greedy"};
  check(std::find(algorithms.begin(), algorithms.end(), s.algorithm) != algorithms.end(),
        "sampler.algorithm must be one of mfld, vgd, kgdd, greedy");
  check(s.method == "euler" || s.method == "adam", "sampler.method must be euler or adam");
  check(s.step_size > 0.0, "step size must be positive");
  check(s.iterations >= 1, "sampler.iterations must be at least 1");
  check(s.particles >= 1, "sampler.particles must be at least 1");
  check(s.init_mean.empty() || s.init_mean.size() == c.dim, "sampler.init_mean must have dim entries");
  check(s.init_scale >= 0.0, "sampler.init_scale must be nonnegative");
  check(s.trace_every >= 1, "sampler.trace_every must be at least 1");
  check(s.gradient == "fd" || s.gradient == "analytic", "sampler.gradient must be fd or analytic");
  check(s.search.kind == "grid" || s.search.kind == "sampled", "sampler.search.kind must be grid or sampled");
  if (s.algorithm == "greedy" && s.search.kind == "grid") {
    check(s.search.lower.size() == c.dim || s.search.lower.size() == 1, "sampler.search.lower must have dim entries");
    check(s.search.upper.size() == c.dim || s.search.upper.size() == 1, "sampler.search.upper must have dim entries");
  }
  check(s.search.center.empty() || s.search.center.size() == c.dim, "sampler.search.center must have dim entries");
  try {
    (void)build_kernel(c.kernel);
    (void)build_kernel(c.eval_kernel);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid kernel: ") + e.what());
  }
}

Json kernel_json(const KernelConfig& k) {
  Json j;
  j["family"] = k.family;
  j["lengthscales"] = k.lengthscales;
  j["weights"] = k.weights;
  j["component"] = k.component;
  j["c"] = k.c;
  j["s"] = k.s;
  j["base_family"] = k.base_family;
  return j;
}

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

RunConfig parse_config(const Json& doc) {
  RunConfig c;
  ObjectReader(doc, "")
      .field("seed", c.seed)
      .field("dim", c.dim)
      .nested("reference",
              [&](const Json& j, const std::string& p) {
                ObjectReader(j, p).field("mean", c.reference.mean).field("variances", c.reference.variances).run();
              })
      .nested("loss",
              [&](const Json& j, const std::string& p) {
                ObjectReader(j, p)
                    .field("type", c.loss.type)
                    .field("scale", c.loss.scale)
                    .field("lambda", c.loss.lambda)
                    .field("data_size", c.loss.data_size)
                    .field("data_seed", c.loss.data_seed)
                    .field("lambda_n", c.loss.lambda_n)
                    .field("ode_step", c.loss.ode_step)
                    .run();
              })
      .nested("kernel", [&](const Json& j, const std::string& p) { read_kernel(j, p, c.kernel); })
      .nested("eval_kernel", [&](const Json& j, const std::string& p) { read_kernel(j, p, c.eval_kernel); })
      .nested("sampler",
              [&](const Json& j, const std::string& p) {
                auto& s = c.sampler;
                ObjectReader(j, p)
                    .field("algorithm", s.algorithm)
                    .field("method", s.method)
                    .field("step_size", s.step_size)
                    .field("iterations", s.iterations)
                    .field("particles", s.particles)
                    .field("init_mean", s.init_mean)
                    .field("init_scale", s.init_scale)
                    .field("trace_every", s.trace_every)
                    .field("noise_scale", s.noise_scale)
                    .field("gradient", s.gradient)
                    .nested("search",
                            [&](const Json& js, const std::string& ps) {
                              ObjectReader(js, ps)
                                  .field("kind", s.search.kind)
                                  .field("lower", s.search.lower)
                                  .field("upper", s.search.upper)
                                  .field("points", s.search.points)
                                  .field("center", s.search.center)
                                  .field("scale", s.search.scale)
                                  .field("count", s.search.count)
                                  .run();
                            })
                    .run();
              })
      .field("particles_file", c.particles_file)
      .field("output_dir", c.output_dir)
      .field("timing", c.timing)
      .run();
  validate(c);
  return c;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into a line number.
    std::ifstream again(path);
    std::string text((std::istreambuf_iterator<char>(again)), std::istreambuf_iterator<char>());
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ConfigError(path + ":" + std::to_string(line) + ": parse error: " + e.what());
  }
  return parse_config(doc);
}

Json to_json(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["dim"] = c.dim;
  j["reference"] = {{"mean", c.reference.mean}, {"variances", c.reference.variances}};
  j["loss"] = {{"type", c.loss.type},           {"scale", c.loss.scale},         {"lambda", c.loss.lambda},
               {"data_size", c.loss.data_size}, {"data_seed", c.loss.data_seed}, {"lambda_n", c.loss.lambda_n},
               {"ode_step", c.loss.ode_step}};
  j["kernel"] = kernel_json(c.kernel);
  j["eval_kernel"] = kernel_json(c.eval_kernel);
  const auto& s = c.sampler;
  j["sampler"] = {{"algorithm", s.algorithm},
                  {"method", s.method},
                  {"step_size", s.step_size},
                  {"iterations", s.iterations},
                  {"particles", s.particles},
                  {"init_mean", s.init_mean},
                  {"init_scale", s.init_scale},
                  {"trace_every", s.trace_every},
                  {"noise_scale", s.noise_scale},
                  {"gradient", s.gradient},
                  {"search",
                   {{"kind", s.search.kind},
                    {"lower", s.search.lower},
                    {"upper", s.search.upper},
                    {"points", s.search.points},
                    {"center", s.search.center},
                    {"scale", s.search.scale},
                    {"count", s.search.count}}}};
  j["particles_file"] = c.particles_file;
  j["output_dir"] = c.output_dir;
  j["timing"] = c.timing;
  return j;
}

void apply_override(Json& doc, const std::string& assignment, bool allow_new) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  Json* node = &doc;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const bool last = i + 1 == path.size();
    if (!node->is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
    if (!node->contains(path[i])) {
      if (!allow_new) throw ConfigError("unknown key '" + key + "'");
      (*node)[path[i]] = last ? Json() : Json::object();
    }
    node = &(*node)[path[i]];
  }
  Json value;
  try {
    value = Json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  *node = value;
}

ReferenceDistribution build_reference(const RunConfig& c) {
  const auto d = static_cast<Eigen::Index>(c.dim);
  Vector mean = c.reference.mean.empty() ? Vector::Zero(d) : to_vector(c.reference.mean);
  Vector var = c.reference.variances.empty() ? Vector::Ones(d) : to_vector(c.reference.variances);
  return ReferenceDistribution(std::move(mean), std::move(var));
}

KernelSpec build_kernel(const KernelConfig& k) {
  if (k.family == "recommended") {
    RecommendedKernelSpec spec;
    spec.c = k.c;
    spec.s = k.s;
    if (k.base_family == "recommended") throw InvalidArgument("the recommended kernel needs a scalar base family");
    KernelConfig base = k;
    base.family = k.base_family;
    spec.base = std::get<ScalarKernelSpec>(build_kernel(base));
    spec.validate();
    return spec;
  }
  ScalarKernelSpec spec;
  spec.family = parse_family(k.family);
  spec.lengthscales = k.lengthscales;
  spec.weights = k.weights;
  spec.component = parse_family(k.component);
  if (spec.family != KernelFamily::Mixture) {
    if (spec.lengthscales.size() != 1) throw InvalidArgument("non-mixture kernels take exactly one lengthscale");
    spec.component = spec.family;
  }
  spec.validate();
  return spec;
}

std::shared_ptr<VariationalLoss> build_loss(const LossConfig& l, std::size_t dim) {
  if (l.type == "zero") return std::make_shared<ZeroLoss>();
  if (l.type == "quadratic-potential") return LinearLoss::quadratic(l.scale, Vector::Zero(static_cast<Eigen::Index>(dim)));
  if (l.type == "interaction") return InteractionLoss::quadratic(l.scale);
  if (l.type == "mfnn") return std::make_shared<MFNNLoss>(models::gen_mfnn_data(l.data_seed, l.data_size), l.lambda);
  if (l.type == "pcuq") {
    auto model = std::make_shared<models::LotkaVolterraModel>(models::LVParams::data_generating(), l.ode_step);
    const auto data = models::gen_lv_data(l.data_seed);
    const double lambda_n =
        l.lambda_n > 0.0 ? l.lambda_n : 0.1 / static_cast<double>(data.observations.rows());
    return std::make_shared<PCUQLoss>(std::move(model), data.observations, lambda_n);
  }
  throw ConfigError("unknown loss type '" + l.type + "'");
}

OptimizerSpec build_optimizer(const SamplerConfig& s) {
  OptimizerSpec opt;
  opt.method = s.method == "adam" ? Integrator::Adam : Integrator::Euler;
  opt.step_size = s.step_size;
  opt.validate();
  return opt;
}

}  // namespace kgd::config
