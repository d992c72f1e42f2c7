#include "kgd/kernels.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace kgd {

ScalarKernelSpec ScalarKernelSpec::imq(double lengthscale) {
  ScalarKernelSpec spec{KernelFamily::Imq, {lengthscale}, {}, KernelFamily::Imq};
  spec.validate();
  return spec;
}

ScalarKernelSpec ScalarKernelSpec::gaussian(double lengthscale) {
  ScalarKernelSpec spec{KernelFamily::Gaussian, {lengthscale}, {}, KernelFamily::Gaussian};
  spec.validate();
  return spec;
}

ScalarKernelSpec ScalarKernelSpec::mixture(std::vector<double> lengthscales, std::vector<double> weights,
                                           KernelFamily component) {
  ScalarKernelSpec spec{KernelFamily::Mixture, std::move(lengthscales), std::move(weights), component};
  spec.validate();
  return spec;
}

void ScalarKernelSpec::validate() const {
  require(!lengthscales.empty(), "kernel needs at least one lengthscale");
  for (double l : lengthscales) require(std::isfinite(l) && l > 0.0, "kernel lengthscales must be positive");
  if (family != KernelFamily::Mixture) {
    require(lengthscales.size() == 1, "non-mixture kernel takes exactly one lengthscale");
  } else {
    require(component != KernelFamily::Mixture, "mixture component must be imq or gaussian");
  }
  if (!weights.empty()) {
    require(family == KernelFamily::Mixture, "kernel weights only apply to mixtures");
    require(weights.size() == lengthscales.size(), "mixture weights and lengthscales differ in length");
    double total = 0.0;
    for (double w : weights) {
      require(std::isfinite(w) && w > 0.0, "mixture weights must be positive");
      total += w;
    }
    require(std::abs(total - 1.0) < 1e-9, "mixture weights must sum to 1");
  }
}

std::vector<double> ScalarKernelSpec::resolved_weights() const {
  if (!weights.empty()) return weights;
  return std::vector<double>(lengthscales.size(), 1.0 / static_cast<double>(lengthscales.size()));
}

namespace {

RadialProfile component_profile(KernelFamily family, double lengthscale, double r) {
  const double inv_l2 = 1.0 / (lengthscale * lengthscale);
  RadialProfile p;
  if (family == KernelFamily::Gaussian) {
    p.phi = std::exp(-r * inv_l2);
    p.d1 = -inv_l2 * p.phi;
    p.d2 = inv_l2 * inv_l2 * p.phi;
    p.d3 = -inv_l2 * inv_l2 * inv_l2 * p.phi;
  } else {
    const double base = 1.0 + r * inv_l2;
    const double root = 1.0 / std::sqrt(base);
    const double inv_base = 1.0 / base;
    p.phi = root;
    p.d1 = -0.5 * inv_l2 * root * inv_base;
    p.d2 = 0.75 * inv_l2 * inv_l2 * root * inv_base * inv_base;
    p.d3 = -1.875 * inv_l2 * inv_l2 * inv_l2 * root * inv_base * inv_base * inv_base;
  }
  return p;
}

}  // namespace

RadialProfile radial_profile(const ScalarKernelSpec& spec, double r) {
  if (spec.family != KernelFamily::Mixture) return component_profile(spec.family, spec.lengthscales.front(), r);
  RadialProfile total;
  const auto weights = spec.resolved_weights();
  for (std::size_t m = 0; m < spec.lengthscales.size(); ++m) {
    const auto p = component_profile(spec.component, spec.lengthscales[m], r);
    total.phi += weights[m] * p.phi;
    total.d1 += weights[m] * p.d1;
    total.d2 += weights[m] * p.d2;
    total.d3 += weights[m] * p.d3;
  }
  return total;
}

DerivativeBundle& DerivativeBundle::operator+=(const DerivativeBundle& other) {
  value += other.value;
  grad1 += other.grad1;
  grad2 += other.grad2;
  trace12 += other.trace12;
  return *this;
}

double kernel_eval(const ScalarKernelSpec& spec, const Eigen::Ref<const Vector>& x,
                   const Eigen::Ref<const Vector>& y) {
  require(x.size() == y.size(), "kernel_eval: dimension mismatch");
  return radial_profile(spec, (x - y).squaredNorm()).phi;
}

DerivativeBundle kernel_derivatives(const ScalarKernelSpec& spec, const Eigen::Ref<const Vector>& x,
                                    const Eigen::Ref<const Vector>& y) {
  require(x.size() == y.size(), "kernel_derivatives: dimension mismatch");
  const Vector delta = x - y;
  const double r = delta.squaredNorm();
  const auto p = radial_profile(spec, r);
  const auto d = static_cast<double>(x.size());
  DerivativeBundle b;
  b.value = p.phi;
  b.grad1 = 2.0 * p.d1 * delta;
  b.grad2 = -b.grad1;
  b.trace12 = -2.0 * d * p.d1 - 4.0 * r * p.d2;
  return b;
}

double normalized_linear_eval(double c, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  const double c2 = c * c;
  return (c2 + x.dot(y)) / std::sqrt((c2 + x.squaredNorm()) * (c2 + y.squaredNorm()));
}

DerivativeBundle normalized_linear_derivatives(double c, const Eigen::Ref<const Vector>& x,
                                               const Eigen::Ref<const Vector>& y) {
  require(x.size() == y.size(), "normalized_linear_derivatives: dimension mismatch");
  const double c2 = c * c;
  const double a = c2 + x.dot(y);
  const double ax = c2 + x.squaredNorm();
  const double ay = c2 + y.squaredNorm();
  const double root = 1.0 / std::sqrt(ax * ay);
  const auto d = static_cast<double>(x.size());
  DerivativeBundle b;
  b.value = a * root;
  b.grad1 = (y - (a / ax) * x) * root;
  b.grad2 = (x - (a / ay) * y) * root;
  b.trace12 = (d - x.squaredNorm() / ax) * root - (y.squaredNorm() - a * x.dot(y) / ax) * root / ay;
  return b;
}

void RecommendedKernelSpec::validate() const {
  require(std::isfinite(c) && c > 0.0, "recommended kernel needs c > 0");
  require(std::isfinite(s), "recommended kernel exponent must be finite");
  base.validate();
}

double growth_weight(double c, double s, const Eigen::Ref<const Vector>& x) {
  return std::pow(c * c + x.squaredNorm(), 0.5 * s);
}

Vector growth_weight_grad(double c, double s, const Eigen::Ref<const Vector>& x) {
  const double base = c * c + x.squaredNorm();
  return (s * std::pow(base, 0.5 * s - 1.0)) * x;
}

MatrixKernelBlocks recommended_eval(const RecommendedKernelSpec& spec, const Eigen::Ref<const Vector>& x,
                                    const Eigen::Ref<const Vector>& y) {
  require(x.size() == y.size(), "recommended_eval: dimension mismatch");
  // h = L + kbar_lin is the shared scalar factor; K = w(x) h w(y) I.
  DerivativeBundle h = kernel_derivatives(spec.base, x, y);
  h += normalized_linear_derivatives(spec.c, x, y);

  const double wx = growth_weight(spec.c, spec.s, x);
  const double wy = growth_weight(spec.c, spec.s, y);
  const Vector gwx = growth_weight_grad(spec.c, spec.s, x);
  const Vector gwy = growth_weight_grad(spec.c, spec.s, y);
  const auto d = x.size();

  MatrixKernelBlocks blocks;
  blocks.value = Matrix::Identity(d, d) * ((wx * wy) * h.value);
  blocks.div1 = gwx * (wy * h.value) + (wx * wy) * h.grad1;
  blocks.div2 = gwy * (wx * h.value) + (wx * wy) * h.grad2;
  blocks.div12 = gwx.dot(gwy) * h.value + wy * gwx.dot(h.grad2) + wx * gwy.dot(h.grad1) + wx * wy * h.trace12;
  return blocks;
}

std::string family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::Imq:
      return "imq";
    case KernelFamily::Gaussian:
      return "gaussian";
    case KernelFamily::Mixture:
      return "mixture";
  }
  return "unknown";
}

KernelFamily parse_family(const std::string& name) {
  if (name == "imq") return KernelFamily::Imq;
  if (name == "gaussian") return KernelFamily::Gaussian;
  if (name == "mixture") return KernelFamily::Mixture;
  throw InvalidArgument("unknown kernel family '" + name + "'");
}

namespace {

std::string describe_scalar(const ScalarKernelSpec& spec) {
  std::ostringstream out;
  out << family_name(spec.family);
  if (spec.family == KernelFamily::Mixture) out << "<" << family_name(spec.component) << ">";
  out << "(l=";
  for (std::size_t i = 0; i < spec.lengthscales.size(); ++i) out << (i ? "," : "") << spec.lengthscales[i];
  if (spec.family == KernelFamily::Mixture) {
    const auto w = spec.resolved_weights();
    out << ";w=";
    for (std::size_t i = 0; i < w.size(); ++i) out << (i ? "," : "") << w[i];
  }
  out << ")";
  return out.str();
}

}  // namespace

std::string describe(const KernelSpec& kernel) {
  if (const auto* scalar = std::get_if<ScalarKernelSpec>(&kernel)) return describe_scalar(*scalar);
  const auto& rec = std::get<RecommendedKernelSpec>(kernel);
  std::ostringstream out;
  out << "recommended(c=" << rec.c << ",s=" << rec.s << ",base=" << describe_scalar(rec.base) << ")";
  return out.str();
}

}  // namespace kgd
