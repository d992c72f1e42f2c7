#pragma once

#include <string>
#include <variant>
#include <vector>

#include "kgd/core.hpp"

namespace kgd {

enum class KernelFamily { Imq, Gaussian, Mixture };

/// Translation-invariant scalar kernel k(x, y) = phi(|x - y|^2).
///
///   IMQ:      (1 + r / l^2)^(-1/2)
///   Gaussian: exp(-r / l^2)
///   Mixture:  sum_m w_m * component(r; l_m), component family IMQ or Gaussian
struct ScalarKernelSpec {
  KernelFamily family = KernelFamily::Imq;
  std::vector<double> lengthscales{1.0};
  /// Mixture weights. Empty means uniform 1/m.
  std::vector<double> weights;
  KernelFamily component = KernelFamily::Imq;

  static ScalarKernelSpec imq(double lengthscale);
  static ScalarKernelSpec gaussian(double lengthscale);
  static ScalarKernelSpec mixture(std::vector<double> lengthscales, std::vector<double> weights = {},
                                  KernelFamily component = KernelFamily::Imq);

  void validate() const;
  std::vector<double> resolved_weights() const;
};

/// phi and its first three derivatives with respect to r = |x - y|^2.
struct RadialProfile {
  double phi = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

RadialProfile radial_profile(const ScalarKernelSpec& spec, double r);

/// k, grad_1 k, grad_2 k and trace12 = sum_i d/dx_i d/dy_i k at one pair.
struct DerivativeBundle {
  double value = 0.0;
  Vector grad1;
  Vector grad2;
  double trace12 = 0.0;

  DerivativeBundle& operator+=(const DerivativeBundle& other);
};

double kernel_eval(const ScalarKernelSpec& spec, const Eigen::Ref<const Vector>& x,
                   const Eigen::Ref<const Vector>& y);
DerivativeBundle kernel_derivatives(const ScalarKernelSpec& spec, const Eigen::Ref<const Vector>& x,
                                    const Eigen::Ref<const Vector>& y);

/// Normalised linear kernel (c^2 + x.y) / sqrt((c^2 + |x|^2)(c^2 + |y|^2)).
double normalized_linear_eval(double c, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y);
DerivativeBundle normalized_linear_derivatives(double c, const Eigen::Ref<const Vector>& x,
                                               const Eigen::Ref<const Vector>& y);

/// Weighted matrix kernel K(x,y) = w_s(x) (L(x,y) + kbar_lin(x,y)) w_s(y) * I,
/// with w_s(x) = (c^2 + |x|^2)^(s/2) and L = base * I.
struct RecommendedKernelSpec {
  double c = 1.0;
  double s = 0.0;
  ScalarKernelSpec base;

  void validate() const;
};

double growth_weight(double c, double s, const Eigen::Ref<const Vector>& x);
Vector growth_weight_grad(double c, double s, const Eigen::Ref<const Vector>& x);

/// Blocks of a matrix-valued kernel at one pair:
///   value  K(x, y)                       (d x d)
///   div1   (div_1 K)_j = sum_i d/dx_i K_ij
///   div2   (div_2 K)_i = sum_j d/dy_j K_ij
///   div12  sum_ij d/dx_i d/dy_j K_ij
struct MatrixKernelBlocks {
  Matrix value;
  Vector div1;
  Vector div2;
  double div12 = 0.0;
};

MatrixKernelBlocks recommended_eval(const RecommendedKernelSpec& spec, const Eigen::Ref<const Vector>& x,
                                    const Eigen::Ref<const Vector>& y);

using KernelSpec = std::variant<ScalarKernelSpec, RecommendedKernelSpec>;

std::string describe(const KernelSpec& kernel);
std::string family_name(KernelFamily family);
KernelFamily parse_family(const std::string& name);

}  // namespace kgd
