#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "kgd/core.hpp"
#include "kgd/kernels.hpp"

// Brute-force references for tests. Nothing here calls the estimators or
// Stein-kernel code it is used to check.
namespace kgd::oracles {

using ScalarField = std::function<double(const Eigen::Ref<const Vector>&)>;
using VectorField = std::function<Vector(const Eigen::Ref<const Vector>&)>;

/// Central differences with step h0 (1 + |x_i|) per coordinate.
Vector fd_gradient(const ScalarField& f, const Eigen::Ref<const Vector>& x, double h0 = 1e-5);

/// Nodes and weights for E[f(Z)], Z ~ N(0, 1), via Golub-Welsch.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussHermiteRule gauss_hermite_rule(std::size_t order);

/// E f(Y, Y') with Y ~ N(m, sigma^2), Y' ~ N(m', sigma^2) independent, by tensor-product quadrature.
double gauss_hermite_2d(const std::function<double(double, double)>& integrand, double m, double m_prime,
                        double sigma, std::size_t order = 60);

/// Langevin KSD^2 V-statistic (1/n^2) sum_ij u_p(x_i, x_j) for a fixed score field.
double reference_ksd_squared(const VectorField& score, const ScalarKernelSpec& kernel, const EmpiricalMeasure& q);

struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
};

/// Ordinary least squares y = a + b x; returns b and its standard error. Needs >= 3 points.
SlopeFit slope_fit(std::span<const double> xs, std::span<const double> ys);

}  // namespace kgd::oracles
