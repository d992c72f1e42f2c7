#include "kgd/oracles.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace kgd::oracles {

Vector fd_gradient(const ScalarField& f, const Eigen::Ref<const Vector>& x, double h0) {
  require(h0 > 0.0, "fd_gradient: step must be positive");
  Vector point = x;
  Vector grad(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = h0 * (1.0 + std::abs(x(i)));
    point(i) = x(i) + h;
    const double up = f(point);
    point(i) = x(i) - h;
    const double down = f(point);
    point(i) = x(i);
    if (!std::isfinite(up) || !std::isfinite(down)) throw InvalidArgument("fd_gradient: nonfinite evaluation");
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

GaussHermiteRule gauss_hermite_rule(std::size_t order) {
  require(order >= 1, "gauss_hermite_rule: order must be positive");
  const auto m = static_cast<Eigen::Index>(order);
  // Jacobi matrix of the probabilists' Hermite polynomials.
  Matrix jacobi = Matrix::Zero(m, m);
  for (Eigen::Index k = 1; k < m; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(jacobi);
  GaussHermiteRule rule;
  for (Eigen::Index k = 0; k < m; ++k) {
    rule.nodes.push_back(solver.eigenvalues()(k));
    const double v = solver.eigenvectors()(0, k);
    rule.weights.push_back(v * v);
  }
  return rule;
}

double gauss_hermite_2d(const std::function<double(double, double)>& integrand, double m, double m_prime,
                        double sigma, std::size_t order) {
  require(order >= 20, "gauss_hermite_2d: order must be at least 20");
  const auto rule = gauss_hermite_rule(order);
  long double total = 0.0L;
  for (std::size_t a = 0; a < order; ++a) {
    for (std::size_t b = 0; b < order; ++b) {
      total += static_cast<long double>(rule.weights[a] * rule.weights[b]) *
               integrand(m + sigma * rule.nodes[a], m_prime + sigma * rule.nodes[b]);
    }
  }
  return static_cast<double>(total);
}

namespace {

struct KernelTerms {
  double k = 0.0;
  Vector dx;       // d/dx k(x, y)
  Vector dy;       // d/dy k(x, y)
  double dxdy = 0.0;  // sum_i d^2 k / dx_i dy_i
};

void add_component(KernelFamily family, double ell, double weight, const Vector& x, const Vector& y,
                   KernelTerms& out) {
  const double l2 = ell * ell;
  const Vector diff = x - y;
  const double r = diff.squaredNorm();
  const double dim = static_cast<double>(x.size());
  if (family == KernelFamily::Gaussian) {
    const double k = std::exp(-r / l2);
    out.k += weight * k;
    out.dx += weight * (-2.0 / l2) * k * diff;
    out.dy += weight * (2.0 / l2) * k * diff;
    out.dxdy += weight * (2.0 * dim / l2 - 4.0 * r / (l2 * l2)) * k;
  } else {
    const double u = 1.0 + r / l2;
    out.k += weight / std::sqrt(u);
    const double u32 = std::pow(u, -1.5);
    out.dx += weight * (-u32 / l2) * diff;
    out.dy += weight * (u32 / l2) * diff;
    out.dxdy += weight * (dim * u32 / l2 - 3.0 * r / (l2 * l2) * std::pow(u, -2.5));
  }
}

KernelTerms kernel_terms(const ScalarKernelSpec& spec, const Vector& x, const Vector& y) {
  KernelTerms t{0.0, Vector::Zero(x.size()), Vector::Zero(x.size()), 0.0};
  if (spec.family == KernelFamily::Mixture) {
    const std::size_t m = spec.lengthscales.size();
    for (std::size_t c = 0; c < m; ++c) {
      const double w = spec.weights.empty() ? 1.0 / static_cast<double>(m) : spec.weights[c];
      add_component(spec.component, spec.lengthscales[c], w, x, y, t);
    }
  } else {
    add_component(spec.family, spec.lengthscales.at(0), 1.0, x, y, t);
  }
  return t;
}

}  // namespace

double reference_ksd_squared(const VectorField& score, const ScalarKernelSpec& kernel, const EmpiricalMeasure& q) {
  const std::size_t n = q.size();
  std::vector<Vector> scores;
  scores.reserve(n);
  for (std::size_t i = 0; i < n; ++i) scores.push_back(score(q.atom(i)));
  long double total = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector x = q.atom(i);
    for (std::size_t j = 0; j < n; ++j) {
      const Vector y = q.atom(j);
      const auto t = kernel_terms(kernel, x, y);
      const double u = t.dxdy + t.dx.dot(scores[j]) + t.dy.dot(scores[i]) + t.k * scores[i].dot(scores[j]);
      total += u;
    }
  }
  return static_cast<double>(total / static_cast<long double>(n * n));
}

SlopeFit slope_fit(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), "slope_fit: xs and ys differ in length");
  require(xs.size() >= 3, "slope_fit: need at least three points");
  const double m = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("slope_fit: degenerate abscissae");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - intercept - slope * xs[i];
    rss += e * e;
  }
  return {slope, std::sqrt(rss / (m - 2.0) / sxx)};
}

}  // namespace kgd::oracles
