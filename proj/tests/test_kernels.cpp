#include <gtest/gtest.h>

#include <cmath>

#include "kgd/kernels.hpp"
#include "kgd/oracles.hpp"
#include "test_helpers.hpp"

using namespace kgd;
using kgd::testing::rel_error;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// sum_i d/dx_i of the i-th component of g(x), by central differences.
double fd_divergence(const std::function<Vector(const Vector&)>& g, const Vector& x, double h0 = 1e-5) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = h0 * (1.0 + std::abs(x(i)));
    Vector up = x, down = x;
    up(i) += h;
    down(i) -= h;
    total += (g(up)(i) - g(down)(i)) / (2.0 * h);
  }
  return total;
}

std::vector<ScalarKernelSpec> families() {
  return {ScalarKernelSpec::imq(1.0), ScalarKernelSpec::imq(0.7), ScalarKernelSpec::gaussian(1.0),
          ScalarKernelSpec::gaussian(1.6), ScalarKernelSpec::mixture({0.3, 1.0, 2.0}),
          ScalarKernelSpec::mixture({0.5, 1.5}, {0.25, 0.75}, KernelFamily::Gaussian)};
}

}  // namespace

TEST(KernelEval, ImqAtZeroDistanceIsOne) {
  const Vector x = vec({0.3, -1.2});
  EXPECT_DOUBLE_EQ(kernel_eval(ScalarKernelSpec::imq(1.0), x, x), 1.0);
}

TEST(KernelEval, ImqAtUnitSquaredDistance) {
  EXPECT_NEAR(kernel_eval(ScalarKernelSpec::imq(1.0), vec({0.0, 0.0}), vec({1.0, 0.0})), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(KernelEval, UniformMixtureAtZeroDistanceIsOne) {
  const auto spec = ScalarKernelSpec::mixture({0.01, 0.1, 1.0});
  const Vector x = vec({2.0, 5.0, -1.0});
  EXPECT_NEAR(kernel_eval(spec, x, x), 1.0, 1e-15);
}

TEST(KernelEval, GaussianClosedForm) {
  EXPECT_NEAR(kernel_eval(ScalarKernelSpec::gaussian(2.0), vec({1.0}), vec({3.0})), std::exp(-1.0), 1e-15);
}

TEST(KernelSpec, RejectsBadParameters) {
  EXPECT_THROW(ScalarKernelSpec::imq(0.0), InvalidArgument);
  EXPECT_THROW(ScalarKernelSpec::gaussian(-1.0), InvalidArgument);
  EXPECT_THROW(ScalarKernelSpec::mixture({1.0, 2.0}, {0.5, 0.6}), InvalidArgument);
  EXPECT_THROW(ScalarKernelSpec::mixture({1.0, 2.0}, {1.0}), InvalidArgument);
  EXPECT_THROW(parse_family("matern"), InvalidArgument);
}

TEST(KernelDerivatives, ImqOnDiagonal) {
  const Vector x = vec({0.4, -0.9});
  const auto b = kernel_derivatives(ScalarKernelSpec::imq(1.0), x, x);
  EXPECT_EQ(b.grad1.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR(b.trace12, 2.0, 1e-12);  // d / l^2
  // Finite-difference oracle for trace12 on the diagonal.
  const auto spec = ScalarKernelSpec::imq(1.0);
  const double fd = fd_divergence([&](const Vector& z) { return kernel_derivatives(spec, z, x).grad2; }, x);
  EXPECT_NEAR(fd, 2.0, 1e-6);
}

TEST(KernelDerivatives, GaussianOnDiagonal) {
  const Vector x = vec({0.7});
  const auto spec = ScalarKernelSpec::gaussian(1.0);
  EXPECT_NEAR(kernel_derivatives(spec, x, x).trace12, 2.0, 1e-12);  // 2 / l^2
  const double fd = fd_divergence([&](const Vector& z) { return kernel_derivatives(spec, z, x).grad2; }, x);
  EXPECT_NEAR(fd, 2.0, 1e-6);
}

TEST(KernelDerivatives, ImqOffDiagonalMatchesFiniteDifferences) {
  const auto spec = ScalarKernelSpec::imq(1.0);
  const Vector x = vec({0.0}), y = vec({1.0});
  const auto b = kernel_derivatives(spec, x, y);
  const Vector fd = oracles::fd_gradient([&](const Eigen::Ref<const Vector>& z) { return kernel_eval(spec, z, y); }, x);
  EXPECT_LT(rel_error(b.grad1, fd), 1e-6);
  // Closed form: grad_x (1 + |x-y|^2)^(-1/2) = -(x - y) 2^(-3/2) at |x-y| = 1.
  EXPECT_NEAR(b.grad1(0), std::pow(2.0, -1.5), 1e-15);
}

TEST(KernelDerivatives, AllFamiliesMatchFiniteDifferencesOnRandomInputs) {
  RandomStream rng(11);
  for (const auto& spec : families()) {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t d = 1 + static_cast<std::size_t>(trial % 4);
      const Vector x = rng.normal_vector(d);
      const Vector y = x + 0.8 * rng.normal_vector(d);
      const auto b = kernel_derivatives(spec, x, y);
      EXPECT_NEAR(b.value, kernel_eval(spec, x, y), 1e-15);
      const Vector g1 = oracles::fd_gradient([&](const Eigen::Ref<const Vector>& z) { return kernel_eval(spec, z, y); }, x);
      const Vector g2 = oracles::fd_gradient([&](const Eigen::Ref<const Vector>& z) { return kernel_eval(spec, x, z); }, y);
      const double t12 = fd_divergence([&](const Vector& z) { return kernel_derivatives(spec, z, y).grad2; }, x);
      worst = std::max({worst, rel_error(b.grad1, g1), rel_error(b.grad2, g2), rel_error(b.trace12, t12)});
    }
    EXPECT_LT(worst, 1e-5) << describe(spec);
  }
}

TEST(KernelDerivatives, RadialProfileDerivativesMatchFiniteDifferences) {
  for (const auto& spec : families()) {
    for (double r : {0.0, 0.05, 0.5, 2.0, 7.0}) {
      const double h = 1e-5 * (1.0 + r);
      const auto p = radial_profile(spec, r);
      // Central stencil inside the domain, second-order forward stencil at r = 0.
      auto diff = [&](auto get) {
        if (r == 0.0)
          return (-3.0 * get(radial_profile(spec, 0.0)) + 4.0 * get(radial_profile(spec, h)) -
                  get(radial_profile(spec, 2.0 * h))) /
                 (2.0 * h);
        return (get(radial_profile(spec, r + h)) - get(radial_profile(spec, r - h))) / (2.0 * h);
      };
      EXPECT_LT(rel_error(p.d1, diff([](const RadialProfile& q) { return q.phi; })), 1e-5) << describe(spec) << " r=" << r;
      EXPECT_LT(rel_error(p.d2, diff([](const RadialProfile& q) { return q.d1; })), 1e-5) << describe(spec) << " r=" << r;
      EXPECT_LT(rel_error(p.d3, diff([](const RadialProfile& q) { return q.d2; })), 1e-5) << describe(spec) << " r=" << r;
    }
  }
}

TEST(KernelProperties, SymmetricAndTranslationInvariantExactly) {
  RandomStream rng(12);
  for (const auto& spec : families()) {
    for (int trial = 0; trial < 20; ++trial) {
      const Vector x = rng.normal_vector(3), y = rng.normal_vector(3);
      EXPECT_EQ(kernel_eval(spec, x, y), kernel_eval(spec, y, x));
      const auto bxy = kernel_derivatives(spec, x, y);
      const auto byx = kernel_derivatives(spec, y, x);
      EXPECT_EQ((bxy.grad2 - byx.grad1).cwiseAbs().maxCoeff(), 0.0);
      EXPECT_EQ(kernel_derivatives(spec, x, x).grad1.cwiseAbs().maxCoeff(), 0.0);
    }
  }
}

TEST(KernelProperties, GramMatricesArePositiveSemidefinite) {
  RandomStream rng(13);
  for (const auto& spec : families()) {
    for (int trial = 0; trial < 10; ++trial) {
      Matrix pts = rng.normal_matrix(2, 10, 1.5);
      Matrix gram(10, 10);
      for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) gram(i, j) = kernel_eval(spec, pts.col(i), pts.col(j));
      const Vector u = rng.normal_vector(10);
      EXPECT_GE(u.dot(gram * u), -1e-10);
    }
  }
}

TEST(NormalizedLinear, UnitOnDiagonalAndDerivativesMatchFiniteDifferences) {
  RandomStream rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(trial % 3);
    const double c = 0.5 + rng.uniform();
    const Vector x = rng.normal_vector(d), y = rng.normal_vector(d);
    EXPECT_NEAR(normalized_linear_eval(c, x, x), 1.0, 1e-14);
    const auto b = normalized_linear_derivatives(c, x, y);
    const Vector g1 =
        oracles::fd_gradient([&](const Eigen::Ref<const Vector>& z) { return normalized_linear_eval(c, z, y); }, x);
    const Vector g2 =
        oracles::fd_gradient([&](const Eigen::Ref<const Vector>& z) { return normalized_linear_eval(c, x, z); }, y);
    const double t12 = fd_divergence([&](const Vector& z) { return normalized_linear_derivatives(c, z, y).grad2; }, x);
    EXPECT_LT(rel_error(b.grad1, g1), 1e-5);
    EXPECT_LT(rel_error(b.grad2, g2), 1e-5);
    EXPECT_LT(rel_error(b.trace12, t12), 1e-5);
  }
}

TEST(RecommendedKernel, ZeroExponentIsBasePlusIdentityOnDiagonal) {
  RecommendedKernelSpec spec{1.0, 0.0, ScalarKernelSpec::imq(1.0)};
  const Vector x = vec({0.3, -2.0});
  const auto k = recommended_eval(spec, x, x);
  EXPECT_LT((k.value - 2.0 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(RecommendedKernel, GrowthWeightAtOrigin) {
  RecommendedKernelSpec spec{1.0, 2.0, ScalarKernelSpec::imq(1.0)};
  const auto k = recommended_eval(spec, vec({0.0}), vec({0.0}));
  EXPECT_NEAR(k.value(0, 0), 2.0, 1e-14);
}

TEST(RecommendedKernel, DerivativeBlocksMatchFiniteDifferences) {
  RandomStream rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(trial % 3);
    RecommendedKernelSpec spec{0.5 + rng.uniform(), -1.0 + 2.0 * rng.uniform(),
                               trial % 2 ? ScalarKernelSpec::gaussian(1.2) : ScalarKernelSpec::imq(0.9)};
    const Vector x = rng.normal_vector(d), y = rng.normal_vector(d);
    const auto k = recommended_eval(spec, x, y);
    // K = F I, so div_1 K = grad_x F, div_2 K = grad_y F and div_1 div_2 K = sum_i d/dx_i d/dy_i F.
    auto F = [&](const Vector& a, const Vector& b) { return recommended_eval(spec, a, b).value(0, 0); };
    const Vector g1 = oracles::fd_gradient([&](const Eigen::Ref<const Vector>& z) { return F(z, y); }, x);
    const Vector g2 = oracles::fd_gradient([&](const Eigen::Ref<const Vector>& z) { return F(x, z); }, y);
    const double t12 = fd_divergence([&](const Vector& z) { return recommended_eval(spec, z, y).div2; }, x);
    EXPECT_LT(rel_error(k.div1, g1), 1e-5);
    EXPECT_LT(rel_error(k.div2, g2), 1e-5);
    EXPECT_LT(rel_error(k.div12, t12), 1e-5);
    EXPECT_LT((k.value - k.value(0, 0) * Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-15);
    // K(x, y) = K(y, x)^T exactly.
    EXPECT_EQ((k.value - recommended_eval(spec, y, x).value.transpose()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(RecommendedKernel, MatrixQuadraticFormIsNonnegative) {
  RandomStream rng(16);
  RecommendedKernelSpec spec{1.0, 0.5, ScalarKernelSpec::imq(1.0)};
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix pts = rng.normal_matrix(2, 10, 1.5);
    const Matrix u = rng.normal_matrix(2, 10);
    double total = 0.0;
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) total += u.col(i).dot(recommended_eval(spec, pts.col(i), pts.col(j)).value * u.col(j));
    EXPECT_GE(total, -1e-10);
  }
}

TEST(RecommendedKernel, GrowthWeightGradientMatchesFiniteDifferences) {
  RandomStream rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const double c = 0.5 + rng.uniform(), s = -1.0 + 2.0 * rng.uniform();
    const Vector x = rng.normal_vector(3);
    const Vector fd =
        oracles::fd_gradient([&](const Eigen::Ref<const Vector>& z) { return growth_weight(c, s, z); }, x);
    EXPECT_LT(rel_error(growth_weight_grad(c, s, x), fd), 1e-6);
  }
}
