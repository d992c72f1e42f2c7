#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point in R^d. Entries must be finite.
using Point = Eigen::VectorXd;

/// Raised for malformed inputs: empty measures, dimension mismatches, bad parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a particle system or ODE solve leaves the finite range.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Uniformly weighted empirical measure (1/n) sum_i delta_{x_i}.
///
/// Atoms are stored as the columns of a d x n matrix, in insertion order.
/// Duplicate atoms are allowed.
class EmpiricalMeasure {
 public:
  /// Takes ownership of a d x n matrix of atoms (one column per atom).
  explicit EmpiricalMeasure(Matrix atoms);

  std::size_t size() const { return static_cast<std::size_t>(atoms_.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(atoms_.rows()); }
  const Matrix& atoms() const { return atoms_; }
  auto atom(std::size_t i) const { return atoms_.col(static_cast<Eigen::Index>(i)); }
  double weight() const { return 1.0 / static_cast<double>(size()); }

  /// Copy with one extra atom appended at the end.
  EmpiricalMeasure with_atom(const Point& x) const;

 private:
  Matrix atoms_;
};

EmpiricalMeasure make_empirical(std::span<const Point> points);

/// Diagonal Gaussian reference distribution Q0 = N(mean, diag(variances)).
class ReferenceDistribution {
 public:
  ReferenceDistribution(Vector mean, Vector variances);
  static ReferenceDistribution standard_normal(std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  const Vector& variances() const { return variances_; }

  /// grad log q0(x) = -(x - mean) / variances.
  Vector log_grad(const Eigen::Ref<const Vector>& x) const;
  /// Diagonal of the (constant) Hessian of log q0.
  Vector log_hessian_diag() const { return -variances_.cwiseInverse(); }

 private:
  Vector mean_;
  Vector variances_;
};

inline Vector ref_log_grad(const ReferenceDistribution& ref, const Eigen::Ref<const Vector>& x) {
  return ref.log_grad(x);
}

void require(bool condition, const std::string& message);

}  // namespace kgd
