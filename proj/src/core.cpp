#include "kgd/core.hpp"

#include <cmath>

namespace kgd {

void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

EmpiricalMeasure::EmpiricalMeasure(Matrix atoms) : atoms_(std::move(atoms)) {
  require(atoms_.cols() >= 1, "empirical measure needs at least one atom");
  require(atoms_.rows() >= 1, "empirical measure needs dimension >= 1");
  require(atoms_.allFinite(), "empirical measure atoms must be finite");
}

EmpiricalMeasure EmpiricalMeasure::with_atom(const Point& x) const {
  require(static_cast<std::size_t>(x.size()) == dim(), "dimension mismatch in with_atom");
  Matrix extended(atoms_.rows(), atoms_.cols() + 1);
  extended.leftCols(atoms_.cols()) = atoms_;
  extended.col(atoms_.cols()) = x;
  return EmpiricalMeasure(std::move(extended));
}

EmpiricalMeasure make_empirical(std::span<const Point> points) {
  require(!points.empty(), "make_empirical: empty point list");
  const auto d = points.front().size();
  Matrix atoms(d, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(points[i].size() == d, "make_empirical: inconsistent point dimensions");
    atoms.col(static_cast<Eigen::Index>(i)) = points[i];
  }
  return EmpiricalMeasure(std::move(atoms));
}

ReferenceDistribution::ReferenceDistribution(Vector mean, Vector variances)
    : mean_(std::move(mean)), variances_(std::move(variances)) {
  require(mean_.size() >= 1, "reference distribution needs dimension >= 1");
  require(mean_.size() == variances_.size(), "reference mean/variance dimension mismatch");
  require(mean_.allFinite(), "reference mean must be finite");
  require((variances_.array() > 0.0).all() && variances_.allFinite(),
          "reference variances must be strictly positive");
}

ReferenceDistribution ReferenceDistribution::standard_normal(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return {Vector::Zero(d), Vector::Ones(d)};
}

Vector ReferenceDistribution::log_grad(const Eigen::Ref<const Vector>& x) const {
  require(x.size() == mean_.size(), "ref_log_grad: dimension mismatch");
  return -(x - mean_).cwiseQuotient(variances_);
}

}  // namespace kgd
