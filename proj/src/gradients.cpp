#include "gkg/gradients.hpp"

#include "gkg/error.hpp"

namespace gkg {

DensityGrad& DensityGrad::operator+=(const DensityGrad& other) {
  if (mean.size() == 0) {
    *this = other;
    return *this;
  }
  mean += other.mean;
  precision += other.precision;
  return *this;
}

Matrix factor_grad(const Matrix& precision_grad, const Matrix& factor) {
  return (precision_grad + precision_grad.transpose()) * factor;
}

MahalanobisGrad grad_mahalanobis(const Vector& candidate_mean,
                                 const GaussianDensity& query) {
  if (candidate_mean.size() != query.dim()) {
    throw InvalidArgument("grad_mahalanobis: dimension mismatch");
  }
  const Vector delta = query.mean - candidate_mean;
  const Vector pd = precision(query) * delta;
  MahalanobisGrad g;
  g.query_mean = 2.0 * pd;
  g.candidate_mean = -2.0 * pd;
  g.query_precision = delta * delta.transpose();
  g.query_factor = 2.0 * delta * (delta.transpose() * query.factor);
  return g;
}

ProductGrad grad_through_product(const DensityGrad& upstream,
                                 const GaussianDensity& lhs,
                                 const GaussianDensity& rhs) {
  const Index d = lhs.dim();
  if (rhs.dim() != d || upstream.mean.size() != d ||
      upstream.precision.rows() != d || upstream.precision.cols() != d) {
    throw InvalidArgument("grad_through_product: dimension mismatch");
  }
  const Matrix p1 = precision(lhs);
  const Matrix p2 = precision(rhs);
  Eigen::LLT<Matrix> llt(p1 + p2);
  if (llt.info() != Eigen::Success) {
    throw NumericError("grad_through_product: summed precision is not positive definite");
  }
  const Vector x = llt.solve(p1 * lhs.mean + p2 * rhs.mean);
  const Vector gb = llt.solve(upstream.mean);
  const Matrix gp3 = upstream.precision - gb * x.transpose();

  ProductGrad out;
  out.lhs.mean = p1 * gb;
  out.rhs.mean = p2 * gb;
  Matrix g1 = gp3 + gb * lhs.mean.transpose();
  Matrix g2 = gp3 + gb * rhs.mean.transpose();
  out.lhs.precision = 0.5 * (g1 + g1.transpose());
  out.rhs.precision = 0.5 * (g2 + g2.transpose());
  out.lhs_factor = factor_grad(out.lhs.precision, lhs.factor);
  out.rhs_factor = factor_grad(out.rhs.precision, rhs.factor);
  return out;
}

}  // namespace gkg
