#pragma once

#include "gkg/gaussian.hpp"

namespace gkg {

/// Gradient of a scalar with respect to one density, taken at the level of its
/// mean and dense precision. `precision` holds entrywise partials; it need not
/// be symmetric.
struct DensityGrad {
  Vector mean;
  Matrix precision;

  DensityGrad() = default;
  explicit DensityGrad(Index dim)
      : mean(Vector::Zero(dim)), precision(Matrix::Zero(dim, dim)) {}

  DensityGrad& operator+=(const DensityGrad& other);
};

/// Maps entrywise precision partials G onto the factor of
/// P = F F^T + jitter * I, giving (G + G^T) F.
Matrix factor_grad(const Matrix& precision_grad, const Matrix& factor);

struct MahalanobisGrad {
  Vector query_mean;       // 2 P delta
  Matrix query_precision;  // delta delta^T
  Matrix query_factor;     // 2 delta delta^T F
  Vector candidate_mean;   // -2 P delta
};

/// Gradients of mahalanobis(candidate, query), with delta = mu_q - c.
MahalanobisGrad grad_mahalanobis(const Vector& candidate_mean,
                                 const GaussianDensity& query);

struct ProductGrad {
  DensityGrad lhs;
  DensityGrad rhs;
  Matrix lhs_factor;
  Matrix rhs_factor;
};

/// Chain rule through product(lhs, rhs). The mean solve P3 x = b is
/// differentiated by the adjoint method: gb = P3^-1 g_x and
/// gP3 -= gb x^T. Returned precision partials are symmetrized.
ProductGrad grad_through_product(const DensityGrad& upstream,
                                 const GaussianDensity& lhs,
                                 const GaussianDensity& rhs);

}  // namespace gkg
