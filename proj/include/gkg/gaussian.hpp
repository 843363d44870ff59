#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gkg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Default jitter added to every stored precision so that LL^T + eps*I is
/// positive definite even when the factor is rank deficient.
inline constexpr double kDefaultJitter = 1e-3;

/// A Gaussian density stored through its precision:
///
///   precision = factor * factor^T + jitter * I
///
/// Entities and relations carry a d x r factor. Densities produced by
/// translate() and product() carry the column concatenation of their operand
/// factors (compressed to at most d columns) and the sum of their jitters, so
/// that precisions add exactly.
struct GaussianDensity {
  Vector mean;
  Matrix factor;
  double jitter = kDefaultJitter;

  GaussianDensity() = default;
  GaussianDensity(Vector mean_, Matrix factor_, double jitter_);

  Index dim() const { return mean.size(); }
  Index columns() const { return factor.cols(); }
};

/// Weighted set of densities. A single component with weight 1 is the
/// canonical embedding of a plain density.
struct GaussianMixture {
  std::vector<GaussianDensity> components;
  Vector weights;

  GaussianMixture() = default;
  GaussianMixture(std::vector<GaussianDensity> components_, Vector weights_);

  std::size_t size() const { return components.size(); }
  Index dim() const { return components.empty() ? 0 : components.front().dim(); }
};

GaussianMixture as_mixture(GaussianDensity density);

/// Throws NumericError if the mean or factor carry non-finite values, the
/// jitter is negative, or the shapes disagree.
void validate(const GaussianDensity& density);

/// Checks every component plus the weight invariants: strictly positive,
/// summing to one within 1e-9.
void validate(const GaussianMixture& mixture);

/// True when validate() would pass and the dense precision admits a Cholesky
/// factorization.
bool is_well_formed(const GaussianDensity& density);
bool is_well_formed(const GaussianMixture& mixture);

/// Dense factor * factor^T + jitter * I.
Matrix precision(const GaussianDensity& density);

/// (mu_q - c)^T P_q (mu_q - c). The candidate contributes only its mean.
double mahalanobis(const Vector& candidate_mean, const GaussianDensity& query);

/// Rewrites a d x c factor F as G with G G^T == F F^T and at most
/// `max_columns` columns. When c <= max_columns F is returned unchanged.
/// Otherwise G = U * S from a thin SVD of F, keeping the largest columns
/// (stable by original index on ties). Lossless whenever
/// max_columns >= rank(F).
Matrix compress_factor(const Matrix& factor, Index max_columns);

/// Column cap applied to operator outputs. Zero means "the dimension d",
/// which never loses information.
struct FactorLimit {
  Index max_columns = 0;
};

/// N(mu_e + mu_r, (P_e + P_r)^-1).
GaussianDensity translate(const GaussianDensity& entity,
                          const GaussianDensity& relation,
                          FactorLimit limit = {});

/// Pointwise product of two densities: P3 = P1 + P2 and P3 mu3 = P1 mu1 + P2 mu2.
/// The mean is obtained from a Cholesky solve of P3. Solver failures raise
/// NumericError naming the operands.
GaussianDensity product(const GaussianDensity& lhs, const GaussianDensity& rhs,
                        FactorLimit limit = {}, std::string_view lhs_id = "lhs",
                        std::string_view rhs_id = "rhs");

struct AggregatorParams;

/// Concatenates all components and reweights them jointly.
GaussianMixture mixture_union(std::span<const GaussianMixture> inputs,
                              const AggregatorParams& params);

/// Translates every component by the relation, then reweights.
GaussianMixture mixture_translate(const GaussianMixture& mixture,
                                  const GaussianDensity& relation,
                                  const AggregatorParams& params,
                                  FactorLimit limit = {});

/// Intersects every component with `density`, then reweights.
GaussianMixture mixture_intersect(const GaussianMixture& mixture,
                                  const GaussianDensity& density,
                                  const AggregatorParams& params,
                                  FactorLimit limit = {});

/// Mixture x mixture intersection by distributing over every component pair
/// (lhs-major order), then reweighting.
GaussianMixture mixture_intersect(const GaussianMixture& lhs,
                                  const GaussianMixture& rhs,
                                  const AggregatorParams& params,
                                  FactorLimit limit = {});

/// sum_i w_i * mahalanobis(candidate, component_i).
double mixture_distance(const Vector& candidate_mean,
                        const GaussianMixture& mixture);

/// Keeps the `max_components` highest-weight components (stable by index on
/// ties) and renormalizes their weights. Returns the kept indices in their
/// original order.
std::vector<std::size_t> cap_components(GaussianMixture& mixture,
                                        std::size_t max_components);

}  // namespace gkg
