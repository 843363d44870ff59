#include "gkg/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gkg/aggregator.hpp"
#include "gkg/error.hpp"

namespace gkg {

namespace {

void require_same_dim(Index a, Index b, const char* what) {
  if (a != b) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" +
                          std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

Matrix concat_columns(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Index resolve_limit(FactorLimit limit, Index dim) {
  return limit.max_columns > 0 ? limit.max_columns : std::max<Index>(dim, 1);
}

}  // namespace

GaussianDensity::GaussianDensity(Vector mean_, Matrix factor_, double jitter_)
    : mean(std::move(mean_)), factor(std::move(factor_)), jitter(jitter_) {
  if (factor.rows() != mean.size()) {
    throw InvalidArgument("GaussianDensity: factor has " +
                          std::to_string(factor.rows()) + " rows, mean has " +
                          std::to_string(mean.size()) + " entries");
  }
}

GaussianMixture::GaussianMixture(std::vector<GaussianDensity> components_,
                                 Vector weights_)
    : components(std::move(components_)), weights(std::move(weights_)) {
  if (static_cast<Index>(components.size()) != weights.size()) {
    throw InvalidArgument("GaussianMixture: " +
                          std::to_string(components.size()) +
                          " components but " + std::to_string(weights.size()) +
                          " weights");
  }
}

GaussianMixture as_mixture(GaussianDensity density) {
  std::vector<GaussianDensity> comps;
  comps.push_back(std::move(density));
  return GaussianMixture(std::move(comps), Vector::Ones(1));
}

void validate(const GaussianDensity& density) {
  if (density.dim() < 1) throw InvalidArgument("density has dimension 0");
  if (density.factor.rows() != density.dim()) {
    throw InvalidArgument("density factor/mean shape mismatch");
  }
  if (!density.mean.allFinite()) throw NumericError("density mean is not finite");
  if (!density.factor.allFinite()) {
    throw NumericError("density factor is not finite");
  }
  if (!std::isfinite(density.jitter) || density.jitter < 0.0) {
    throw NumericError("density jitter must be finite and non-negative");
  }
}

void validate(const GaussianMixture& mixture) {
  if (mixture.components.empty()) throw InvalidArgument("empty mixture");
  if (mixture.weights.size() != static_cast<Index>(mixture.size())) {
    throw InvalidArgument("mixture weight count mismatch");
  }
  const Index d = mixture.dim();
  for (const auto& c : mixture.components) {
    validate(c);
    require_same_dim(c.dim(), d, "mixture");
  }
  if (!mixture.weights.allFinite() || (mixture.weights.array() <= 0.0).any()) {
    throw NumericError("mixture weights must be finite and strictly positive");
  }
  if (std::abs(mixture.weights.sum() - 1.0) > 1e-9) {
    throw NumericError("mixture weights do not sum to one");
  }
}

bool is_well_formed(const GaussianDensity& density) {
  try {
    validate(density);
  } catch (const Error&) {
    return false;
  }
  Eigen::LLT<Matrix> llt(precision(density));
  return llt.info() == Eigen::Success;
}

bool is_well_formed(const GaussianMixture& mixture) {
  try {
    validate(mixture);
  } catch (const Error&) {
    return false;
  }
  return std::all_of(mixture.components.begin(), mixture.components.end(),
                     [](const GaussianDensity& c) { return is_well_formed(c); });
}

Matrix precision(const GaussianDensity& density) {
  if (!density.factor.allFinite() || !std::isfinite(density.jitter)) {
    throw NumericError("precision: non-finite factor entries");
  }
  const Index d = density.dim();
  Matrix p = Matrix::Zero(d, d);
  p.selfadjointView<Eigen::Lower>().rankUpdate(density.factor);
  p = p.selfadjointView<Eigen::Lower>();
  p.diagonal().array() += density.jitter;
  return p;
}

double mahalanobis(const Vector& candidate_mean, const GaussianDensity& query) {
  require_same_dim(candidate_mean.size(), query.dim(), "mahalanobis");
  const Vector delta = query.mean - candidate_mean;
  return (query.factor.transpose() * delta).squaredNorm() +
         query.jitter * delta.squaredNorm();
}

Matrix compress_factor(const Matrix& factor, Index max_columns) {
  if (max_columns < 1) throw InvalidArgument("compress_factor: max_columns < 1");
  if (factor.cols() <= max_columns) return factor;
  Eigen::JacobiSVD<Matrix> svd(factor, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  std::vector<Index> order(static_cast<std::size_t>(sv.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return sv(a) > sv(b); });
  const Index keep = std::min<Index>(max_columns, sv.size());
  Matrix out(factor.rows(), keep);
  for (Index k = 0; k < keep; ++k) {
    out.col(k) = svd.matrixU().col(order[k]) * sv(order[k]);
  }
  return out;
}

GaussianDensity translate(const GaussianDensity& entity,
                          const GaussianDensity& relation, FactorLimit limit) {
  require_same_dim(entity.dim(), relation.dim(), "translate");
  return GaussianDensity(
      entity.mean + relation.mean,
      compress_factor(concat_columns(entity.factor, relation.factor),
                      resolve_limit(limit, entity.dim())),
      entity.jitter + relation.jitter);
}

GaussianDensity product(const GaussianDensity& lhs, const GaussianDensity& rhs,
                        FactorLimit limit, std::string_view lhs_id,
                        std::string_view rhs_id) {
  require_same_dim(lhs.dim(), rhs.dim(), "product");
  const Matrix p1 = precision(lhs);
  const Matrix p2 = precision(rhs);
  const Matrix p3 = p1 + p2;
  const Vector b = p1 * lhs.mean + p2 * rhs.mean;
  Eigen::LLT<Matrix> llt(p3);
  if (llt.info() != Eigen::Success) {
    throw NumericError("product(" + std::string(lhs_id) + ", " +
                       std::string(rhs_id) +
                       "): summed precision is not positive definite");
  }
  Vector mean = llt.solve(b);
  if (!mean.allFinite()) {
    throw NumericError("product(" + std::string(lhs_id) + ", " +
                       std::string(rhs_id) + "): non-finite solve result");
  }
  return GaussianDensity(
      std::move(mean),
      compress_factor(concat_columns(lhs.factor, rhs.factor),
                      resolve_limit(limit, lhs.dim())),
      lhs.jitter + rhs.jitter);
}

GaussianMixture mixture_union(std::span<const GaussianMixture> inputs,
                              const AggregatorParams& params) {
  std::vector<GaussianDensity> comps;
  for (const auto& m : inputs) {
    for (const auto& c : m.components) {
      if (!comps.empty()) require_same_dim(c.dim(), comps.front().dim(), "union");
      comps.push_back(c);
    }
  }
  if (comps.empty()) throw InvalidArgument("union: no components");
  Vector w = aggregate_weights(comps, params);
  return GaussianMixture(std::move(comps), std::move(w));
}

GaussianMixture mixture_translate(const GaussianMixture& mixture,
                                  const GaussianDensity& relation,
                                  const AggregatorParams& params,
                                  FactorLimit limit) {
  std::vector<GaussianDensity> comps;
  comps.reserve(mixture.size());
  for (const auto& c : mixture.components) {
    comps.push_back(translate(c, relation, limit));
  }
  Vector w = aggregate_weights(comps, params);
  return GaussianMixture(std::move(comps), std::move(w));
}

GaussianMixture mixture_intersect(const GaussianMixture& mixture,
                                  const GaussianDensity& density,
                                  const AggregatorParams& params,
                                  FactorLimit limit) {
  std::vector<GaussianDensity> comps;
  comps.reserve(mixture.size());
  for (std::size_t i = 0; i < mixture.size(); ++i) {
    comps.push_back(product(density, mixture.components[i], limit, "density",
                            "component " + std::to_string(i)));
  }
  Vector w = aggregate_weights(comps, params);
  return GaussianMixture(std::move(comps), std::move(w));
}

GaussianMixture mixture_intersect(const GaussianMixture& lhs,
                                  const GaussianMixture& rhs,
                                  const AggregatorParams& params,
                                  FactorLimit limit) {
  std::vector<GaussianDensity> comps;
  comps.reserve(lhs.size() * rhs.size());
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    for (std::size_t j = 0; j < rhs.size(); ++j) {
      comps.push_back(product(lhs.components[i], rhs.components[j], limit,
                              "lhs component " + std::to_string(i),
                              "rhs component " + std::to_string(j)));
    }
  }
  Vector w = aggregate_weights(comps, params);
  return GaussianMixture(std::move(comps), std::move(w));
}

double mixture_distance(const Vector& candidate_mean,
                        const GaussianMixture& mixture) {
  double total = 0.0;
  for (std::size_t i = 0; i < mixture.size(); ++i) {
    total += mixture.weights(static_cast<Index>(i)) *
             mahalanobis(candidate_mean, mixture.components[i]);
  }
  return total;
}

std::vector<std::size_t> cap_components(GaussianMixture& mixture,
                                        std::size_t max_components) {
  std::vector<std::size_t> idx(mixture.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (max_components == 0 || mixture.size() <= max_components) return idx;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return mixture.weights(static_cast<Index>(a)) >
           mixture.weights(static_cast<Index>(b));
  });
  idx.resize(max_components);
  std::sort(idx.begin(), idx.end());
  std::vector<GaussianDensity> comps;
  Vector w(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    comps.push_back(std::move(mixture.components[idx[k]]));
    w(static_cast<Index>(k)) = mixture.weights(static_cast<Index>(idx[k]));
  }
  w /= w.sum();
  mixture.components = std::move(comps);
  mixture.weights = std::move(w);
  return idx;
}

}  // namespace gkg
