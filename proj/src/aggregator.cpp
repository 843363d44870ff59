#include "gkg/aggregator.hpp"

#include <cmath>
#include <random>
#include <string>

#include "gkg/error.hpp"

namespace gkg {

namespace {

// Views into the flat parameter vector of a scorer-mode aggregator.
struct ScorerView {
  Eigen::Map<const Matrix> hidden_w;
  Eigen::Map<const Vector> hidden_b;
  Eigen::Map<const Vector> out_w;
  double out_b;

  ScorerView(const Vector& theta, Index dim)
      : hidden_w(theta.data(), AggregatorParams::hidden_size(dim),
                 AggregatorParams::feature_size(dim)),
        hidden_b(theta.data() + hidden_w.size(),
                 AggregatorParams::hidden_size(dim)),
        out_w(hidden_b.data() + hidden_b.size(),
              AggregatorParams::hidden_size(dim)),
        out_b(theta(theta.size() - 1)) {}
};

void check_shape(const AggregatorParams& params) {
  if (params.theta.size() != AggregatorParams::parameter_count(params.mode, params.dim)) {
    throw InvalidArgument("aggregator parameter vector has the wrong length");
  }
}

// Accumulates d score / d theta (scaled) and returns d score / d features.
Vector score_backward(const AggregatorParams& params, const Vector& features,
                      double scale, Vector& theta_grad) {
  const Index f = features.size();
  switch (params.mode) {
    case AggregatorMode::Average:
      return Vector::Zero(f);
    case AggregatorMode::Attention:
      theta_grad.head(f) += scale * features;
      theta_grad(f) += scale;
      return scale * params.theta.head(f);
    case AggregatorMode::Scorer: {
      const ScorerView view(params.theta, params.dim);
      const Index h = view.hidden_b.size();
      const Vector act = (view.hidden_w * features + view.hidden_b).array().tanh();
      const Vector dz =
          scale * (view.out_w.array() * (1.0 - act.array().square())).matrix();
      Eigen::Map<Matrix> gw(theta_grad.data(), h, f);
      gw.noalias() += dz * features.transpose();
      theta_grad.segment(h * f, h) += dz;
      theta_grad.segment(h * f + h, h) += scale * act;
      theta_grad(theta_grad.size() - 1) += scale;
      return view.hidden_w.transpose() * dz;
    }
  }
  return Vector::Zero(f);
}

}  // namespace

std::string_view to_string(AggregatorMode mode) {
  switch (mode) {
    case AggregatorMode::Attention: return "attention";
    case AggregatorMode::Average: return "average";
    case AggregatorMode::Scorer: return "mlp";
  }
  return "attention";
}

AggregatorMode parse_aggregator_mode(std::string_view text) {
  if (text == "attention") return AggregatorMode::Attention;
  if (text == "average") return AggregatorMode::Average;
  if (text == "mlp" || text == "scorer") return AggregatorMode::Scorer;
  throw InvalidArgument("unknown aggregator mode '" + std::string(text) +
                        "' (expected attention, average or mlp)");
}

Index AggregatorParams::parameter_count(AggregatorMode mode, Index dim) {
  const Index f = feature_size(dim);
  const Index h = hidden_size(dim);
  switch (mode) {
    case AggregatorMode::Average: return 0;
    case AggregatorMode::Attention: return f + 1;
    case AggregatorMode::Scorer: return h * f + h + h + 1;
  }
  return 0;
}

AggregatorParams::AggregatorParams(AggregatorMode mode_, Index dim_)
    : mode(mode_), dim(dim_), theta(Vector::Zero(parameter_count(mode_, dim_))) {}

AggregatorParams init_aggregator(AggregatorMode mode, Index dim,
                                 std::uint64_t seed) {
  AggregatorParams params(mode, dim);
  std::mt19937_64 rng(seed);
  const Index f = AggregatorParams::feature_size(dim);
  if (mode == AggregatorMode::Attention) {
    std::normal_distribution<double> small(0.0, 0.01);
    for (Index i = 0; i < f; ++i) params.theta(i) = small(rng);
  } else if (mode == AggregatorMode::Scorer) {
    const Index h = AggregatorParams::hidden_size(dim);
    std::normal_distribution<double> hidden(0.0, 1.0 / std::sqrt(double(f)));
    std::normal_distribution<double> small(0.0, 0.01);
    for (Index i = 0; i < h * f; ++i) params.theta(i) = hidden(rng);
    for (Index i = 0; i < h; ++i) params.theta(h * f + h + i) = small(rng);
  }
  return params;
}

Vector component_features(const GaussianDensity& density) {
  const Index d = density.dim();
  const Matrix p = precision(density);
  Vector f(AggregatorParams::feature_size(d));
  f.head(d) = density.mean;
  Index k = d;
  for (Index i = 0; i < d; ++i) {
    for (Index j = i; j < d; ++j) f(k++) = p(i, j);
  }
  return f;
}

double component_score(const AggregatorParams& params, const Vector& features) {
  check_shape(params);
  switch (params.mode) {
    case AggregatorMode::Average:
      return 0.0;
    case AggregatorMode::Attention: {
      const Index f = features.size();
      return params.theta.head(f).dot(features) + params.theta(f);
    }
    case AggregatorMode::Scorer: {
      const ScorerView view(params.theta, params.dim);
      const Vector act =
          (view.hidden_w * features + view.hidden_b).array().tanh();
      return view.out_w.dot(act) + view.out_b;
    }
  }
  return 0.0;
}

Vector aggregate_weights(std::span<const GaussianDensity> components,
                         const AggregatorParams& params) {
  if (components.empty()) throw InvalidArgument("aggregate_weights: no components");
  const auto n = static_cast<Index>(components.size());
  if (params.mode == AggregatorMode::Average) {
    return Vector::Constant(n, 1.0 / double(n));
  }
  if (params.dim != components.front().dim()) {
    throw InvalidArgument("aggregate_weights: aggregator dimension mismatch");
  }
  Vector scores(n);
  for (Index i = 0; i < n; ++i) {
    scores(i) = component_score(params, component_features(components[i]));
  }
  if (!scores.allFinite()) throw NumericError("aggregate_weights: non-finite score");
  Vector w = (scores.array() - scores.maxCoeff()).exp();
  w /= w.sum();
  return w;
}

WeightsBackward aggregate_weights_backward(
    std::span<const GaussianDensity> components, const AggregatorParams& params,
    const Vector& weight_grad) {
  const auto n = static_cast<Index>(components.size());
  const Index d = components.empty() ? params.dim : components.front().dim();
  WeightsBackward out;
  out.theta = Vector::Zero(params.theta.size());
  out.components.assign(components.size(), DensityGrad(d));
  if (params.mode == AggregatorMode::Average || n == 0) return out;

  const Vector w = aggregate_weights(components, params);
  const double mean_grad = w.dot(weight_grad);
  for (Index i = 0; i < n; ++i) {
    const double score_grad = w(i) * (weight_grad(i) - mean_grad);
    if (score_grad == 0.0) continue;
    const auto& comp = components[static_cast<std::size_t>(i)];
    const Vector gf =
        score_backward(params, component_features(comp), score_grad, out.theta);
    auto& g = out.components[static_cast<std::size_t>(i)];
    g.mean += gf.head(d);
    Index k = d;
    for (Index r = 0; r < d; ++r) {
      for (Index c = r; c < d; ++c) g.precision(r, c) += gf(k++);
    }
  }
  return out;
}

}  // namespace gkg
