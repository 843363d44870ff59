#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gkg/gaussian.hpp"
#include "gkg/gradients.hpp"

namespace gkg {

enum class AggregatorMode { Attention, Average, Scorer };

std::string_view to_string(AggregatorMode mode);
/// Accepts "attention", "average", and "mlp" / "scorer".
AggregatorMode parse_aggregator_mode(std::string_view text);

/// Parameters of the mixture weighting function.
///
/// Every component is summarised by the feature vector
///
///   [ mean ; upper triangle of its precision, row-major ]
///
/// of length d + d(d+1)/2. The precision is used instead of the raw factor
/// because composite components carry factors of varying width and a factor is
/// only defined up to an orthogonal rotation; the precision is canonical.
///
///   attention: score = w . f + b
///   scorer:    score = v . tanh(W f + c) + b   (hidden width 2d)
///   average:   no parameters, uniform weights
///
/// Weights are the softmax of the per-component scores.
struct AggregatorParams {
  AggregatorMode mode = AggregatorMode::Attention;
  Index dim = 0;
  Vector theta;

  AggregatorParams() = default;
  AggregatorParams(AggregatorMode mode_, Index dim_);

  static Index feature_size(Index dim) { return dim + dim * (dim + 1) / 2; }
  static Index hidden_size(Index dim) { return 2 * dim; }
  static Index parameter_count(AggregatorMode mode, Index dim);
};

/// Small random initialisation; attention starts near uniform weights.
AggregatorParams init_aggregator(AggregatorMode mode, Index dim,
                                 std::uint64_t seed);

Vector component_features(const GaussianDensity& density);

double component_score(const AggregatorParams& params, const Vector& features);

/// Softmax weights over the components. Never empty for non-empty input.
Vector aggregate_weights(std::span<const GaussianDensity> components,
                         const AggregatorParams& params);

struct WeightsBackward {
  Vector theta;
  std::vector<DensityGrad> components;
};

/// Pulls a gradient on the weight vector back to the aggregator parameters and
/// to each component's (mean, precision).
WeightsBackward aggregate_weights_backward(
    std::span<const GaussianDensity> components, const AggregatorParams& params,
    const Vector& weight_grad);

}  // namespace gkg
