#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gkg/gaussian.hpp"

namespace gkg {

/// Something to draw: an entity density or a compiled query mixture.
struct VizItem {
  std::string label;
  std::string kind;
  GaussianMixture mixture;
};

/// Orthonormal 2-D principal axes of a point set.
struct Projection {
  Vector center;
  Matrix axes;  // d x 2, orthonormal columns
  Eigen::Vector2d variance;
};

Projection principal_axes(std::span<const Vector> points);

struct VizRow {
  std::string label;
  std::string kind;
  std::size_t component = 0;
  double weight = 1.0;
  Eigen::Vector2d mean;
  /// Pseudo-inverse of the projected precision axes^T P axes.
  Eigen::Matrix2d covariance;
};

struct VizExport {
  Projection projection;
  std::vector<VizRow> rows;
};

/// Projects every component mean onto the principal axes of all component
/// means. Needs at least two items and d >= 2.
VizExport export_viz(std::span<const VizItem> items);

void write_viz_csv(const VizExport& viz, std::ostream& out);
nlohmann::json to_json(const VizExport& viz);

}  // namespace gkg
