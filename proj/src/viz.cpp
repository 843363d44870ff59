#include "gkg/viz.hpp"

#include <ostream>

#include "gkg/error.hpp"

namespace gkg {

Projection principal_axes(std::span<const Vector> points) {
  if (points.size() < 2) throw InvalidArgument("projection needs at least two points");
  const Index d = points.front().size();
  if (d < 2) throw InvalidArgument("projection needs dimension >= 2");
  Matrix x(static_cast<Index>(points.size()), d);
  for (std::size_t i = 0; i < points.size(); ++i) x.row(static_cast<Index>(i)) = points[i];
  Projection p;
  p.center = x.colwise().mean();
  x.rowwise() -= p.center.transpose();
  // Pad with zero rows so the thin V always has at least two columns.
  if (x.rows() < 2) x.conservativeResize(2, Eigen::NoChange);
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinV);
  p.axes = svd.matrixV().leftCols(2);
  for (Index k = 0; k < 2; ++k) {
    Index arg;
    p.axes.col(k).cwiseAbs().maxCoeff(&arg);
    if (p.axes(arg, k) < 0) p.axes.col(k) *= -1.0;
    const double s = k < svd.singularValues().size() ? svd.singularValues()(k) : 0.0;
    p.variance(k) = s * s / double(points.size());
  }
  return p;
}

VizExport export_viz(std::span<const VizItem> items) {
  if (items.size() < 2) throw InvalidArgument("visualisation export needs at least two items");
  std::vector<Vector> means;
  for (const auto& item : items) {
    validate(item.mixture);
    for (const auto& c : item.mixture.components) means.push_back(c.mean);
  }
  VizExport out;
  out.projection = principal_axes(means);
  const auto& axes = out.projection.axes;
  for (const auto& item : items) {
    for (std::size_t i = 0; i < item.mixture.size(); ++i) {
      const auto& c = item.mixture.components[i];
      VizRow row;
      row.label = item.label;
      row.kind = item.kind;
      row.component = i;
      row.weight = item.mixture.weights(static_cast<Index>(i));
      row.mean = axes.transpose() * (c.mean - out.projection.center);
      const Eigen::Matrix2d projected = axes.transpose() * precision(c) * axes;
      row.covariance = projected.completeOrthogonalDecomposition().pseudoInverse();
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

void write_viz_csv(const VizExport& viz, std::ostream& out) {
  out << "label,kind,component,weight,x,y,cov_xx,cov_xy,cov_yy\n";
  out.precision(10);
  for (const auto& r : viz.rows) {
    out << r.label << ',' << r.kind << ',' << r.component << ',' << r.weight << ','
        << r.mean.x() << ',' << r.mean.y() << ',' << r.covariance(0, 0) << ','
        << r.covariance(0, 1) << ',' << r.covariance(1, 1) << '\n';
  }
}

nlohmann::json to_json(const VizExport& viz) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : viz.rows) {
    rows.push_back({{"label", r.label},
                    {"kind", r.kind},
                    {"component", r.component},
                    {"weight", r.weight},
                    {"mean", {r.mean.x(), r.mean.y()}},
                    {"covariance",
                     {{r.covariance(0, 0), r.covariance(0, 1)},
                      {r.covariance(1, 0), r.covariance(1, 1)}}}});
  }
  const auto& a = viz.projection.axes;
  nlohmann::json axes = nlohmann::json::array();
  for (Index k = 0; k < a.cols(); ++k) {
    axes.push_back(std::vector<double>(a.col(k).data(), a.col(k).data() + a.rows()));
  }
  return {{"axes", axes},
          {"explained_variance", {viz.projection.variance(0), viz.projection.variance(1)}},
          {"rows", rows}};
}

}  // namespace gkg
