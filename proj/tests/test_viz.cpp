#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "gkg/error.hpp"
#include "gkg/viz.hpp"
#include "oracles.hpp"

using namespace gkg;

TEST(Viz, TwoEntitiesGiveTwoRows) {
  std::mt19937_64 rng(1);
  std::vector<VizItem> items{{"a", "entity", as_mixture(oracle::random_density(rng, 4, 2))},
                             {"b", "entity", as_mixture(oracle::random_density(rng, 4, 2))}};
  const auto v = export_viz(items);
  ASSERT_EQ(v.rows.size(), 2u);
  EXPECT_EQ(v.rows[0].label, "a");
  const Matrix gram = v.projection.axes.transpose() * v.projection.axes;
  EXPECT_LT((gram - Matrix::Identity(2, 2)).norm(), 1e-12);
  // Two points: all the spread is on the first axis.
  const double gap = (items[0].mixture.components[0].mean - items[1].mixture.components[0].mean).norm();
  EXPECT_NEAR((v.rows[0].mean - v.rows[1].mean).norm(), gap, 1e-10);
  for (const auto& r : v.rows) {
    EXPECT_LT((r.covariance - r.covariance.transpose()).norm(), 1e-12);
    EXPECT_GT(r.covariance.determinant(), 0.0);
  }
}

TEST(Viz, UnionQueryGivesOneRowPerComponent) {
  std::mt19937_64 rng(2);
  GaussianMixture m({oracle::random_density(rng, 3, 2), oracle::random_density(rng, 3, 2)},
                    Vector::Constant(2, 0.5));
  std::vector<VizItem> items{{"q", "query", m},
                             {"e", "entity", as_mixture(oracle::random_density(rng, 3, 2))}};
  const auto v = export_viz(items);
  ASSERT_EQ(v.rows.size(), 3u);
  EXPECT_EQ(v.rows[0].component, 0u);
  EXPECT_EQ(v.rows[1].component, 1u);
  EXPECT_DOUBLE_EQ(v.rows[0].weight + v.rows[1].weight, 1.0);

  std::ostringstream csv;
  write_viz_csv(v, csv);
  const auto text = csv.str();
  EXPECT_EQ(text.rfind("label,kind,component,weight,x,y,cov_xx,cov_xy,cov_yy\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  const auto j = to_json(v);
  EXPECT_EQ(j["rows"].size(), 3u);
}

TEST(Viz, AxesMatchDenseEigendecomposition) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Index d = 5;
    std::vector<Vector> pts;
    for (int i = 0; i < 30; ++i) pts.push_back(oracle::random_vector(rng, d) * (1.0 + i % 3));
    const auto proj = principal_axes(pts);

    Vector c = Vector::Zero(d);
    for (const auto& p : pts) c += p;
    c /= double(pts.size());
    Matrix cov = Matrix::Zero(d, d);
    for (const auto& p : pts) cov += (p - c) * (p - c).transpose();
    cov /= double(pts.size());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Vector ev = eig.eigenvalues();
    EXPECT_NEAR(proj.variance(0), ev(d - 1), 1e-10);
    EXPECT_NEAR(proj.variance(1), ev(d - 2), 1e-10);
    // Same subspace as the top two eigenvectors.
    const Matrix top = eig.eigenvectors().rightCols(2);
    const Matrix p1 = proj.axes * proj.axes.transpose();
    const Matrix p2 = top * top.transpose();
    EXPECT_LT((p1 - p2).norm(), 1e-8);

    // No rank-2 projection leaves less residual.
    auto residual = [&](const Matrix& axes) {
      double s = 0;
      for (const auto& p : pts) s += ((p - c) - axes * axes.transpose() * (p - c)).squaredNorm();
      return s;
    };
    const double best = residual(proj.axes);
    for (int k = 0; k < 20; ++k) {
      Eigen::HouseholderQR<Matrix> qr(oracle::random_matrix(rng, d, 2));
      const Matrix q = qr.householderQ() * Matrix::Identity(d, 2);
      EXPECT_LE(best, residual(q) + 1e-9);
    }
  }
}

TEST(Viz, SignConvention) {
  std::mt19937_64 rng(4);
  std::vector<Vector> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(oracle::random_vector(rng, 3));
  const auto proj = principal_axes(pts);
  for (Index j = 0; j < 2; ++j) {
    Index arg;
    proj.axes.col(j).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(proj.axes(arg, j), 0.0);
  }
}

TEST(Viz, RejectsTooFewItems) {
  std::mt19937_64 rng(5);
  std::vector<VizItem> one{{"a", "entity", as_mixture(oracle::random_density(rng, 3, 2))}};
  EXPECT_THROW(export_viz(one), InvalidArgument);
  std::vector<Vector> pts{Vector::Zero(1), Vector::Ones(1)};
  EXPECT_THROW(principal_axes(pts), InvalidArgument);
}
