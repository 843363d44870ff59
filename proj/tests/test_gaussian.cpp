#include <gtest/gtest.h>

#include <random>

#include "gkg/aggregator.hpp"
#include "gkg/error.hpp"
#include "gkg/gaussian.hpp"
#include "oracles.hpp"

using namespace gkg;

namespace {

GaussianDensity iso(Vector mean, double precision_scale) {
  const auto d = mean.size();
  return {std::move(mean), Matrix::Zero(d, 1), precision_scale};
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

AggregatorParams average(Index d) { return AggregatorParams(AggregatorMode::Average, d); }

}  // namespace

TEST(Precision, IdentityFactor) {
  GaussianDensity g(Vector::Zero(2), Matrix::Identity(2, 2), 0.001);
  EXPECT_TRUE(precision(g).isApprox(1.001 * Matrix::Identity(2, 2), 1e-15));
}

TEST(Precision, ZeroFactor) {
  GaussianDensity g(Vector::Zero(3), Matrix::Zero(3, 2), 0.001);
  EXPECT_TRUE(precision(g).isApprox(0.001 * Matrix::Identity(3, 3), 1e-15));
}

TEST(Precision, MatchesDenseProduct) {
  std::mt19937_64 rng(3);
  const Matrix f = oracle::random_matrix(rng, 4, 2);
  Matrix dense = Matrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      for (int k = 0; k < 2; ++k) dense(i, j) += f(i, k) * f(j, k);
      if (i == j) dense(i, j) += 1e-3;
    }
  const Matrix p = precision(GaussianDensity(Vector::Zero(4), f, 1e-3));
  EXPECT_LT((p - dense).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(p, p.transpose());
}

TEST(Precision, RejectsNonFinite) {
  GaussianDensity g(Vector::Zero(2), Matrix::Identity(2, 2), 0.001);
  g.factor(0, 1) = std::nan("");
  EXPECT_THROW(precision(g), NumericError);
  EXPECT_FALSE(is_well_formed(g));
}

TEST(Mahalanobis, Examples) {
  EXPECT_DOUBLE_EQ(mahalanobis(vec({1, 2}), iso(vec({1, 2}), 1.0)), 0.0);
  EXPECT_DOUBLE_EQ(mahalanobis(vec({0, 0}), iso(vec({3, 4}), 1.0)), 25.0);
  GaussianDensity diag(vec({1, 2}), Matrix::Zero(2, 1), 0.0);
  diag.factor.resize(2, 2);
  diag.factor << std::sqrt(2.0), 0, 0, std::sqrt(0.5);
  EXPECT_NEAR(mahalanobis(vec({0, 0}), diag), 4.0, 1e-12);
  EXPECT_THROW(mahalanobis(vec({0, 0, 0}), diag), InvalidArgument);
}

TEST(Translate, Examples) {
  const auto e = iso(vec({1, 1}), 1.0);
  const auto r = iso(vec({2, -1}), 1.0);
  const auto t = translate(e, r);
  EXPECT_EQ(t.mean, vec({3, 0}));
  EXPECT_TRUE(precision(t).isApprox(2 * Matrix::Identity(2, 2), 1e-12));
  EXPECT_EQ(translate(e, iso(Vector::Zero(2), 1.0)).mean, e.mean);
  EXPECT_THROW(translate(e, iso(Vector::Zero(3), 1.0)), InvalidArgument);
}

TEST(Translate, PrecisionsAdd) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto a = oracle::random_density(rng, 5, 3);
    const auto b = oracle::random_density(rng, 5, 4);
    const auto t = translate(a, b);
    EXPECT_LT((precision(t) - precision(a) - precision(b)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(t.columns(), 5);
  }
}

TEST(Product, UnivariateExamples) {
  const auto p = product(iso(vec({0}), 1.0), iso(vec({2}), 1.0));
  EXPECT_NEAR(p.mean(0), 1.0, 1e-12);
  EXPECT_NEAR(1.0 / precision(p)(0, 0), 0.5, 1e-12);
  const auto q = product(iso(vec({0}), 1.0), iso(vec({4}), 3.0));
  EXPECT_NEAR(q.mean(0), 3.0, 1e-12);

  const auto oracle_pq = oracle::integrate_product(0, 1, 2, 1);
  EXPECT_NEAR(oracle_pq.mean, 1.0, 1e-6);
  EXPECT_NEAR(oracle_pq.variance, 0.5, 1e-6);
  EXPECT_NEAR(oracle::integrate_product(0, 1, 4, 1.0 / 3).mean, 3.0, 1e-6);
}

TEST(Product, SelfProductDoublesPrecision) {
  std::mt19937_64 rng(5);
  const auto g = oracle::random_density(rng, 4, 2);
  const auto p = product(g, g);
  EXPECT_TRUE(p.mean.isApprox(g.mean, 1e-10));
  EXPECT_LT((precision(p) - 2 * precision(g)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Product, Commutative) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const auto a = oracle::random_density(rng, 4, 2);
    const auto b = oracle::random_density(rng, 4, 3);
    const auto ab = product(a, b);
    const auto ba = product(b, a);
    EXPECT_LT((ab.mean - ba.mean).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((precision(ab) - precision(ba)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Product, MeanSolvesNormalEquations) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) {
    const auto a = oracle::random_density(rng, 5, 2);
    const auto b = oracle::random_density(rng, 5, 2);
    const auto p = product(a, b);
    const Vector rhs = precision(a) * a.mean + precision(b) * b.mean;
    EXPECT_LE((precision(p) * p.mean - rhs).norm(), 1e-8 * rhs.norm());
  }
}

TEST(Product, NonPositiveDefiniteNamesOperands) {
  const auto a = iso(vec({0, 0}), 0.0);
  try {
    product(a, a, {}, "node 3", "node 4");
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("node 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("node 4"), std::string::npos);
  }
}

TEST(CompressFactor, KeepsPrecisionWhenLossless) {
  std::mt19937_64 rng(2);
  const Matrix f = oracle::random_matrix(rng, 4, 9);
  const Matrix g = compress_factor(f, 4);
  EXPECT_EQ(g.cols(), 4);
  EXPECT_LT((g * g.transpose() - f * f.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_EQ(compress_factor(f, 12), f);
}

TEST(CompressFactor, TruncationKeepsLargestDirections) {
  Matrix f = Matrix::Zero(3, 3);
  f(0, 0) = 1.0;
  f(1, 1) = 3.0;
  f(2, 2) = 2.0;
  const Matrix g = compress_factor(f, 2);
  const Matrix p = g * g.transpose();
  EXPECT_NEAR(p(1, 1), 9.0, 1e-12);
  EXPECT_NEAR(p(2, 2), 4.0, 1e-12);
  EXPECT_NEAR(p(0, 0), 0.0, 1e-12);
}

TEST(MixtureUnion, AverageWeights) {
  const auto g = as_mixture(iso(vec({0, 0}), 1.0));
  const auto h = as_mixture(iso(vec({1, 0}), 1.0));
  const std::vector<GaussianMixture> in{g, h};
  const auto u = mixture_union(in, average(2));
  ASSERT_EQ(u.size(), 2u);
  EXPECT_EQ(u.components[0].mean, g.components[0].mean);
  EXPECT_EQ(u.components[1].mean, h.components[0].mean);
  EXPECT_DOUBLE_EQ(u.weights(0), 0.5);
  EXPECT_DOUBLE_EQ(u.weights(1), 0.5);
}

TEST(MixtureUnion, ConcatenatesAndRenormalises) {
  std::mt19937_64 rng(4);
  const auto params = init_aggregator(AggregatorMode::Attention, 3, 9);
  const auto one = as_mixture(oracle::random_density(rng, 3, 2));
  const std::vector<GaussianMixture> pair{as_mixture(oracle::random_density(rng, 3, 2)),
                                          as_mixture(oracle::random_density(rng, 3, 2))};
  const auto two = mixture_union(pair, params);
  const std::vector<GaussianMixture> in{one, two};
  const auto u = mixture_union(in, params);
  EXPECT_EQ(u.size(), 3u);
  EXPECT_NEAR(u.weights.sum(), 1.0, 1e-12);
  validate(u);

  const std::vector<GaussianMixture> same{one, one};
  const auto s = mixture_union(same, params);
  EXPECT_NEAR(s.weights(0), 0.5, 1e-15);
  EXPECT_NEAR(s.weights(1), 0.5, 1e-15);
}

TEST(MixtureTranslate, ShiftsEveryComponent) {
  const std::vector<GaussianMixture> in{as_mixture(iso(vec({0, 0}), 1.0)),
                                        as_mixture(iso(vec({2, 3}), 2.0))};
  const auto m = mixture_union(in, average(2));
  const auto t = mixture_translate(m, iso(vec({1, 0}), 1.0), average(2));
  EXPECT_EQ(t.components[0].mean, vec({1, 0}));
  EXPECT_EQ(t.components[1].mean, vec({3, 3}));
  const auto zero = mixture_translate(m, iso(vec({0, 0}), 1.0), average(2));
  EXPECT_EQ(zero.components[1].mean, m.components[1].mean);
}

TEST(MixtureOps, SingleComponentDegeneracy) {
  std::mt19937_64 rng(13);
  const auto params = init_aggregator(AggregatorMode::Scorer, 4, 1);
  const auto g = oracle::random_density(rng, 4, 2);
  const auto r = oracle::random_density(rng, 4, 2);
  const auto t = mixture_translate(as_mixture(g), r, params);
  const auto direct = translate(g, r);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.weights(0), 1.0);
  EXPECT_EQ(t.components[0].mean, direct.mean);
  EXPECT_EQ(precision(t.components[0]), precision(direct));
  const auto i = mixture_intersect(as_mixture(g), r, params);
  const auto p = product(r, g);
  EXPECT_EQ(i.components[0].mean, p.mean);
  const Vector c = oracle::random_vector(rng, 4);
  EXPECT_DOUBLE_EQ(mixture_distance(c, as_mixture(g)), mahalanobis(c, g));
}

TEST(MixtureIntersect, FlatDensityBarelyMoves) {
  const double eps = 1e-9;
  const auto flat = iso(vec({5, -5}), eps);
  const std::vector<GaussianMixture> in{as_mixture(iso(vec({0, 0}), 1.0)),
                                        as_mixture(iso(vec({1, 2}), 1.0))};
  const auto m = mixture_union(in, average(2));
  const auto out = mixture_intersect(m, flat, average(2));
  for (std::size_t k = 0; k < 2; ++k) {
    // Dense oracle: mean = (P m + eps I mu) / (1 + eps) for unit precision.
    const Vector expected = (m.components[k].mean + eps * flat.mean) / (1.0 + eps);
    EXPECT_LT((out.components[k].mean - expected).norm(), 10 * eps);
    EXPECT_LT((out.components[k].mean - m.components[k].mean).norm(),
              10 * eps * (flat.mean - m.components[k].mean).norm());
  }
}

TEST(MixtureIntersect, IdenticalComponentsStayIdentical) {
  std::mt19937_64 rng(17);
  const auto params = init_aggregator(AggregatorMode::Attention, 3, 4);
  const auto g = as_mixture(oracle::random_density(rng, 3, 2));
  const std::vector<GaussianMixture> in{g, g};
  const auto m = mixture_union(in, params);
  const auto out = mixture_intersect(m, oracle::random_density(rng, 3, 2), params);
  EXPECT_EQ(out.components[0].mean, out.components[1].mean);
  EXPECT_NEAR(out.weights(0), 0.5, 1e-15);
}

TEST(MixtureIntersect, PairwiseDistribution) {
  std::mt19937_64 rng(19);
  const auto params = average(3);
  std::vector<GaussianMixture> a{as_mixture(oracle::random_density(rng, 3, 2)),
                                 as_mixture(oracle::random_density(rng, 3, 2))};
  std::vector<GaussianMixture> b{as_mixture(oracle::random_density(rng, 3, 2)),
                                 as_mixture(oracle::random_density(rng, 3, 2)),
                                 as_mixture(oracle::random_density(rng, 3, 2))};
  const auto ma = mixture_union(a, params);
  const auto mb = mixture_union(b, params);
  const auto out = mixture_intersect(ma, mb, params);
  ASSERT_EQ(out.size(), 6u);
  const auto p12 = product(ma.components[1], mb.components[2]);
  EXPECT_TRUE(out.components[5].mean.isApprox(p12.mean, 1e-12));
}

TEST(MixtureDistance, WeightedSum) {
  std::vector<GaussianDensity> comps{iso(vec({0, 0}), 2.0), iso(vec({0, 0}), 4.0)};
  Vector w(2);
  w << 0.5, 0.5;
  const GaussianMixture m(comps, w);
  // Candidate at unit distance: per-component distances 2 and 4.
  EXPECT_DOUBLE_EQ(mixture_distance(vec({1, 0}), m), 3.0);
  EXPECT_DOUBLE_EQ(mixture_distance(vec({0, 0}), as_mixture(comps[0])), 0.0);
}

TEST(MixtureDistance, PermutationInvariant) {
  std::mt19937_64 rng(23);
  std::vector<GaussianDensity> comps;
  for (int i = 0; i < 4; ++i) comps.push_back(oracle::random_density(rng, 3, 2));
  Vector w(4);
  w << 0.1, 0.2, 0.3, 0.4;
  const GaussianMixture m(comps, w);
  std::vector<GaussianDensity> rev(comps.rbegin(), comps.rend());
  const GaussianMixture mr(rev, w.reverse());
  const Vector c = oracle::random_vector(rng, 3);
  EXPECT_NEAR(mixture_distance(c, m), mixture_distance(c, mr), 1e-12);
}

TEST(CapComponents, KeepsHeaviestAndRenormalises) {
  std::vector<GaussianDensity> comps;
  for (int i = 0; i < 4; ++i) comps.push_back(iso(vec({double(i)}), 1.0));
  Vector w(4);
  w << 0.1, 0.4, 0.1, 0.4;
  GaussianMixture m(comps, w);
  const auto kept = cap_components(m, 3);
  EXPECT_EQ(kept, (std::vector<std::size_t>{0, 1, 3}));
  EXPECT_NEAR(m.weights.sum(), 1.0, 1e-15);
  EXPECT_NEAR(m.weights(0), 0.1 / 0.9, 1e-15);
}

TEST(Validate, RejectsBadMixtures) {
  std::vector<GaussianDensity> comps{iso(vec({0}), 1.0), iso(vec({1}), 1.0)};
  Vector w(2);
  w << 0.7, 0.7;
  EXPECT_THROW(validate(GaussianMixture(comps, w)), NumericError);
  w << 1.0, 0.0;
  EXPECT_THROW(validate(GaussianMixture(comps, w)), NumericError);
}
