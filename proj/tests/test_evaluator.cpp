#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "gkg/error.hpp"
#include "gkg/evaluator.hpp"

using namespace gkg;

namespace {

// Entities on the x axis at their id, identity relation, unit precision.
EmbeddingTable line_table(int n) {
  auto t = init_embeddings(n, 1, 2, 1, 0.5, AggregatorMode::Attention, 1);
  for (int i = 0; i < n; ++i) {
    t.entities[i] = GaussianDensity(Vector::Zero(2), Matrix::Zero(2, 1), 0.5);
    t.entities[i].mean(0) = i;
  }
  t.relations[0] = GaussianDensity(Vector::Zero(2), Matrix::Zero(2, 1), 0.5);
  return t;
}

QuerySample one_hop(EntityId anchor, std::vector<EntityId> answers,
                    std::vector<EntityId> easy = {}) {
  QuerySample s;
  const std::vector<EntityId> a{anchor};
  const std::vector<RelationId> r{0};
  s.dag = make_query(QueryType::T1, a, r);
  s.answers = std::move(answers);
  s.easy_answers = std::move(easy);
  return s;
}

}  // namespace

TEST(HitsAtK, Examples) {
  const std::vector<EntityId> ranked{4, 7, 2, 9};
  const std::vector<EntityId> answers{2, 4};
  EXPECT_DOUBLE_EQ(hits_at_k(ranked, answers, 3), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(hits_at_k(ranked, answers, 1), 1.0);
  EXPECT_DOUBLE_EQ(hits_at_k(ranked, {}, 3), 0.0);
  const std::vector<EntityId> all{2, 4, 7, 9};
  EXPECT_DOUBLE_EQ(hits_at_k(ranked, all, 4), 1.0);
}

TEST(HitsAtK, RejectsBadK) {
  const std::vector<EntityId> ranked{0, 1};
  const std::vector<EntityId> answers{0};
  EXPECT_THROW(hits_at_k(ranked, answers, 0), InvalidArgument);
  EXPECT_THROW(hits_at_k(ranked, answers, 3), InvalidArgument);
  EXPECT_THROW(hits_at_k({}, answers, 1), InvalidArgument);
}

TEST(Mrr, Examples) {
  const std::vector<EntityId> ranked{5, 3};
  EXPECT_DOUBLE_EQ(mrr(ranked, std::vector<EntityId>{5}, 1), 1.0);
  EXPECT_DOUBLE_EQ(mrr(ranked, std::vector<EntityId>{3, 5}, 2), 0.75);
  EXPECT_DOUBLE_EQ(mrr(ranked, std::vector<EntityId>{1}, 2), 0.0);
  EXPECT_THROW(mrr(ranked, std::vector<EntityId>{5}, 0), InvalidArgument);
}

TEST(Metrics, PerfectRankingClosedForm) {
  std::vector<EntityId> ranked(50);
  std::iota(ranked.begin(), ranked.end(), 0);
  for (std::size_t a : {1u, 2u, 3u, 7u, 20u}) {
    std::vector<EntityId> answers(ranked.begin(), ranked.begin() + a);
    for (std::size_t k : {1u, 3u, 10u}) {
      EXPECT_DOUBLE_EQ(hits_at_k(ranked, answers, k), std::min(1.0, double(a) / double(k)));
    }
  }
}

TEST(Metrics, BoundsAndMonotoneInAnswers) {
  std::mt19937_64 rng(3);
  std::vector<EntityId> ranked(40);
  std::iota(ranked.begin(), ranked.end(), 0);
  for (int trial = 0; trial < 50; ++trial) {
    std::shuffle(ranked.begin(), ranked.end(), rng);
    std::vector<EntityId> answers;
    for (EntityId e = 0; e < 40; ++e)
      if (rng() % 4 == 0) answers.push_back(e);
    auto more = answers;
    for (EntityId e = 0; e < 40; ++e)
      if (rng() % 4 == 0) more.push_back(e);
    std::sort(more.begin(), more.end());
    more.erase(std::unique(more.begin(), more.end()), more.end());
    for (std::size_t k : {1u, 3u, 10u}) {
      const double h = hits_at_k(ranked, answers, k);
      EXPECT_GE(h, 0.0);
      EXPECT_LE(h, 1.0);
      EXPECT_LE(h, hits_at_k(ranked, more, k));
    }
    EXPECT_LE(mrr(ranked, answers), mrr(ranked, more));
  }
}

TEST(Metrics, RandomRankingMonteCarlo) {
  const int n = 1000;
  const int trials = 20000;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<EntityId> ranked(n);
  std::iota(ranked.begin(), ranked.end(), 0);
  double verbatim = 0, conventional = 0;
  for (int t = 0; t < trials; ++t) {
    const std::vector<EntityId> answer{EntityId(rng() % n)};
    std::vector<double> dist(n);
    for (auto& x : dist) x = u(rng);
    std::sort(ranked.begin(), ranked.end(),
              [&](EntityId a, EntityId b) { return dist[a] < dist[b]; });
    verbatim += hits_at_k(ranked, answer, 10);
    conventional += filtered_ranks(dist, answer, answer)[0] <= 10 ? 1.0 : 0.0;
  }
  EXPECT_NEAR(conventional / trials, 0.01, 0.003);
  EXPECT_NEAR(verbatim / trials, 0.001, 0.0003);
}

TEST(Ranking, CandidateAtMeanIsFirstAndTiesByLowerId) {
  auto t = line_table(6);
  t.entities[4].mean(0) = 2.0;  // ties with entity 2
  const auto q = one_hop(0, {});
  const auto r = rank_with_distances(q.dag, t);
  ASSERT_EQ(r.size(), 6u);
  EXPECT_EQ(r[0].id, 0);
  EXPECT_DOUBLE_EQ(r[0].distance, 0.0);
  EXPECT_EQ(r[1].id, 1);
  EXPECT_EQ(r[2].id, 2);
  EXPECT_EQ(r[3].id, 4);
  EXPECT_EQ(r[4].id, 3);
  EXPECT_DOUBLE_EQ(r[2].distance, r[3].distance);
}

TEST(Ranking, FilterDropsEntities) {
  const auto t = line_table(5);
  const std::vector<EntityId> filter{0, 3};
  const auto r = rank_candidates(one_hop(0, {}).dag, t, filter);
  EXPECT_EQ(r, (std::vector<EntityId>{1, 2, 4}));
}

TEST(FilteredRanks, OtherAnswersDoNotCount) {
  const std::vector<double> dist{0.0, 1.0, 2.0, 3.0, 3.0};
  const std::vector<EntityId> all{0, 2, 4};
  const std::vector<EntityId> hard{2, 4};
  const auto ranks = filtered_ranks(dist, all, hard);
  EXPECT_EQ(ranks, (std::vector<std::size_t>{2, 3}));
}

TEST(EvaluateSample, Verbatim) {
  const auto t = line_table(12);
  const auto m = evaluate_sample(one_hop(0, {0, 2}), t, {});
  EXPECT_DOUBLE_EQ(m.hits1, 1.0);
  EXPECT_DOUBLE_EQ(m.hits3, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.hits10, 0.2);
  EXPECT_DOUBLE_EQ(m.mrr, (1.0 + 1.0 / 3.0) / 12.0);
}

TEST(EvaluateSample, FilteredRemovesEasyAnswers) {
  const auto t = line_table(12);
  EvalConfig cfg;
  cfg.filtered = true;
  const auto all = evaluate_sample(one_hop(0, {0, 2}), t, cfg);
  EXPECT_DOUBLE_EQ(all.hits1, 0.5);
  EXPECT_DOUBLE_EQ(all.hits3, 1.0);
  EXPECT_DOUBLE_EQ(all.mrr, 0.75);
  const auto hard = evaluate_sample(one_hop(0, {0, 2}, {0}), t, cfg);
  EXPECT_DOUBLE_EQ(hard.hits1, 0.0);
  EXPECT_DOUBLE_EQ(hard.hits3, 1.0);
  EXPECT_DOUBLE_EQ(hard.mrr, 0.5);
}

TEST(Evaluate, OmitsMissingTypesAndAveragesUnweighted) {
  const auto t = line_table(12);
  std::vector<QuerySample> w{one_hop(0, {0}), one_hop(0, {1}), one_hop(5, {5})};
  QuerySample u;
  const std::vector<EntityId> anchors{0, 11};
  const std::vector<RelationId> rels{0, 0};
  u.dag = make_query(QueryType::U2, anchors, rels);
  u.answers = {3};
  w.push_back(u);

  EvalConfig cfg;
  cfg.filtered = true;
  const auto report = evaluate(t, w, cfg);
  ASSERT_EQ(report.per_type.size(), 2u);
  EXPECT_EQ(report.per_type.count(QueryType::I2), 0u);
  const auto& t1 = report.per_type.at(QueryType::T1);
  EXPECT_EQ(t1.count, 3u);
  EXPECT_DOUBLE_EQ(t1.hits1, 2.0 / 3.0);
  const auto& u2 = report.per_type.at(QueryType::U2);
  EXPECT_EQ(u2.count, 1u);
  EXPECT_DOUBLE_EQ(report.average.hits1, (t1.hits1 + u2.hits1) / 2.0);
  EXPECT_DOUBLE_EQ(report.average.mrr, (t1.mrr + u2.mrr) / 2.0);

  const auto j = to_json(report);
  EXPECT_TRUE(j["types"].contains("1t"));
  EXPECT_TRUE(j["types"].contains("2u"));
  EXPECT_FALSE(j["types"].contains("2i"));
  EXPECT_EQ(j["metric_mode"], "filtered");
  EXPECT_NE(format_report(report).find("2u"), std::string::npos);
}

TEST(Evaluate, ThreadCountDoesNotChangeResults) {
  const auto t = line_table(12);
  std::vector<QuerySample> w;
  for (int i = 0; i < 12; ++i) w.push_back(one_hop(i, {EntityId((i + 1) % 12)}));
  EvalConfig one, four;
  four.threads = 4;
  const auto a = to_json(evaluate(t, w, one));
  const auto b = to_json(evaluate(t, w, four));
  EXPECT_EQ(a, b);
}
