#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "gkg/error.hpp"
#include "gkg/sampler.hpp"
#include "gkg/synthetic.hpp"
#include "oracles.hpp"

using namespace gkg;

namespace {

KnowledgeGraph toy(const std::string& text) {
  KnowledgeGraph kg;
  std::istringstream in(text);
  ingest_tsv_stream(kg, Split::Train, in, "toy");
  return kg;
}

}  // namespace

TEST(Sample, AnswersMatchTraversal) {
  const auto kg = make_planted_graph();
  for (auto t : kAllQueryTypes) {
    const auto samples = sample_queries(kg, t, 30, 5);
    ASSERT_EQ(samples.size(), 30u);
    for (const auto& s : samples) {
      EXPECT_EQ(classify(s.dag), t);
      EXPECT_FALSE(s.answers.empty());
      EXPECT_EQ(s.answers, enumerate_answers(s.dag, kg, kTrainSplit));
    }
  }
}

TEST(Sample, Deterministic) {
  const auto kg = make_planted_graph();
  const auto a = sample_queries(kg, QueryType::IT, 20, 9);
  const auto b = sample_queries(kg, QueryType::IT, 20, 9);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].dag, b[i].dag);
    EXPECT_EQ(a[i].answers, b[i].answers);
  }
  const auto c = sample_queries(kg, QueryType::IT, 20, 10);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= !(a[i].dag == c[i].dag);
  EXPECT_TRUE(differs);
}

TEST(Sample, SoleHeadIsOnlyAnchor) {
  const auto kg = toy("a\tr\tb\na\tr\tc\n");
  for (const auto& s : sample_queries(kg, QueryType::T1, 20, 3)) {
    EXPECT_EQ(kg.entities().name(s.dag.nodes[0].id), "a");
  }
}

TEST(Sample, UnsatisfiableShape) {
  const auto kg = toy("a\tr\tb\nb\tr\tc\n");
  try {
    sample_queries(kg, QueryType::T3, 1, 1);
    FAIL();
  } catch (const UnsatisfiableQuery& e) {
    EXPECT_NE(std::string(e.what()).find("3t"), std::string::npos);
  }
}

TEST(Sample, HeldOutQueriesNeedHardAnswers) {
  const auto kg = make_planted_graph();
  SampleOptions opts;
  opts.mask = kAllSplits;
  opts.easy_mask = kTrainSplit;
  for (const auto& s : sample_queries(kg, QueryType::T1, 40, 2, opts)) {
    EXPECT_EQ(s.answers, enumerate_answers(s.dag, kg, kAllSplits));
    EXPECT_EQ(s.easy_answers, enumerate_answers(s.dag, kg, kTrainSplit));
    EXPECT_LT(s.easy_answers.size(), s.answers.size());
  }
}

TEST(Workload, RoundTrip) {
  const auto kg = make_planted_graph();
  SampleOptions opts;
  opts.mask = kAllSplits;
  opts.easy_mask = kTrainSplit;
  auto samples = sample_queries(kg, QueryType::UT, 15, 4, opts);
  std::stringstream buf;
  write_workload(samples, kg, buf);
  const auto back = read_workload(buf, kg);
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].dag.type, QueryType::UT);
    EXPECT_EQ(classify(back[i].dag), classify(samples[i].dag));
    EXPECT_EQ(back[i].answers, samples[i].answers);
    EXPECT_EQ(back[i].easy_answers, samples[i].easy_answers);
  }
}

TEST(Workload, BadLinesAreFormatErrors) {
  const auto kg = make_planted_graph();
  std::istringstream bad("{\"type\": \"1t\", \"query\": \"(c0_e0 shift0\", \"answers\": [1]}\n");
  try {
    read_workload(bad, kg, "w.jsonl");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("w.jsonl:1"), std::string::npos) << e.what();
  }
  std::istringstream garbage("not json\n");
  EXPECT_THROW(read_workload(garbage, kg), FormatError);
}

TEST(PlantedGraph, Shape) {
  const auto kg = make_planted_graph();
  EXPECT_EQ(kg.entity_count(), 200u);
  EXPECT_EQ(kg.relation_count(), 5u);
  EXPECT_EQ(kg.edge_count(), 1500u);
  EXPECT_EQ(kg.triples(Split::Valid).size(), 150u);
}
