#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "gkg/error.hpp"
#include "gkg/query.hpp"
#include "oracles.hpp"
#include "random_dag.hpp"

using namespace gkg;

namespace {

KnowledgeGraph toy(const std::string& text) {
  KnowledgeGraph kg;
  std::istringstream in(text);
  ingest_tsv_stream(kg, Split::Train, in, "toy");
  return kg;
}

std::vector<std::string> names(const KnowledgeGraph& kg, const std::vector<EntityId>& ids) {
  std::vector<std::string> out;
  for (auto id : ids) out.push_back(kg.entities().name(id));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EntityId> answers(const KnowledgeGraph& kg, const std::string& q) {
  return enumerate_answers(parse_query(q, kg.entities(), kg.relations()), kg, kAllSplits);
}

}  // namespace

TEST(Parse, Shapes) {
  const auto kg = toy("a\tr1\tx\nb\tr2\tx\n");
  const auto t1 = parse_query("(a r1)", kg.entities(), kg.relations());
  EXPECT_EQ(classify(t1), QueryType::T1);
  ASSERT_EQ(t1.nodes.size(), 2u);
  EXPECT_EQ(t1.nodes[t1.root].kind, NodeKind::Translate);
  const auto i2 = parse_query("((a r1) & (b r2))", kg.entities(), kg.relations());
  EXPECT_EQ(classify(i2), QueryType::I2);
  EXPECT_EQ(classify(parse_query("((a r1) | (b r2))", kg.entities(), kg.relations())),
            QueryType::U2);
  EXPECT_EQ(classify(parse_query("(((a r1) | (b r2)) r1)", kg.entities(), kg.relations())),
            QueryType::UT);
}

TEST(Parse, ErrorsCarryByteOffset) {
  const auto kg = toy("a\tr1\tx\n");
  try {
    parse_query("(a r1", kg.entities(), kg.relations());
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte 5"), std::string::npos) << e.what();
  }
  try {
    parse_query("(zz r1)", kg.entities(), kg.relations());
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte 1"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("zz"), std::string::npos);
  }
  EXPECT_THROW(parse_query("(a nope)", kg.entities(), kg.relations()), FormatError);
  EXPECT_THROW(parse_query("((a r1) & (a r1) | (a r1))", kg.entities(), kg.relations()),
               FormatError);
  EXPECT_THROW(parse_query("(a r1) x", kg.entities(), kg.relations()), FormatError);
}

TEST(Parse, CanonicalForm) {
  const auto kg = toy("a\tr1\tx\nb\tr2\tx\n");
  const auto dag = parse_query("  ( (a  r1)&(b r2) ) ", kg.entities(), kg.relations());
  EXPECT_EQ(serialize_query(dag, kg.entities(), kg.relations()), "((a r1) & (b r2))");
}

TEST(Parse, RoundTripRandomDags) {
  std::mt19937_64 rng(99);
  KnowledgeGraph kg;
  for (int e = 0; e < 20; ++e) kg.add_entity("e" + std::to_string(e));
  for (int r = 0; r < 5; ++r) kg.add_relation("r" + std::to_string(r));
  for (int i = 0; i < 100; ++i) {
    const auto dag = oracle::random_dag(rng, 4, 20, 5);
    validate(dag);
    const auto s = serialize_query(dag, kg.entities(), kg.relations());
    const auto back = parse_query(s, kg.entities(), kg.relations());
    EXPECT_EQ(serialize_query(back, kg.entities(), kg.relations()), s);
    EXPECT_EQ(classify(back), classify(dag));
  }
}

TEST(QueryTypes, ParseTags) {
  EXPECT_EQ(parse_query_type("2i"), QueryType::I2);
  EXPECT_EQ(parse_query_type("2∩"), QueryType::I2);
  EXPECT_EQ(parse_query_type("∪t"), QueryType::UT);
  EXPECT_EQ(parse_query_type("t∩"), QueryType::TI);
  EXPECT_EQ(parse_query_types("all").size(), 9u);
  EXPECT_EQ(parse_query_types("1t,2u"), (std::vector<QueryType>{QueryType::T1, QueryType::U2}));
  EXPECT_THROW(parse_query_type("4t"), InvalidArgument);
}

TEST(MakeQuery, EveryShapeClassifiesToItself) {
  const std::vector<EntityId> anchors{0, 1, 2};
  const std::vector<RelationId> rels{0, 1, 2, 3};
  for (auto t : kAllQueryTypes) {
    const auto dag = oracle::shape(t, anchors, rels);
    EXPECT_EQ(classify(dag), t) << to_string(t);
    EXPECT_NO_THROW(validate(dag));
  }
}

TEST(Validate, RejectsMalformed) {
  QueryDag dag;
  const auto a = dag.add_anchor(0);
  dag.add_intersect({a});
  EXPECT_THROW(validate(dag), InvalidArgument);

  QueryDag shared;
  const auto x = shared.add_anchor(0);
  const auto t = shared.add_translate(x, 0);
  shared.add_intersect({t, t});
  EXPECT_THROW(validate(shared), InvalidArgument);

  auto tagged = make_query(QueryType::T1, std::vector<EntityId>{0}, std::vector<RelationId>{0});
  tagged.type = QueryType::T2;
  EXPECT_THROW(validate(tagged), InvalidArgument);

  const auto kg = toy("a\tr\tb\n");
  auto out_of_range = make_query(QueryType::T1, std::vector<EntityId>{5}, std::vector<RelationId>{0});
  EXPECT_THROW(validate(out_of_range, kg), InvalidArgument);
}

TEST(Enumerate, Examples) {
  const auto kg = toy("a\tr\tb\na\tr\tc\n");
  EXPECT_EQ(names(kg, answers(kg, "(a r)")), (std::vector<std::string>{"b", "c"}));
  const auto kg2 = toy("a\tr1\tx\nb\tr2\tx\nb\tr2\ty\n");
  EXPECT_EQ(names(kg2, answers(kg2, "((a r1) & (b r2))")), (std::vector<std::string>{"x"}));
  EXPECT_EQ(names(kg2, answers(kg2, "((a r1) | (b r2))")), (std::vector<std::string>{"x", "y"}));
  EXPECT_TRUE(answers(kg2, "(x r1)").empty());
}

TEST(Enumerate, StructuralRecursionAndScanOracle) {
  std::mt19937_64 rng(1234);
  for (int g = 0; g < 10; ++g) {
    const auto kg = oracle::random_graph(rng, 30, 3, 300);
    const auto adj = kg.adjacency(kAllSplits);
    const auto triples = oracle::masked_triples(kg, kAllSplits);
    for (int q = 0; q < 20; ++q) {
      const auto dag = oracle::random_dag(rng, 4, 30, 3);
      for (std::size_t n = 0; n < dag.nodes.size(); ++n) {
        const auto got = enumerate_answers_at(dag, n, adj);
        const auto scan = oracle::scan_answers(dag, n, triples);
        EXPECT_EQ(got, std::vector<EntityId>(scan.begin(), scan.end()));
        const auto& node = dag.nodes[n];
        if (node.kind == NodeKind::Intersect || node.kind == NodeKind::Union) {
          std::vector<EntityId> acc = enumerate_answers_at(dag, node.children[0], adj);
          for (std::size_t c = 1; c < node.children.size(); ++c) {
            const auto part = enumerate_answers_at(dag, node.children[c], adj);
            std::vector<EntityId> next;
            if (node.kind == NodeKind::Intersect)
              std::set_intersection(acc.begin(), acc.end(), part.begin(), part.end(),
                                    std::back_inserter(next));
            else
              std::set_union(acc.begin(), acc.end(), part.begin(), part.end(),
                             std::back_inserter(next));
            acc = std::move(next);
          }
          EXPECT_EQ(got, acc);
        }
      }
    }
  }
}
