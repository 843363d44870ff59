#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gkg/knowledge_graph.hpp"

namespace gkg {

/// The nine query shapes of the benchmark protocol.
///
///   1t, 2t, 3t   translation chains of length 1..3
///   2i, 3i       intersection of 2 or 3 single translations
///   2u           union of 2 single translations
///   it           translation of a 2i
///   ti           intersection of a 2-chain and a single translation
///   ut           translation of a 2u
enum class QueryType { T1, T2, T3, I2, I3, U2, IT, TI, UT };

inline constexpr QueryType kAllQueryTypes[] = {
    QueryType::T1, QueryType::T2, QueryType::T3, QueryType::I2, QueryType::I3,
    QueryType::U2, QueryType::IT, QueryType::TI, QueryType::UT};

std::string_view to_string(QueryType type);
/// Accepts the ASCII tags above and the set-symbol spellings (2∩, ∪t, ...).
QueryType parse_query_type(std::string_view text);
/// Comma separated list of tags, or "all".
std::vector<QueryType> parse_query_types(std::string_view text);

enum class NodeKind { Anchor, Translate, Intersect, Union };

struct QueryNode {
  NodeKind kind = NodeKind::Anchor;
  /// Entity id for anchors, relation id for translations, unused otherwise.
  std::int32_t id = -1;
  std::vector<std::size_t> children;

  friend bool operator==(const QueryNode&, const QueryNode&) = default;
};

/// A first-order existential query as a tree of operators rooted at `root`.
struct QueryDag {
  std::vector<QueryNode> nodes;
  std::size_t root = 0;
  std::optional<QueryType> type;

  std::size_t add_anchor(EntityId entity);
  std::size_t add_translate(std::size_t child, RelationId relation);
  std::size_t add_intersect(std::vector<std::size_t> children);
  std::size_t add_union(std::vector<std::size_t> children);

  friend bool operator==(const QueryDag&, const QueryDag&) = default;
};

/// Builds the canonical DAG of a shape. `anchors` and `relations` are consumed
/// left to right in serialization order.
QueryDag make_query(QueryType type, std::span<const EntityId> anchors,
                    std::span<const RelationId> relations);

/// Structural shape of the DAG, or nullopt if it matches none of the nine.
std::optional<QueryType> classify(const QueryDag& dag);

/// Throws InvalidArgument if the DAG is not a tree of well-formed operators
/// with anchor leaves, or if `type` disagrees with classify().
void validate(const QueryDag& dag);
/// As above, plus every id must be inside the graph's vocabularies.
void validate(const QueryDag& dag, const KnowledgeGraph& kg);

/// Text form:
///   ANCHOR    := name
///   TRANSLATE := "(" expr relname ")"
///   INTERSECT := "(" expr ("&" expr)+ ")"
///   UNION     := "(" expr ("|" expr)+ ")"
/// Errors carry the byte offset of the offending token.
QueryDag parse_query(std::string_view text, const Vocabulary& entities,
                     const Vocabulary& relations);
std::string serialize_query(const QueryDag& dag, const Vocabulary& entities,
                            const Vocabulary& relations);

/// Exact answer set by set semantics over the adjacency: anchors are
/// singletons, translations follow edges, intersections and unions combine
/// child sets. Sorted and duplicate-free.
std::vector<EntityId> enumerate_answers(const QueryDag& dag, const Adjacency& adj);
std::vector<EntityId> enumerate_answers(const QueryDag& dag,
                                        const KnowledgeGraph& kg, SplitMask mask);

/// Answers of the subtree rooted at `node`.
std::vector<EntityId> enumerate_answers_at(const QueryDag& dag, std::size_t node,
                                           const Adjacency& adj);

}  // namespace gkg
