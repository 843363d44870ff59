#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "gkg/knowledge_graph.hpp"
#include "gkg/query.hpp"

namespace gkg {

struct QuerySample {
  QueryDag dag;
  /// Answers on the sampling mask, sorted.
  std::vector<EntityId> answers;
  /// Answers already reachable on the easy mask (empty if none was given).
  std::vector<EntityId> easy_answers;
  std::vector<EntityId> hard_negatives;
};

struct SampleOptions {
  SplitMask mask = kTrainSplit;
  /// When set, each sample records the answers reachable on this mask as
  /// easy answers and must have at least one answer outside it.
  std::optional<SplitMask> easy_mask;
  int max_retries = 1000;
};

/// Draws `count` queries of one shape. Generation walks backwards from a
/// uniformly drawn target entity along uniformly drawn incoming edges, so a
/// sample that builds is non-empty by construction; candidates that cannot be
/// built (missing in-edges, not enough distinct branches, no hard answer) are
/// rejected. Deterministic for a given seed.
std::vector<QuerySample> sample_queries(const KnowledgeGraph& kg, QueryType type,
                                        std::size_t count, std::uint64_t seed,
                                        const SampleOptions& options = {});

/// One JSON object per line:
///   {"type": "2u", "query": "((a r) | (b s))", "answers": [..], "easy": [..]}
void write_workload(const std::vector<QuerySample>& samples,
                    const KnowledgeGraph& kg, std::ostream& out);
void write_workload(const std::vector<QuerySample>& samples,
                    const KnowledgeGraph& kg, const std::filesystem::path& path);
std::vector<QuerySample> read_workload(std::istream& in, const KnowledgeGraph& kg,
                                       const std::string& source = "workload");
std::vector<QuerySample> read_workload(const std::filesystem::path& path,
                                       const KnowledgeGraph& kg);

}  // namespace gkg
