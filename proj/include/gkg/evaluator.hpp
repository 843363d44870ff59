#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gkg/compile.hpp"
#include "gkg/embedding_table.hpp"
#include "gkg/knowledge_graph.hpp"
#include "gkg/sampler.hpp"

namespace gkg {

struct RankedEntity {
  EntityId id;
  double distance;
};

/// Mixture distance from every entity mean to the compiled query.
std::vector<double> candidate_distances(const GaussianMixture& query,
                                        const EmbeddingTable& table);

/// All entities ordered by ascending distance, ties by ascending id. Entities
/// listed in `filter` (sorted) are left out.
std::vector<RankedEntity> rank_with_distances(const QueryDag& dag,
                                              const EmbeddingTable& table,
                                              std::span<const EntityId> filter = {},
                                              const CompileOptions& options = {});
std::vector<EntityId> rank_candidates(const QueryDag& dag, const EmbeddingTable& table,
                                      std::span<const EntityId> filter = {},
                                      const CompileOptions& options = {});

/// (1/K) * #{k <= K : ranked[k] in answers}. `answers` must be sorted.
/// Requires 1 <= K <= ranked.size().
double hits_at_k(std::span<const EntityId> ranked, std::span<const EntityId> answers,
                 std::size_t k);

/// (1/n) * sum_{i <= n, ranked[i] in answers} 1/i. `answers` must be sorted;
/// n defaults to the full list length.
double mrr(std::span<const EntityId> ranked, std::span<const EntityId> answers,
           std::optional<std::size_t> n = std::nullopt);

/// Conventional filtered rank of each hard answer: one plus the number of
/// non-answer entities strictly closer (or equally close with a lower id).
std::vector<std::size_t> filtered_ranks(std::span<const double> distances,
                                        std::span<const EntityId> all_answers,
                                        std::span<const EntityId> hard_answers);

struct TypeMetrics {
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  double mrr = 0.0;
  std::size_t count = 0;
};

struct EvalReport {
  bool filtered = false;
  std::map<QueryType, TypeMetrics> per_type;
  /// Unweighted mean over the query types present.
  TypeMetrics average;
};

struct EvalConfig {
  /// false: the verbatim precision-at-K and prefix-averaged reciprocal rank
  /// over the unfiltered ranking against every answer.
  /// true: per hard answer filtered rank, HITS@K = [rank <= K], MRR = 1/rank.
  bool filtered = false;
  /// Prefix length for the verbatim MRR; defaults to the entity count.
  std::optional<std::size_t> mrr_prefix;
  CompileOptions compile;
  std::size_t threads = 1;
};

/// Per-query metrics; K is clamped to the ranking length.
TypeMetrics evaluate_sample(const QuerySample& sample, const EmbeddingTable& table,
                            const EvalConfig& config);

EvalReport evaluate(const EmbeddingTable& table,
                    const std::vector<QuerySample>& workload,
                    const EvalConfig& config = {});

nlohmann::json to_json(const EvalReport& report);
/// Aligned text table, one column per query type plus the average.
std::string format_report(const EvalReport& report);

}  // namespace gkg
