#pragma once

#include <cstdint>

#include "gkg/knowledge_graph.hpp"

namespace gkg {

/// Planted-structure graph for desk-scale experiments.
///
/// Entities are split into equally sized clusters laid out on a line. Each
/// relation r shifts a cluster by a fixed offset s_r: for a random subset of
/// source clusters c (with c + s_r in range), every member of c links to every
/// member of c + s_r. The structure is therefore consistent with a translation
/// model and every 1t query has a full cluster as its answer set. Triples are
/// split at random into train / valid / test.
struct PlantedGraphOptions {
  std::size_t entities = 200;
  std::size_t relations = 5;
  std::size_t cluster_size = 5;
  std::size_t sources_per_relation = 12;
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 7;
};

KnowledgeGraph make_planted_graph(const PlantedGraphOptions& options = {});

}  // namespace gkg
