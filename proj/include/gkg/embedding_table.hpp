#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "gkg/aggregator.hpp"
#include "gkg/gaussian.hpp"
#include "gkg/knowledge_graph.hpp"

namespace gkg {

/// Every learnable parameter of the model.
struct EmbeddingTable {
  Index dim = 0;
  Index rank = 0;
  double jitter = kDefaultJitter;
  std::vector<GaussianDensity> entities;
  std::vector<GaussianDensity> relations;
  AggregatorParams aggregator;

  const GaussianDensity& entity(EntityId id) const;
  const GaussianDensity& relation(RelationId id) const;

  /// Number of scalar parameters, aggregator included.
  std::size_t parameter_count() const;

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b);
};

/// Means uniform in [-0.5/sqrt(d), 0.5/sqrt(d)], factor entries normal with
/// standard deviation 1/sqrt(d*r). Deterministic per seed.
EmbeddingTable init_embeddings(std::size_t entity_count, std::size_t relation_count,
                               Index dim, Index rank, double jitter,
                               AggregatorMode mode, std::uint64_t seed);

struct ParamGrad {
  Vector mean;
  Matrix factor;
};

/// Sparse gradient over the table: only touched entities and relations have
/// entries. Ordered maps keep reductions deterministic.
struct TableGradient {
  std::map<EntityId, ParamGrad> entities;
  std::map<RelationId, ParamGrad> relations;
  Vector aggregator;

  void add_entity(EntityId id, const Vector& mean, const Matrix* factor);
  void add_relation(RelationId id, const Vector& mean, const Matrix& factor);
  void add_aggregator(const Vector& g);
  TableGradient& operator+=(const TableGradient& other);
  TableGradient& operator*=(double scale);
};

}  // namespace gkg
