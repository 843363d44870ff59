#include "gkg/embedding_table.hpp"

#include <cmath>
#include <random>
#include <string>

#include "gkg/error.hpp"

namespace gkg {

namespace {

bool same(const GaussianDensity& a, const GaussianDensity& b) {
  return a.jitter == b.jitter && a.mean.size() == b.mean.size() &&
         a.factor.rows() == b.factor.rows() && a.factor.cols() == b.factor.cols() &&
         a.mean == b.mean && a.factor == b.factor;
}

}  // namespace

const GaussianDensity& EmbeddingTable::entity(EntityId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= entities.size()) {
    throw InvalidArgument("no embedding for entity " + std::to_string(id));
  }
  return entities[static_cast<std::size_t>(id)];
}

const GaussianDensity& EmbeddingTable::relation(RelationId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= relations.size()) {
    throw InvalidArgument("no embedding for relation " + std::to_string(id));
  }
  return relations[static_cast<std::size_t>(id)];
}

std::size_t EmbeddingTable::parameter_count() const {
  const auto per = static_cast<std::size_t>(dim * (rank + 1));
  return per * (entities.size() + relations.size()) +
         static_cast<std::size_t>(aggregator.theta.size());
}

bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
  if (a.dim != b.dim || a.rank != b.rank || a.jitter != b.jitter ||
      a.entities.size() != b.entities.size() ||
      a.relations.size() != b.relations.size() ||
      a.aggregator.mode != b.aggregator.mode ||
      a.aggregator.theta.size() != b.aggregator.theta.size() ||
      a.aggregator.theta != b.aggregator.theta) {
    return false;
  }
  for (std::size_t i = 0; i < a.entities.size(); ++i) {
    if (!same(a.entities[i], b.entities[i])) return false;
  }
  for (std::size_t i = 0; i < a.relations.size(); ++i) {
    if (!same(a.relations[i], b.relations[i])) return false;
  }
  return true;
}

EmbeddingTable init_embeddings(std::size_t entity_count, std::size_t relation_count,
                               Index dim, Index rank, double jitter,
                               AggregatorMode mode, std::uint64_t seed) {
  if (dim < 1 || rank < 1 || rank > dim) {
    throw InvalidArgument("init_embeddings: need 1 <= rank <= dim");
  }
  if (!(jitter > 0.0)) throw InvalidArgument("init_embeddings: jitter must be > 0");
  EmbeddingTable table;
  table.dim = dim;
  table.rank = rank;
  table.jitter = jitter;
  std::mt19937_64 rng(seed);
  const double bound = 0.5 / std::sqrt(double(dim));
  std::uniform_real_distribution<double> mean_dist(-bound, bound);
  std::normal_distribution<double> factor_dist(0.0, 1.0 / std::sqrt(double(dim * rank)));
  auto draw = [&] {
    Vector mean(dim);
    for (Index i = 0; i < dim; ++i) mean(i) = mean_dist(rng);
    Matrix factor(dim, rank);
    for (Index c = 0; c < rank; ++c) {
      for (Index r = 0; r < dim; ++r) factor(r, c) = factor_dist(rng);
    }
    return GaussianDensity(std::move(mean), std::move(factor), jitter);
  };
  table.entities.reserve(entity_count);
  for (std::size_t i = 0; i < entity_count; ++i) table.entities.push_back(draw());
  table.relations.reserve(relation_count);
  for (std::size_t i = 0; i < relation_count; ++i) table.relations.push_back(draw());
  table.aggregator = init_aggregator(mode, dim, seed ^ 0xA66E6A70ull);
  return table;
}

void TableGradient::add_entity(EntityId id, const Vector& mean, const Matrix* factor) {
  auto& g = entities[id];
  if (g.mean.size() == 0) g.mean = Vector::Zero(mean.size());
  g.mean += mean;
  if (factor) {
    // Entities touched only as candidates keep an empty factor gradient.
    if (g.factor.size() == 0) g.factor = Matrix::Zero(factor->rows(), factor->cols());
    g.factor += *factor;
  }
}

void TableGradient::add_relation(RelationId id, const Vector& mean,
                                 const Matrix& factor) {
  auto& g = relations[id];
  if (g.mean.size() == 0) {
    g.mean = Vector::Zero(mean.size());
    g.factor = Matrix::Zero(factor.rows(), factor.cols());
  }
  g.mean += mean;
  g.factor += factor;
}

void TableGradient::add_aggregator(const Vector& g) {
  if (aggregator.size() == 0) aggregator = Vector::Zero(g.size());
  aggregator += g;
}

TableGradient& TableGradient::operator+=(const TableGradient& other) {
  for (const auto& [id, g] : other.entities) {
    add_entity(id, g.mean, g.factor.size() ? &g.factor : nullptr);
  }
  for (const auto& [id, g] : other.relations) add_relation(id, g.mean, g.factor);
  if (other.aggregator.size()) add_aggregator(other.aggregator);
  return *this;
}

TableGradient& TableGradient::operator*=(double scale) {
  for (auto& [id, g] : entities) {
    g.mean *= scale;
    g.factor *= scale;
  }
  for (auto& [id, g] : relations) {
    g.mean *= scale;
    g.factor *= scale;
  }
  aggregator *= scale;
  return *this;
}

}  // namespace gkg
