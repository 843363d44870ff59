#include "gkg/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "gkg/error.hpp"

namespace gkg {

KnowledgeGraph make_planted_graph(const PlantedGraphOptions& o) {
  if (o.cluster_size < 1 || o.entities < 2 * o.cluster_size || o.relations < 1) {
    throw InvalidArgument("planted graph: need at least two clusters and one relation");
  }
  const std::size_t clusters = o.entities / o.cluster_size;
  std::mt19937_64 rng(o.seed);
  KnowledgeGraph kg;
  for (std::size_t e = 0; e < clusters * o.cluster_size; ++e) {
    kg.add_entity("c" + std::to_string(e / o.cluster_size) + "_e" +
                  std::to_string(e % o.cluster_size));
  }
  std::vector<Triple> triples;
  for (std::size_t r = 0; r < o.relations; ++r) {
    const auto rel = kg.add_relation("shift" + std::to_string(r));
    const std::size_t offset = 1 + r % (clusters - 1);
    std::vector<std::size_t> sources(clusters - offset);
    std::iota(sources.begin(), sources.end(), std::size_t{0});
    std::shuffle(sources.begin(), sources.end(), rng);
    sources.resize(std::min(sources.size(), o.sources_per_relation));
    std::sort(sources.begin(), sources.end());
    for (auto c : sources) {
      for (std::size_t i = 0; i < o.cluster_size; ++i) {
        for (std::size_t j = 0; j < o.cluster_size; ++j) {
          triples.push_back({static_cast<EntityId>(c * o.cluster_size + i), rel,
                             static_cast<EntityId>((c + offset) * o.cluster_size + j)});
        }
      }
    }
  }
  std::shuffle(triples.begin(), triples.end(), rng);
  const auto n = triples.size();
  const auto n_valid = static_cast<std::size_t>(double(n) * o.valid_fraction);
  const auto n_test = static_cast<std::size_t>(double(n) * o.test_fraction);
  for (std::size_t i = 0; i < n; ++i) {
    const Split s = i < n_valid ? Split::Valid
                    : i < n_valid + n_test ? Split::Test
                                           : Split::Train;
    kg.add_triple(s, triples[i]);
  }
  return kg;
}

}  // namespace gkg
