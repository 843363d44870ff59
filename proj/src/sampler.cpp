#include "gkg/sampler.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <json.hpp>

#include "gkg/error.hpp"

namespace gkg {

namespace {

using Rng = std::mt19937_64;

template <typename T>
const T& pick(std::span<const T> items, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
  return items[dist(rng)];
}

class BackwardWalker {
 public:
  BackwardWalker(const Adjacency& adj, Rng& rng) : adj_(adj), rng_(rng) {}

  // Chain of `length` translations ending at `target`. Appends the anchor and
  // the relations innermost first.
  bool chain(EntityId target, int length, std::vector<EntityId>& anchors,
             std::vector<RelationId>& rels) {
    std::vector<RelationId> walked;
    EntityId node = target;
    for (int i = 0; i < length; ++i) {
      const auto in = adj_.incoming(node);
      if (in.empty()) return false;
      const auto [head, rel] = pick(in, rng_);
      walked.push_back(rel);
      node = head;
    }
    anchors.push_back(node);
    rels.insert(rels.end(), walked.rbegin(), walked.rend());
    return true;
  }

  // `k` distinct single-hop branches into `target`.
  bool branches(EntityId target, std::size_t k, std::vector<EntityId>& anchors,
                std::vector<RelationId>& rels) {
    const auto in = adj_.incoming(target);
    if (in.size() < k) return false;
    std::vector<std::size_t> idx(in.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> dist(i, idx.size() - 1);
      std::swap(idx[i], idx[dist(rng_)]);
      anchors.push_back(in[idx[i]].first);
      rels.push_back(in[idx[i]].second);
    }
    return true;
  }

  bool step_back(EntityId target, EntityId& head, RelationId& rel) {
    const auto in = adj_.incoming(target);
    if (in.empty()) return false;
    std::tie(head, rel) = pick(in, rng_);
    return true;
  }

 private:
  const Adjacency& adj_;
  Rng& rng_;
};

std::optional<QueryDag> build_candidate(QueryType type, EntityId target,
                                        BackwardWalker& walk) {
  std::vector<EntityId> anchors;
  std::vector<RelationId> rels;
  bool ok = false;
  switch (type) {
    case QueryType::T1: ok = walk.chain(target, 1, anchors, rels); break;
    case QueryType::T2: ok = walk.chain(target, 2, anchors, rels); break;
    case QueryType::T3: ok = walk.chain(target, 3, anchors, rels); break;
    case QueryType::I2:
    case QueryType::U2: ok = walk.branches(target, 2, anchors, rels); break;
    case QueryType::I3: ok = walk.branches(target, 3, anchors, rels); break;
    case QueryType::IT:
    case QueryType::UT: {
      EntityId mid;
      RelationId last;
      ok = walk.step_back(target, mid, last) && walk.branches(mid, 2, anchors, rels);
      rels.push_back(last);
      break;
    }
    case QueryType::TI:
      ok = walk.chain(target, 2, anchors, rels) && walk.chain(target, 1, anchors, rels);
      break;
  }
  if (!ok) return std::nullopt;
  return make_query(type, anchors, rels);
}

}  // namespace

std::vector<QuerySample> sample_queries(const KnowledgeGraph& kg, QueryType type,
                                        std::size_t count, std::uint64_t seed,
                                        const SampleOptions& options) {
  if (count < 1) throw InvalidArgument("sample_queries: count must be >= 1");
  const Adjacency adj = kg.adjacency(options.mask);
  std::optional<Adjacency> easy_adj;
  if (options.easy_mask) easy_adj = kg.adjacency(*options.easy_mask);

  std::vector<EntityId> targets;
  for (std::size_t e = 0; e < kg.entity_count(); ++e) {
    if (!adj.incoming(static_cast<EntityId>(e)).empty()) {
      targets.push_back(static_cast<EntityId>(e));
    }
  }

  Rng rng(seed ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(type) + 1)));
  BackwardWalker walk(adj, rng);
  std::vector<QuerySample> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    bool done = false;
    for (int attempt = 0; attempt < options.max_retries && !done; ++attempt) {
      if (targets.empty()) break;
      const EntityId target = pick(std::span<const EntityId>(targets), rng);
      auto dag = build_candidate(type, target, walk);
      if (!dag) continue;
      QuerySample s;
      s.answers = enumerate_answers(*dag, adj);
      if (s.answers.empty()) continue;
      if (easy_adj) {
        s.easy_answers = enumerate_answers(*dag, *easy_adj);
        std::vector<EntityId> hard;
        std::set_difference(s.answers.begin(), s.answers.end(),
                            s.easy_answers.begin(), s.easy_answers.end(),
                            std::back_inserter(hard));
        if (hard.empty()) continue;
      }
      s.dag = std::move(*dag);
      out.push_back(std::move(s));
      done = true;
    }
    if (!done) {
      throw UnsatisfiableQuery("cannot sample a " + std::string(to_string(type)) +
                               " query after " +
                               std::to_string(options.max_retries) + " attempts");
    }
  }
  return out;
}

void write_workload(const std::vector<QuerySample>& samples,
                    const KnowledgeGraph& kg, std::ostream& out) {
  for (const auto& s : samples) {
    const auto type = s.dag.type ? s.dag.type : classify(s.dag);
    nlohmann::json j;
    j["type"] = type ? std::string(to_string(*type)) : std::string("custom");
    j["query"] = serialize_query(s.dag, kg.entities(), kg.relations());
    j["answers"] = s.answers;
    if (!s.easy_answers.empty()) j["easy"] = s.easy_answers;
    if (!s.hard_negatives.empty()) j["hard_negatives"] = s.hard_negatives;
    out << j.dump() << '\n';
  }
}

void write_workload(const std::vector<QuerySample>& samples,
                    const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_workload(samples, kg, out);
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<QuerySample> read_workload(std::istream& in, const KnowledgeGraph& kg,
                                       const std::string& source) {
  std::vector<QuerySample> out;
  std::string line;
  std::size_t line_no = 0;
  auto ids = [&](const nlohmann::json& j, const char* key) {
    std::vector<EntityId> v;
    if (!j.contains(key)) return v;
    v = j.at(key).get<std::vector<EntityId>>();
    for (auto e : v) kg.check_entity(e);
    if (!std::is_sorted(v.begin(), v.end())) std::sort(v.begin(), v.end());
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = source + ":" + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      QuerySample s;
      s.dag = parse_query(j.at("query").get<std::string>(), kg.entities(),
                          kg.relations());
      const auto tag = j.at("type").get<std::string>();
      if (tag != "custom") s.dag.type = parse_query_type(tag);
      validate(s.dag, kg);
      s.answers = ids(j, "answers");
      s.easy_answers = ids(j, "easy");
      s.hard_negatives = ids(j, "hard_negatives");
      if (s.answers.empty()) throw FormatError("record has no answers");
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + e.what());
    } catch (const Error& e) {
      throw FormatError(where + e.what());
    }
  }
  return out;
}

std::vector<QuerySample> read_workload(const std::filesystem::path& path,
                                       const KnowledgeGraph& kg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_workload(in, kg, path.string());
}

}  // namespace gkg
