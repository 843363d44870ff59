#include "gkg/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <thread>

#include "gkg/error.hpp"

namespace gkg {

namespace {

bool contains(std::span<const EntityId> sorted, EntityId e) {
  return std::binary_search(sorted.begin(), sorted.end(), e);
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

std::vector<double> candidate_distances(const GaussianMixture& query,
                                        const EmbeddingTable& table) {
  const auto n = table.entities.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t c = 0; c < query.size(); ++c) {
    const auto& comp = query.components[c];
    const double w = query.weights(static_cast<Index>(c));
    const Matrix p = precision(comp);
    for (std::size_t e = 0; e < n; ++e) {
      const Vector delta = comp.mean - table.entities[e].mean;
      out[e] += w * delta.dot(p * delta);
    }
  }
  return out;
}

std::vector<RankedEntity> rank_with_distances(const QueryDag& dag,
                                              const EmbeddingTable& table,
                                              std::span<const EntityId> filter,
                                              const CompileOptions& options) {
  const auto dist = candidate_distances(compile(dag, table, options), table);
  std::vector<RankedEntity> out;
  out.reserve(dist.size());
  for (std::size_t e = 0; e < dist.size(); ++e) {
    const auto id = static_cast<EntityId>(e);
    if (!filter.empty() && contains(filter, id)) continue;
    out.push_back({id, dist[e]});
  }
  std::sort(out.begin(), out.end(), [](const RankedEntity& a, const RankedEntity& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
  });
  return out;
}

std::vector<EntityId> rank_candidates(const QueryDag& dag, const EmbeddingTable& table,
                                      std::span<const EntityId> filter,
                                      const CompileOptions& options) {
  const auto ranked = rank_with_distances(dag, table, filter, options);
  std::vector<EntityId> ids(ranked.size());
  std::transform(ranked.begin(), ranked.end(), ids.begin(),
                 [](const RankedEntity& r) { return r.id; });
  return ids;
}

double hits_at_k(std::span<const EntityId> ranked, std::span<const EntityId> answers,
                 std::size_t k) {
  if (ranked.empty()) throw InvalidArgument("hits_at_k: empty ranking");
  if (k < 1 || k > ranked.size()) {
    throw InvalidArgument("hits_at_k: K must be in [1, " +
                          std::to_string(ranked.size()) + "]");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += contains(answers, ranked[i]) ? 1 : 0;
  return double(hits) / double(k);
}

double mrr(std::span<const EntityId> ranked, std::span<const EntityId> answers,
           std::optional<std::size_t> n) {
  const std::size_t len = n.value_or(ranked.size());
  if (len < 1) throw InvalidArgument("mrr: prefix length must be >= 1");
  double total = 0.0;
  for (std::size_t i = 0; i < std::min(len, ranked.size()); ++i) {
    if (contains(answers, ranked[i])) total += 1.0 / double(i + 1);
  }
  return total / double(len);
}

std::vector<std::size_t> filtered_ranks(std::span<const double> distances,
                                        std::span<const EntityId> all_answers,
                                        std::span<const EntityId> hard_answers) {
  std::vector<std::size_t> ranks;
  ranks.reserve(hard_answers.size());
  for (auto a : hard_answers) {
    const double da = distances[static_cast<std::size_t>(a)];
    std::size_t better = 0;
    for (std::size_t e = 0; e < distances.size(); ++e) {
      const auto id = static_cast<EntityId>(e);
      if (contains(all_answers, id)) continue;
      if (distances[e] < da || (distances[e] == da && id < a)) ++better;
    }
    ranks.push_back(better + 1);
  }
  return ranks;
}

TypeMetrics evaluate_sample(const QuerySample& sample, const EmbeddingTable& table,
                            const EvalConfig& config) {
  TypeMetrics m;
  m.count = 1;
  if (!config.filtered) {
    const auto ranked = rank_candidates(sample.dag, table, {}, config.compile);
    auto hk = [&](std::size_t k) {
      return hits_at_k(ranked, sample.answers, std::min(k, ranked.size()));
    };
    m.hits1 = hk(1);
    m.hits3 = hk(3);
    m.hits10 = hk(10);
    m.mrr = mrr(ranked, sample.answers, config.mrr_prefix);
    return m;
  }
  const auto dist =
      candidate_distances(compile(sample.dag, table, config.compile), table);
  std::vector<EntityId> hard;
  std::set_difference(sample.answers.begin(), sample.answers.end(),
                      sample.easy_answers.begin(), sample.easy_answers.end(),
                      std::back_inserter(hard));
  if (hard.empty()) hard = sample.answers;
  const auto ranks = filtered_ranks(dist, sample.answers, hard);
  for (auto r : ranks) {
    m.hits1 += r <= 1 ? 1.0 : 0.0;
    m.hits3 += r <= 3 ? 1.0 : 0.0;
    m.hits10 += r <= 10 ? 1.0 : 0.0;
    m.mrr += 1.0 / double(r);
  }
  const double n = double(ranks.size());
  m.hits1 /= n;
  m.hits3 /= n;
  m.hits10 /= n;
  m.mrr /= n;
  return m;
}

EvalReport evaluate(const EmbeddingTable& table,
                    const std::vector<QuerySample>& workload,
                    const EvalConfig& config) {
  std::vector<TypeMetrics> per_sample(workload.size());
  parallel_for(workload.size(), config.threads, [&](std::size_t i) {
    per_sample[i] = evaluate_sample(workload[i], table, config);
  });

  EvalReport report;
  report.filtered = config.filtered;
  for (std::size_t i = 0; i < workload.size(); ++i) {
    const auto type = workload[i].dag.type ? workload[i].dag.type : classify(workload[i].dag);
    if (!type) continue;
    auto& t = report.per_type[*type];
    t.hits1 += per_sample[i].hits1;
    t.hits3 += per_sample[i].hits3;
    t.hits10 += per_sample[i].hits10;
    t.mrr += per_sample[i].mrr;
    t.count += 1;
  }
  for (auto& [type, t] : report.per_type) {
    const double n = double(t.count);
    t.hits1 /= n;
    t.hits3 /= n;
    t.hits10 /= n;
    t.mrr /= n;
    report.average.hits1 += t.hits1;
    report.average.hits3 += t.hits3;
    report.average.hits10 += t.hits10;
    report.average.mrr += t.mrr;
    report.average.count += t.count;
  }
  if (!report.per_type.empty()) {
    const double types = double(report.per_type.size());
    report.average.hits1 /= types;
    report.average.hits3 /= types;
    report.average.hits10 /= types;
    report.average.mrr /= types;
  }
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  auto row = [](const TypeMetrics& m) {
    return nlohmann::json{{"hits@1", m.hits1}, {"hits@3", m.hits3},
                          {"hits@10", m.hits10}, {"mrr", m.mrr},
                          {"count", m.count}};
  };
  nlohmann::json j;
  j["metric_mode"] = report.filtered ? "filtered" : "verbatim";
  j["average_convention"] = "unweighted mean over query types";
  nlohmann::json types = nlohmann::json::object();
  for (const auto& [type, m] : report.per_type) types[std::string(to_string(type))] = row(m);
  j["types"] = types;
  j["avg"] = row(report.average);
  return j;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << "# metrics: " << (report.filtered ? "filtered per-answer" : "verbatim")
      << "; Avg = unweighted mean over query types\n";
  char buf[64];
  out << "metric  ";
  for (const auto& [type, m] : report.per_type) {
    std::snprintf(buf, sizeof buf, "%8s", std::string(to_string(type)).c_str());
    out << buf;
  }
  out << "     Avg\n";
  auto line = [&](const char* name, auto get) {
    std::snprintf(buf, sizeof buf, "%-8s", name);
    out << buf;
    for (const auto& [type, m] : report.per_type) {
      std::snprintf(buf, sizeof buf, "%8.4f", get(m));
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%8.4f", get(report.average));
    out << buf << '\n';
  };
  line("HITS@1", [](const TypeMetrics& m) { return m.hits1; });
  line("HITS@3", [](const TypeMetrics& m) { return m.hits3; });
  line("HITS@10", [](const TypeMetrics& m) { return m.hits10; });
  line("MRR", [](const TypeMetrics& m) { return m.mrr; });
  out << "count   ";
  for (const auto& [type, m] : report.per_type) {
    std::snprintf(buf, sizeof buf, "%8zu", m.count);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%8zu", report.average.count);
  out << buf << '\n';
  return out.str();
}

}  // namespace gkg
