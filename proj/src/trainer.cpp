#include "gkg/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <thread>

#include "gkg/error.hpp"

namespace gkg {

namespace {

double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Distance of `candidate` to the mixture, accumulating its gradient (scaled
// by `upstream`) into the per-component and weight buffers. Returns the
// gradient on the candidate mean.
double distance_backward(const GaussianMixture& m, const std::vector<Matrix>& precisions,
                         const Vector& candidate, double upstream,
                         std::vector<DensityGrad>& comp_grads, Vector& weight_grad,
                         Vector& candidate_grad) {
  double total = 0.0;
  candidate_grad.setZero(candidate.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto w = m.weights(static_cast<Index>(i));
    const Vector delta = m.components[i].mean - candidate;
    const Vector pd = precisions[i] * delta;
    const double d = delta.dot(pd);
    total += w * d;
    weight_grad(static_cast<Index>(i)) += upstream * d;
    comp_grads[i].mean += (2.0 * upstream * w) * pd;
    comp_grads[i].precision.noalias() += (upstream * w) * delta * delta.transpose();
    candidate_grad -= (2.0 * upstream * w) * pd;
  }
  return total;
}

// Loss summed over the pairs of one sample, gradients unscaled.
LossResult sample_loss(const QuerySample& sample, std::span<const TrainingPair> pairs,
                       std::size_t sample_index, const EmbeddingTable& table,
                       const TrainConfig& config) {
  LossResult out;
  const auto compiled = compile_traced(sample.dag, table, config.compile);
  const auto& m = compiled.mixture();
  std::vector<Matrix> precisions;
  precisions.reserve(m.size());
  for (const auto& c : m.components) precisions.push_back(precision(c));
  std::vector<DensityGrad> comp_grads(m.size(), DensityGrad(m.dim()));
  Vector weight_grad = Vector::Zero(static_cast<Index>(m.size()));
  Vector cand_grad;

  for (const auto& pair : pairs) {
    const auto& pos = table.entity(pair.positive).mean;
    if (config.loss == LossKind::PositivesOnly) {
      const double d = distance_backward(m, precisions, pos, 1.0, comp_grads,
                                         weight_grad, cand_grad);
      out.value += d;
      out.grad.add_entity(pair.positive, cand_grad, nullptr);
      continue;
    }
    const double dp = mixture_distance(pos, m);
    double value = -log_sigmoid(config.margin - dp);
    distance_backward(m, precisions, pos, sigmoid(dp - config.margin), comp_grads,
                      weight_grad, cand_grad);
    out.grad.add_entity(pair.positive, cand_grad, nullptr);
    const double k = double(pair.negatives.size());
    for (auto neg : pair.negatives) {
      const auto& nm = table.entity(neg).mean;
      const double dn = mixture_distance(nm, m);
      value -= log_sigmoid(dn - config.margin) / k;
      distance_backward(m, precisions, nm, -sigmoid(config.margin - dn) / k,
                        comp_grads, weight_grad, cand_grad);
      out.grad.add_entity(neg, cand_grad, nullptr);
    }
    if (!std::isfinite(value)) {
      throw NumericError("sample " + std::to_string(sample_index) +
                         ": loss is not finite");
    }
    out.value += value;
  }
  if (!std::isfinite(out.value)) {
    throw NumericError("sample " + std::to_string(sample_index) + ": loss is not finite");
  }
  compiled.backward(comp_grads, weight_grad, table, out.grad);
  return out;
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.dim < 1) throw InvalidArgument("dim must be >= 1");
  if (c.rank < 1 || c.rank > c.dim) throw InvalidArgument("rank must be in [1, dim]");
  if (!(c.jitter > 0.0)) throw InvalidArgument("jitter must be > 0");
  if (!(c.margin > 0.0)) throw InvalidArgument("margin must be > 0");
  if (c.negatives < 1) throw InvalidArgument("negatives must be >= 1");
  if (c.batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (!(c.learning_rate >= 0.0)) throw InvalidArgument("learning rate must be >= 0");
  if (c.epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (c.types.empty()) throw InvalidArgument("no query types enabled");
  if (c.threads < 1) throw InvalidArgument("threads must be >= 1");
}

nlohmann::json to_json(const TrainConfig& c) {
  std::vector<std::string> types;
  for (auto t : c.types) types.emplace_back(to_string(t));
  return {
      {"dim", c.dim},
      {"rank", c.rank},
      {"jitter", c.jitter},
      {"lr", c.learning_rate},
      {"margin", c.margin},
      {"negatives", c.negatives},
      {"batch", c.batch_size},
      {"epochs", c.epochs},
      {"types", types},
      {"aggregator", std::string(to_string(c.aggregator))},
      {"seed", c.seed},
      {"optimizer", c.optimizer == OptimizerKind::Adam ? "adam" : "sgd"},
      {"loss", c.loss == LossKind::PositivesOnly ? "positives-only" : "negative-sampling"},
      {"patience", c.patience},
      {"valid_every", c.valid_every},
      {"threads", c.threads},
      {"filtered_metrics", c.filtered_metrics},
      {"max_components", c.compile.max_components},
      {"max_columns", c.compile.limit.max_columns},
  };
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  auto get = [&](const char* key, auto& dst) {
    if (j.contains(key)) j.at(key).get_to(dst);
  };
  get("dim", c.dim);
  get("rank", c.rank);
  get("jitter", c.jitter);
  get("lr", c.learning_rate);
  get("margin", c.margin);
  get("negatives", c.negatives);
  get("batch", c.batch_size);
  get("epochs", c.epochs);
  get("seed", c.seed);
  get("patience", c.patience);
  get("valid_every", c.valid_every);
  get("threads", c.threads);
  get("filtered_metrics", c.filtered_metrics);
  get("max_components", c.compile.max_components);
  get("max_columns", c.compile.limit.max_columns);
  if (j.contains("types")) {
    c.types.clear();
    for (const auto& t : j.at("types")) c.types.push_back(parse_query_type(t.get<std::string>()));
  }
  if (j.contains("aggregator")) {
    c.aggregator = parse_aggregator_mode(j.at("aggregator").get<std::string>());
  }
  if (j.contains("optimizer")) {
    const auto o = j.at("optimizer").get<std::string>();
    if (o == "sgd") c.optimizer = OptimizerKind::Sgd;
    else if (o == "adam") c.optimizer = OptimizerKind::Adam;
    else throw InvalidArgument("unknown optimizer '" + o + "'");
  }
  if (j.contains("loss")) {
    const auto l = j.at("loss").get<std::string>();
    if (l == "negative-sampling") c.loss = LossKind::NegativeSampling;
    else if (l == "positives-only") c.loss = LossKind::PositivesOnly;
    else throw InvalidArgument("unknown loss '" + l + "'");
  }
  return c;
}

EmbeddingTable init(const TrainConfig& config, const KnowledgeGraph& kg) {
  validate(config);
  return init_embeddings(kg.entity_count(), kg.relation_count(), config.dim,
                         config.rank, config.jitter, config.aggregator, config.seed);
}

std::vector<TrainingPair> draw_pairs(std::span<const QuerySample> batch,
                                     std::size_t entity_count, int negatives,
                                     std::mt19937_64& rng) {
  std::vector<TrainingPair> pairs;
  pairs.reserve(batch.size());
  std::uniform_int_distribution<EntityId> any(0, static_cast<EntityId>(entity_count) - 1);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& answers = batch[i].answers;
    if (answers.empty()) {
      throw InvalidArgument("sample " + std::to_string(i) + " has no answers");
    }
    if (answers.size() >= entity_count) {
      throw InvalidArgument("sample " + std::to_string(i) +
                            ": every entity is an answer, no negatives exist");
    }
    TrainingPair p;
    p.sample = i;
    std::uniform_int_distribution<std::size_t> pick(0, answers.size() - 1);
    p.positive = answers[pick(rng)];
    p.negatives.reserve(static_cast<std::size_t>(negatives));
    while (p.negatives.size() < static_cast<std::size_t>(negatives)) {
      const auto e = any(rng);
      if (!std::binary_search(answers.begin(), answers.end(), e)) p.negatives.push_back(e);
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

LossResult loss(std::span<const QuerySample> batch, std::span<const TrainingPair> pairs,
                const EmbeddingTable& table, const TrainConfig& config) {
  LossResult total;
  if (pairs.empty()) return total;
  std::size_t start = 0;
  while (start < pairs.size()) {
    std::size_t end = start;
    while (end < pairs.size() && pairs[end].sample == pairs[start].sample) ++end;
    const auto s = pairs[start].sample;
    auto part = sample_loss(batch[s], pairs.subspan(start, end - start), s, table, config);
    total.value += part.value;
    total.grad += part.grad;
    start = end;
  }
  const double scale = 1.0 / double(pairs.size());
  total.value *= scale;
  total.grad *= scale;
  return total;
}

LossResult loss(std::span<const QuerySample> batch, const EmbeddingTable& table,
                const TrainConfig& config, std::mt19937_64& rng) {
  const auto pairs = draw_pairs(batch, table.entities.size(), config.negatives, rng);
  return loss(batch, pairs, table, config);
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate)
    : kind_(kind), lr_(learning_rate) {}

void Optimizer::update(double* param, const double* grad, Index size, int kind,
                       std::int64_t id) {
  Eigen::Map<Vector> p(param, size);
  Eigen::Map<const Vector> g(grad, size);
  if (kind_ == OptimizerKind::Sgd) {
    p -= lr_ * g;
    return;
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  auto& mo = moments_[{kind, id}];
  if (mo.m.size() != size) {
    mo.m = Vector::Zero(size);
    mo.v = Vector::Zero(size);
  }
  mo.m = beta1 * mo.m + (1.0 - beta1) * g;
  mo.v = beta2 * mo.v + (1.0 - beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1, double(steps_));
  const double c2 = 1.0 - std::pow(beta2, double(steps_));
  p.array() -= lr_ * (mo.m.array() / c1) / ((mo.v.array() / c2).sqrt() + eps);
}

void Optimizer::step(EmbeddingTable& table, const TableGradient& grad) {
  ++steps_;
  if (lr_ == 0.0) return;
  for (const auto& [id, g] : grad.entities) {
    auto& e = table.entities[static_cast<std::size_t>(id)];
    update(e.mean.data(), g.mean.data(), e.mean.size(), 0, id);
    if (g.factor.size()) update(e.factor.data(), g.factor.data(), e.factor.size(), 1, id);
  }
  for (const auto& [id, g] : grad.relations) {
    auto& r = table.relations[static_cast<std::size_t>(id)];
    update(r.mean.data(), g.mean.data(), r.mean.size(), 2, id);
    update(r.factor.data(), g.factor.data(), r.factor.size(), 3, id);
  }
  if (grad.aggregator.size() && table.aggregator.theta.size()) {
    update(table.aggregator.theta.data(), grad.aggregator.data(),
           table.aggregator.theta.size(), 4, 0);
  }
}

nlohmann::json to_json(const EpochMetrics& m) {
  nlohmann::json types = nlohmann::json::object();
  for (const auto& [t, n] : m.type_histogram) types[std::string(to_string(t))] = n;
  return {{"epoch", m.epoch},
          {"mean_loss", m.mean_loss},
          {"valid_hits3", m.valid_hits3 ? nlohmann::json(*m.valid_hits3) : nlohmann::json()},
          {"wall_seconds", m.wall_seconds},
          {"types", types}};
}

TrainResult train(const TrainConfig& config, const KnowledgeGraph& kg,
                  const std::vector<QuerySample>& workload,
                  const std::vector<QuerySample>* validation,
                  const EpochCallback& on_epoch) {
  return train(config, init(config, kg), workload, validation, on_epoch);
}

TrainResult train(const TrainConfig& config, EmbeddingTable table,
                  const std::vector<QuerySample>& workload,
                  const std::vector<QuerySample>* validation,
                  const EpochCallback& on_epoch) {
  validate(config);
  std::map<QueryType, std::vector<std::size_t>> by_type;
  for (auto t : config.types) by_type[t];
  for (std::size_t i = 0; i < workload.size(); ++i) {
    const auto t = workload[i].dag.type ? workload[i].dag.type : classify(workload[i].dag);
    if (t && by_type.count(*t)) by_type[*t].push_back(i);
  }
  for (const auto& [t, idx] : by_type) {
    if (idx.empty()) {
      throw InvalidArgument("workload has no samples of enabled type " +
                            std::string(to_string(t)));
    }
  }

  EvalConfig eval_config;
  eval_config.filtered = config.filtered_metrics;
  eval_config.compile = config.compile;
  eval_config.threads = config.threads;

  Optimizer optimizer(config.optimizer, config.learning_rate);
  std::mt19937_64 order_rng(splitmix(config.seed));
  TrainResult result;
  std::optional<double> best;
  int stale = 0;
  const auto t0 = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // Shuffle within each type, then interleave the types round-robin.
    std::vector<std::vector<std::size_t>> queues;
    for (auto& [t, idx] : by_type) {
      auto q = idx;
      std::shuffle(q.begin(), q.end(), order_rng);
      queues.push_back(std::move(q));
    }
    std::vector<std::size_t> order;
    for (std::size_t pos = 0;; ++pos) {
      bool any = false;
      for (const auto& q : queues) {
        if (pos < q.size()) {
          order.push_back(q[pos]);
          any = true;
        }
      }
      if (!any) break;
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t pair_count = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const auto end = std::min(order.size(), start + config.batch_size);
      const std::size_t n = end - start;
      std::vector<QuerySample> batch;
      batch.reserve(n);
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(workload[order[i]]);
        const auto t = batch.back().dag.type ? batch.back().dag.type : classify(batch.back().dag);
        ++metrics.type_histogram[*t];
      }
      // Each sample gets its own generator so the draw does not depend on
      // how samples are spread over threads.
      std::vector<LossResult> parts(n);
      auto work = [&](std::size_t i) {
        std::mt19937_64 rng(splitmix(config.seed ^ splitmix(std::uint64_t(epoch) << 32 ^
                                                            (batch_index << 12) ^ i)));
        auto pairs = draw_pairs(std::span<const QuerySample>(&batch[i], 1),
                                table.entities.size(), config.negatives, rng);
        parts[i] = sample_loss(batch[i], pairs, start + i, table, config);
      };
      const std::size_t threads = std::min(config.threads, n);
      if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
      } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
          pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += threads) work(i);
          });
        }
        for (auto& th : pool) th.join();
      }
      LossResult total;
      for (auto& p : parts) {
        total.value += p.value;
        total.grad += p.grad;
      }
      total.grad *= 1.0 / double(n);
      loss_sum += total.value;
      pair_count += n;
      optimizer.step(table, total.grad);
    }
    metrics.mean_loss = pair_count ? loss_sum / double(pair_count) : 0.0;

    bool stop = false;
    if (validation && !validation->empty() && config.valid_every > 0 &&
        epoch % config.valid_every == 0) {
      metrics.valid_hits3 = evaluate(table, *validation, eval_config).average.hits3;
      if (!best || *metrics.valid_hits3 > *best) {
        best = metrics.valid_hits3;
        stale = 0;
        result.table = table;
        result.best_epoch = epoch;
      } else if (++stale >= config.patience) {
        stop = true;
      }
    }
    metrics.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_epoch) on_epoch(metrics);
    result.log.push_back(std::move(metrics));
    if (stop) break;
  }
  if (!best) {
    result.table = std::move(table);
    result.best_epoch = config.epochs;
  }
  return result;
}

}  // namespace gkg
