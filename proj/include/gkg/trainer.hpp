#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "gkg/compile.hpp"
#include "gkg/embedding_table.hpp"
#include "gkg/evaluator.hpp"
#include "gkg/knowledge_graph.hpp"
#include "gkg/sampler.hpp"

namespace gkg {

enum class OptimizerKind { Sgd, Adam };

enum class LossKind {
  /// Margin log-sigmoid loss over one positive and k uniform negatives.
  NegativeSampling,
  /// Sum of positive distances only. Has the degenerate minimiser P -> 0;
  /// kept to demonstrate that collapse.
  PositivesOnly,
};

struct TrainConfig {
  Index dim = 16;
  Index rank = 4;
  double jitter = kDefaultJitter;
  double learning_rate = 0.02;
  double margin = 24.0;
  int negatives = 64;
  std::size_t batch_size = 128;
  int epochs = 100;
  std::vector<QueryType> types{std::begin(kAllQueryTypes), std::end(kAllQueryTypes)};
  AggregatorMode aggregator = AggregatorMode::Attention;
  std::uint64_t seed = 1;
  OptimizerKind optimizer = OptimizerKind::Adam;
  LossKind loss = LossKind::NegativeSampling;
  /// Stop once validation HITS@3 has not improved for this many epochs.
  int patience = 5;
  /// Validate every this many epochs (0 disables validation).
  int valid_every = 1;
  /// Worker threads for per-sample gradients. Gradients are reduced in sample
  /// order, so results do not depend on the thread count.
  std::size_t threads = 1;
  bool filtered_metrics = false;
  CompileOptions compile;
};

/// Throws InvalidArgument unless d >= 1, 1 <= r <= d, margin > 0, k >= 1,
/// jitter > 0, batch >= 1, rate >= 0 and at least one query type is enabled.
void validate(const TrainConfig& config);

nlohmann::json to_json(const TrainConfig& config);
/// Overlays the keys present in `j` onto `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

EmbeddingTable init(const TrainConfig& config, const KnowledgeGraph& kg);

/// One positive answer with its negatives, drawn for sample `sample`.
struct TrainingPair {
  std::size_t sample = 0;
  EntityId positive = 0;
  std::vector<EntityId> negatives;
};

/// One pair per sample: a uniform positive from its answers and `negatives`
/// entities drawn uniformly from those outside the answer set.
std::vector<TrainingPair> draw_pairs(std::span<const QuerySample> batch,
                                     std::size_t entity_count, int negatives,
                                     std::mt19937_64& rng);

struct LossResult {
  double value = 0.0;
  TableGradient grad;
};

/// Per pair: L = -log s(margin - D+) - (1/k) sum log s(D- - margin), with D
/// the mixture distance to the compiled query; positives-only: L = D+.
/// Value and gradient are averaged over pairs.
LossResult loss(std::span<const QuerySample> batch, std::span<const TrainingPair> pairs,
                const EmbeddingTable& table, const TrainConfig& config);
LossResult loss(std::span<const QuerySample> batch, const EmbeddingTable& table,
                const TrainConfig& config, std::mt19937_64& rng);

/// Applies one optimizer step in place.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);
  void step(EmbeddingTable& table, const TableGradient& grad);

 private:
  struct Moments {
    Vector m;
    Vector v;
  };
  void update(double* param, const double* grad, Index size, int kind,
              std::int64_t id);

  OptimizerKind kind_;
  double lr_;
  std::uint64_t steps_ = 0;
  std::map<std::pair<int, std::int64_t>, Moments> moments_;
};

struct EpochMetrics {
  int epoch = 0;
  double mean_loss = 0.0;
  std::optional<double> valid_hits3;
  double wall_seconds = 0.0;
  std::map<QueryType, std::size_t> type_histogram;
};

nlohmann::json to_json(const EpochMetrics& m);

struct TrainResult {
  EmbeddingTable table;
  std::vector<EpochMetrics> log;
  /// Epoch whose table was returned (the best validation epoch when
  /// validating, otherwise the last).
  int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Mini-batch training over the samples of the enabled query types. Batches
/// interleave the types round-robin. Samples of disabled types are ignored.
TrainResult train(const TrainConfig& config, const KnowledgeGraph& kg,
                  const std::vector<QuerySample>& workload,
                  const std::vector<QuerySample>* validation = nullptr,
                  const EpochCallback& on_epoch = {});

/// Same, starting from an existing table.
TrainResult train(const TrainConfig& config, EmbeddingTable table,
                  const std::vector<QuerySample>& workload,
                  const std::vector<QuerySample>* validation = nullptr,
                  const EpochCallback& on_epoch = {});

}  // namespace gkg
