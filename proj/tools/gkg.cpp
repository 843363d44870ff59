// gkg: ingest, sample, train, evaluate and query Gaussian KG embeddings.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gkg/checkpoint.hpp"
#include "gkg/compile.hpp"
#include "gkg/error.hpp"
#include "gkg/evaluator.hpp"
#include "gkg/knowledge_graph.hpp"
#include "gkg/query.hpp"
#include "gkg/sampler.hpp"
#include "gkg/synthetic.hpp"
#include "gkg/trainer.hpp"
#include "gkg/viz.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::optional<fs::path> data_dir() {
  if (const char* env = std::getenv("GKG_DATA_DIR"); env && *env) return fs::path(env);
  return std::nullopt;
}

// Relative inputs that do not exist locally are looked up in $GKG_DATA_DIR.
fs::path resolve_input(const fs::path& p) {
  if (p.is_absolute() || fs::exists(p)) return p;
  if (auto dir = data_dir(); dir && fs::exists(*dir / p)) return *dir / p;
  return p;
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw gkg::IoError("cannot open " + p.string());
}

fs::path resolved(const std::string& s) {
  auto p = resolve_input(s);
  require_file(p);
  return p;
}

void require_writable_dir(const fs::path& out) {
  const auto dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
  if (!fs::is_directory(dir)) throw gkg::IoError("output directory does not exist: " + dir.string());
}

void write_receipt(const fs::path& out, const json& config) {
  std::ofstream f(out.string() + ".config.json");
  if (!f) throw gkg::IoError("cannot write " + out.string() + ".config.json");
  f << config.dump(2) << '\n';
}

void log_config(const std::string& command, const json& config) {
  std::cerr << "[" << command << "] config " << config.dump() << '\n';
}

gkg::KnowledgeGraph graph_from(const gkg::Checkpoint& ck) {
  gkg::KnowledgeGraph kg;
  for (const auto& n : ck.entities.names()) kg.add_entity(n);
  for (const auto& n : ck.relations.names()) kg.add_relation(n);
  return kg;
}

struct TrainFlags {
  gkg::Index dim;
  gkg::Index rank;
  double jitter;
  double lr;
  double margin;
  int negatives;
  std::size_t batch;
  int epochs;
  std::string types;
  std::string aggregator;
  std::uint64_t seed;
  std::size_t threads;
  std::string optimizer;
  std::string loss;
  int patience;
  std::string config_file;
  CLI::Option* dim_opt;
  CLI::Option* rank_opt;
  CLI::Option* jitter_opt;
  CLI::Option* lr_opt;
  CLI::Option* margin_opt;
  CLI::Option* neg_opt;
  CLI::Option* batch_opt;
  CLI::Option* epochs_opt;
  CLI::Option* types_opt;
  CLI::Option* agg_opt;
  CLI::Option* seed_opt;
  CLI::Option* threads_opt;
  CLI::Option* opt_opt;
  CLI::Option* loss_opt;
  CLI::Option* patience_opt;
  CLI::Option* filtered_opt;
};

void add_train_flags(CLI::App* app, TrainFlags& f) {
  f.dim_opt = app->add_option("--dim", f.dim, "embedding dimension d");
  f.rank_opt = app->add_option("--rank", f.rank, "precision factor rank r");
  f.jitter_opt = app->add_option("--jitter", f.jitter, "diagonal jitter eps");
  f.lr_opt = app->add_option("--lr", f.lr, "learning rate");
  f.margin_opt = app->add_option("--margin", f.margin, "margin gamma");
  f.neg_opt = app->add_option("--negatives", f.negatives, "negatives per positive");
  f.batch_opt = app->add_option("--batch", f.batch, "batch size");
  f.epochs_opt = app->add_option("--epochs", f.epochs, "maximum epochs");
  f.types_opt = app->add_option("--types", f.types, "query types, e.g. 1t,2u or all");
  f.agg_opt = app->add_option("--aggregator", f.aggregator, "attention|average|mlp");
  f.seed_opt = app->add_option("--seed", f.seed, "random seed");
  f.threads_opt = app->add_option("--threads", f.threads, "worker threads");
  f.opt_opt = app->add_option("--optimizer", f.optimizer, "sgd|adam");
  f.loss_opt = app->add_option("--loss", f.loss, "negative-sampling|positives-only");
  f.patience_opt = app->add_option("--patience", f.patience, "early stopping patience");
  f.filtered_opt = app->add_flag("--filtered-metrics", "conventional filtered ranking for validation");
  app->add_option("--config", f.config_file, "JSON config file (flags override it)");
}

gkg::TrainConfig resolve_train_config(const TrainFlags& f) {
  gkg::TrainConfig c;
  if (!f.config_file.empty()) {
    const auto path = resolved(f.config_file);
    std::ifstream in(path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw gkg::FormatError(path.string() + ": " + e.what());
    }
    c = gkg::train_config_from_json(j, c);
  }
  if (*f.dim_opt) c.dim = f.dim;
  if (*f.rank_opt) c.rank = f.rank;
  if (*f.jitter_opt) c.jitter = f.jitter;
  if (*f.lr_opt) c.learning_rate = f.lr;
  if (*f.margin_opt) c.margin = f.margin;
  if (*f.neg_opt) c.negatives = f.negatives;
  if (*f.batch_opt) c.batch_size = f.batch;
  if (*f.epochs_opt) c.epochs = f.epochs;
  if (*f.types_opt) c.types = gkg::parse_query_types(f.types);
  if (*f.agg_opt) c.aggregator = gkg::parse_aggregator_mode(f.aggregator);
  if (*f.seed_opt) c.seed = f.seed;
  if (*f.threads_opt) c.threads = f.threads;
  if (*f.opt_opt) {
    if (f.optimizer == "sgd") c.optimizer = gkg::OptimizerKind::Sgd;
    else if (f.optimizer == "adam") c.optimizer = gkg::OptimizerKind::Adam;
    else throw gkg::InvalidArgument("unknown optimizer '" + f.optimizer + "'");
  }
  if (*f.loss_opt) {
    if (f.loss == "negative-sampling") c.loss = gkg::LossKind::NegativeSampling;
    else if (f.loss == "positives-only") c.loss = gkg::LossKind::PositivesOnly;
    else throw gkg::InvalidArgument("unknown loss '" + f.loss + "'");
  }
  if (*f.patience_opt) c.patience = f.patience;
  if (*f.filtered_opt) c.filtered_metrics = true;
  gkg::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian density embeddings for multi-hop knowledge graph queries"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "read TSV splits into a snapshot");
  std::string train_tsv, valid_tsv, test_tsv, snapshot_out;
  ingest->add_option("--train", train_tsv, "train TSV (default: $GKG_DATA_DIR/train.txt)");
  ingest->add_option("--valid", valid_tsv, "validation TSV");
  ingest->add_option("--test", test_tsv, "test TSV");
  ingest->add_option("-o,--out", snapshot_out, "snapshot path")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "write the planted-cluster synthetic graph");
  gkg::PlantedGraphOptions synth_opts;
  std::string synth_out;
  synth->add_option("--entities", synth_opts.entities);
  synth->add_option("--relations", synth_opts.relations);
  synth->add_option("--cluster-size", synth_opts.cluster_size);
  synth->add_option("--seed", synth_opts.seed);
  synth->add_option("-o,--out", synth_out, "snapshot path")->required();

  // sample
  auto* sample = app.add_subcommand("sample", "sample a query workload");
  std::string sample_kg, sample_types = "all", sample_split = "train", sample_out;
  std::size_t sample_count = 100;
  std::uint64_t sample_seed = 1;
  sample->add_option("--kg", sample_kg, "snapshot")->required();
  sample->add_option("--types", sample_types, "query types, e.g. 1t,2u or all");
  sample->add_option("--count", sample_count, "queries per type");
  sample->add_option("--seed", sample_seed);
  sample->add_option("--split", sample_split, "train|valid|test")
      ->check(CLI::IsMember({"train", "valid", "test"}));
  sample->add_option("-o,--out", sample_out, "workload JSONL")->required();

  // train
  auto* train = app.add_subcommand("train", "train embeddings on a workload");
  TrainFlags tf;
  std::string train_kg, train_workload, train_valid, train_out, train_log;
  train->add_option("--kg", train_kg, "snapshot")->required();
  train->add_option("--workload", train_workload, "training workload JSONL")->required();
  train->add_option("--valid", train_valid, "validation workload JSONL");
  train->add_option("-o,--out", train_out, "checkpoint path")->required();
  train->add_option("--log", train_log, "per-epoch metrics JSONL (default: <out>.log.jsonl)");
  add_train_flags(train, tf);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a workload");
  std::string eval_ck, eval_kg, eval_workload, eval_report;
  std::size_t eval_threads = 1;
  bool eval_filtered = false;
  eval->add_option("--checkpoint", eval_ck)->required();
  eval->add_option("--kg", eval_kg, "snapshot to check the vocabulary against");
  eval->add_option("--workload", eval_workload, "workload JSONL")->required();
  eval->add_option("-o,--report", eval_report, "report prefix (.txt and .json)")->required();
  eval->add_flag("--filtered-metrics", eval_filtered, "conventional filtered ranking");
  eval->add_option("--threads", eval_threads);

  // answer
  auto* answer = app.add_subcommand("answer", "rank entities for a query");
  std::string answer_ck, answer_query;
  std::size_t answer_k = 10;
  answer->add_option("--checkpoint", answer_ck)->required();
  answer->add_option("-q,--query", answer_query, "e.g. \"((a r1) & (b r2))\"")->required();
  answer->add_option("-k,--top-k", answer_k);

  // export-viz
  auto* viz = app.add_subcommand("export-viz", "2-D projection of entities and queries");
  std::string viz_ck, viz_out;
  std::vector<std::string> viz_entities, viz_queries;
  viz->add_option("--checkpoint", viz_ck)->required();
  viz->add_option("-e,--entity", viz_entities, "entity name (repeatable)");
  viz->add_option("-q,--query", viz_queries, "query text (repeatable)");
  viz->add_option("-o,--out", viz_out, "output prefix (.csv and .json)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gkg::InvalidArgument("").exit_code();
  }

  try {
    if (*ingest) {
      gkg::SplitPaths paths;
      const auto dir = data_dir();
      auto pick = [&](const std::string& flag, const char* file) -> std::optional<fs::path> {
        if (!flag.empty()) return resolved(flag);
        if (dir && fs::exists(*dir / file)) return *dir / file;
        return std::nullopt;
      };
      auto tr = pick(train_tsv, "train.txt");
      if (!tr) throw gkg::InvalidArgument("ingest: no --train given and $GKG_DATA_DIR/train.txt not found");
      paths.train = *tr;
      paths.valid = pick(valid_tsv, "valid.txt");
      paths.test = pick(test_tsv, "test.txt");
      require_writable_dir(snapshot_out);
      json cfg{{"command", "ingest"},
               {"train", paths.train.string()},
               {"valid", paths.valid ? paths.valid->string() : ""},
               {"test", paths.test ? paths.test->string() : ""},
               {"out", snapshot_out}};
      log_config("ingest", cfg);
      std::vector<std::string> warnings;
      const auto kg = gkg::ingest_tsv(paths, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      gkg::write_snapshot(kg, snapshot_out);
      write_receipt(snapshot_out, cfg);
      std::cout << gkg::summary_line(kg) << '\n';
    } else if (*synth) {
      require_writable_dir(synth_out);
      json cfg{{"command", "synth"},
               {"entities", synth_opts.entities},
               {"relations", synth_opts.relations},
               {"cluster_size", synth_opts.cluster_size},
               {"seed", synth_opts.seed},
               {"out", synth_out}};
      log_config("synth", cfg);
      const auto kg = gkg::make_planted_graph(synth_opts);
      gkg::write_snapshot(kg, synth_out);
      write_receipt(synth_out, cfg);
      std::cout << gkg::summary_line(kg) << '\n';
    } else if (*sample) {
      const auto kg_path = resolved(sample_kg);
      const auto types = gkg::parse_query_types(sample_types);
      require_writable_dir(sample_out);
      gkg::SampleOptions opts;
      // Held-out splits keep only queries that need at least one held-out edge.
      if (sample_split == "valid") {
        opts.mask = gkg::kTrainSplit | gkg::kValidSplit;
        opts.easy_mask = gkg::kTrainSplit;
      } else if (sample_split == "test") {
        opts.mask = gkg::kAllSplits;
        opts.easy_mask = gkg::kTrainSplit | gkg::kValidSplit;
      }
      json type_names = json::array();
      for (auto t : types) type_names.push_back(gkg::to_string(t));
      json cfg{{"command", "sample"}, {"kg", kg_path.string()}, {"types", type_names},
               {"count", sample_count}, {"seed", sample_seed}, {"split", sample_split},
               {"out", sample_out}};
      log_config("sample", cfg);
      const auto kg = gkg::read_snapshot(kg_path);
      std::vector<gkg::QuerySample> all;
      for (auto t : types) {
        auto part = gkg::sample_queries(kg, t, sample_count, sample_seed, opts);
        all.insert(all.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
      }
      gkg::write_workload(all, kg, fs::path(sample_out));
      write_receipt(sample_out, cfg);
      std::cout << "wrote " << all.size() << " queries to " << sample_out << '\n';
    } else if (*train) {
      const auto kg_path = resolved(train_kg);
      const auto wl_path = resolved(train_workload);
      std::optional<fs::path> valid_path;
      if (!train_valid.empty()) valid_path = resolved(train_valid);
      require_writable_dir(train_out);
      const auto config = resolve_train_config(tf);
      const fs::path log_path = train_log.empty() ? fs::path(train_out + ".log.jsonl") : fs::path(train_log);
      json cfg{{"command", "train"}, {"kg", kg_path.string()}, {"workload", wl_path.string()},
               {"valid", valid_path ? valid_path->string() : ""}, {"out", train_out},
               {"log", log_path.string()}, {"train", gkg::to_json(config)}};
      log_config("train", cfg);
      const auto kg = gkg::read_snapshot(kg_path);
      const auto workload = gkg::read_workload(wl_path, kg);
      std::vector<gkg::QuerySample> validation;
      if (valid_path) validation = gkg::read_workload(*valid_path, kg);
      std::ofstream log(log_path);
      if (!log) throw gkg::IoError("cannot write " + log_path.string());
      auto on_epoch = [&](const gkg::EpochMetrics& m) {
        const auto j = gkg::to_json(m);
        log << j.dump() << '\n';
        log.flush();
        std::cerr << "[train] " << j.dump() << '\n';
      };
      const auto result = gkg::train(config, kg, workload, valid_path ? &validation : nullptr, on_epoch);
      gkg::save_checkpoint(gkg::make_checkpoint(result.table, config, kg), train_out);
      write_receipt(train_out, cfg);
      std::cout << "best epoch " << result.best_epoch << ", checkpoint " << train_out << '\n';
    } else if (*eval) {
      const auto ck_path = resolved(eval_ck);
      const auto wl_path = resolved(eval_workload);
      require_writable_dir(eval_report);
      json cfg{{"command", "eval"}, {"checkpoint", ck_path.string()}, {"workload", wl_path.string()},
               {"report", eval_report}, {"filtered_metrics", eval_filtered}, {"threads", eval_threads}};
      log_config("eval", cfg);
      gkg::Checkpoint ck;
      gkg::KnowledgeGraph kg;
      if (!eval_kg.empty()) {
        kg = gkg::read_snapshot(resolved(eval_kg));
        ck = gkg::load_checkpoint(ck_path, kg);
      } else {
        ck = gkg::load_checkpoint(ck_path);
        kg = graph_from(ck);
      }
      const auto workload = gkg::read_workload(wl_path, kg);
      gkg::EvalConfig ec;
      ec.filtered = eval_filtered;
      ec.threads = eval_threads;
      ec.compile = ck.config.compile;
      const auto report = gkg::evaluate(ck.table, workload, ec);
      const auto text = gkg::format_report(report);
      std::ofstream(eval_report + ".txt") << text;
      std::ofstream(eval_report + ".json") << gkg::to_json(report).dump(2) << '\n';
      write_receipt(eval_report, cfg);
      std::cout << text;
    } else if (*answer) {
      const auto ck = gkg::load_checkpoint(resolved(answer_ck));
      const auto dag = gkg::parse_query(answer_query, ck.entities, ck.relations);
      const auto ranked = gkg::rank_with_distances(dag, ck.table, {}, ck.config.compile);
      std::size_t k = answer_k;
      if (k > ranked.size()) {
        std::cerr << "warning: top-k " << k << " exceeds the " << ranked.size()
                  << " entities; showing all\n";
        k = ranked.size();
      }
      log_config("answer", json{{"command", "answer"}, {"checkpoint", answer_ck},
                                {"query", answer_query}, {"top_k", k}});
      std::cout.precision(6);
      for (std::size_t i = 0; i < k; ++i) {
        std::cout << i + 1 << '\t' << ck.entities.name(ranked[i].id) << '\t'
                  << ranked[i].distance << '\n';
      }
    } else if (*viz) {
      const auto ck = gkg::load_checkpoint(resolved(viz_ck));
      require_writable_dir(viz_out);
      json cfg{{"command", "export-viz"}, {"checkpoint", viz_ck}, {"entities", viz_entities},
               {"queries", viz_queries}, {"out", viz_out}};
      log_config("export-viz", cfg);
      std::vector<gkg::VizItem> items;
      for (const auto& name : viz_entities) {
        const auto id = ck.entities.find(name);
        if (!id) throw gkg::InvalidArgument("unknown entity '" + name + "'");
        items.push_back({name, "entity", gkg::as_mixture(ck.table.entity(*id))});
      }
      for (const auto& q : viz_queries) {
        const auto dag = gkg::parse_query(q, ck.entities, ck.relations);
        items.push_back({q, "query", gkg::compile(dag, ck.table, ck.config.compile)});
      }
      const auto out = gkg::export_viz(items);
      {
        std::ofstream csv(viz_out + ".csv");
        if (!csv) throw gkg::IoError("cannot write " + viz_out + ".csv");
        gkg::write_viz_csv(out, csv);
      }
      std::ofstream(viz_out + ".json") << gkg::to_json(out).dump(2) << '\n';
      write_receipt(viz_out, cfg);
      std::cout << "wrote " << out.rows.size() << " rows to " << viz_out << ".csv\n";
    }
  } catch (const gkg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
