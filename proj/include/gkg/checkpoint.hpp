#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gkg/embedding_table.hpp"
#include "gkg/knowledge_graph.hpp"
#include "gkg/trainer.hpp"

namespace gkg {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// A trained model with the vocabularies it was trained against, so it can
/// answer queries on its own.
struct Checkpoint {
  EmbeddingTable table;
  TrainConfig config;
  Vocabulary entities;
  Vocabulary relations;
};

/// Layout:
///   8 bytes  magic "GKGCKPT\0"
///   u32      format version
///   u64      header length, then a JSON header (config, d, r, eps,
///            aggregator, vocabulary names and hashes, payload size)
///   f64[]    payload: entity means/factors, relation means/factors,
///            aggregator parameters (little-endian, column-major factors)
///   u64      FNV-1a checksum of the payload bytes
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint make_checkpoint(const EmbeddingTable& table, const TrainConfig& config,
                           const KnowledgeGraph& kg);

/// Throws FormatError on a bad magic, unsupported version, truncation or
/// checksum mismatch. Nothing is returned on failure.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Also refuses a checkpoint whose vocabulary hashes differ from `kg`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const KnowledgeGraph& kg);

}  // namespace gkg
