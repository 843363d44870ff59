#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace gkg {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

enum class Split : std::uint8_t { Train = 0, Valid = 1, Test = 2 };
inline constexpr std::array<Split, 3> kSplits{Split::Train, Split::Valid, Split::Test};

/// Bit set over splits.
using SplitMask = std::uint8_t;
inline constexpr SplitMask kTrainSplit = 1;
inline constexpr SplitMask kValidSplit = 2;
inline constexpr SplitMask kTestSplit = 4;
inline constexpr SplitMask kAllSplits = kTrainSplit | kValidSplit | kTestSplit;

constexpr SplitMask mask_of(Split s) { return SplitMask(1u << unsigned(s)); }
std::string_view to_string(Split s);
/// Parses "train", "valid", "test" joined by '+', or "all".
SplitMask parse_split_mask(std::string_view text);

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Bijective name <-> dense id map, ids in first-appearance order.
class Vocabulary {
 public:
  std::int32_t intern(std::string_view name);
  std::optional<std::int32_t> find(std::string_view name) const;
  const std::string& name(std::int32_t id) const;
  std::size_t size() const { return names_.size(); }
  std::span<const std::string> names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

/// FNV-1a over the names in id order, newline separated.
std::uint64_t vocabulary_hash(const Vocabulary& vocab);

inline std::uint64_t pair_key(std::int32_t a, std::int32_t b) {
  return (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
}

/// Merged adjacency of a set of splits, materialised for traversal-heavy work
/// (answer enumeration, workload sampling).
class Adjacency {
 public:
  /// Sorted, duplicate-free tails of (head, relation). Empty if none.
  std::span<const EntityId> tails(EntityId head, RelationId relation) const;
  /// (head, relation) pairs pointing at `tail`, sorted.
  std::span<const std::pair<EntityId, RelationId>> incoming(EntityId tail) const;
  std::size_t entity_count() const { return incoming_.size(); }
  SplitMask mask() const { return mask_; }

 private:
  friend class KnowledgeGraph;
  SplitMask mask_ = 0;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> forward_;
  std::vector<std::vector<std::pair<EntityId, RelationId>>> incoming_;
};

class KnowledgeGraph {
 public:
  EntityId add_entity(std::string_view name) { return entities_.intern(name); }
  RelationId add_relation(std::string_view name) { return relations_.intern(name); }

  /// Returns false (and stores nothing) when the triple already exists in
  /// that split. Ids must already be in the vocabularies.
  bool add_triple(Split split, Triple triple);

  const Vocabulary& entities() const { return entities_; }
  const Vocabulary& relations() const { return relations_; }
  std::size_t entity_count() const { return entities_.size(); }
  std::size_t relation_count() const { return relations_.size(); }

  /// Triples of one split in insertion order.
  std::span<const Triple> triples(Split split) const;
  std::size_t edge_count(SplitMask mask = kAllSplits) const;

  /// Tails t with (head, relation, t) in any split selected by the mask,
  /// sorted and duplicate-free.
  std::vector<EntityId> neighbors(EntityId head, RelationId relation,
                                  SplitMask mask) const;

  Adjacency adjacency(SplitMask mask) const;

  void check_entity(EntityId id) const;
  void check_relation(RelationId id) const;

 private:
  struct SplitData {
    std::vector<Triple> triples;
    std::unordered_map<std::uint64_t, std::vector<EntityId>> forward;
  };

  Vocabulary entities_;
  Vocabulary relations_;
  std::array<SplitData, 3> splits_;
};

struct SplitPaths {
  std::filesystem::path train;
  std::optional<std::filesystem::path> valid;
  std::optional<std::filesystem::path> test;
};

/// Reads head<TAB>relation<TAB>tail files. Duplicate triples within a split
/// are dropped and reported through `warnings`. Blank lines are skipped; any
/// other line without exactly two tabs and three non-empty fields is an error
/// naming the file and line.
KnowledgeGraph ingest_tsv(const SplitPaths& paths,
                          std::vector<std::string>* warnings = nullptr);

/// Same as ingest_tsv for one split, read from a stream.
void ingest_tsv_stream(KnowledgeGraph& kg, Split split, std::istream& in,
                       const std::string& source,
                       std::vector<std::string>* warnings = nullptr);

/// Writes one split back as TSV using vocabulary names.
void write_tsv(const KnowledgeGraph& kg, Split split, std::ostream& out);

/// Versioned text snapshot of vocabularies and all splits.
void write_snapshot(const KnowledgeGraph& kg, std::ostream& out);
void write_snapshot(const KnowledgeGraph& kg, const std::filesystem::path& path);
KnowledgeGraph read_snapshot(std::istream& in);
KnowledgeGraph read_snapshot(const std::filesystem::path& path);

/// "entities=N relations=R edges=E" plus per-split counts.
std::string summary_line(const KnowledgeGraph& kg);

}  // namespace gkg
