#include "gkg/knowledge_graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gkg/error.hpp"

namespace gkg {

namespace {

constexpr std::string_view kSnapshotMagic = "gkg-snapshot";
constexpr int kSnapshotVersion = 1;

const std::vector<EntityId> kNoTails;

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "train";
}

SplitMask parse_split_mask(std::string_view text) {
  if (text == "all") return kAllSplits;
  SplitMask mask = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto plus = text.find('+', start);
    const auto part = text.substr(start, plus == std::string_view::npos
                                             ? std::string_view::npos
                                             : plus - start);
    if (part == "train") mask |= kTrainSplit;
    else if (part == "valid") mask |= kValidSplit;
    else if (part == "test") mask |= kTestSplit;
    else throw InvalidArgument("unknown split '" + std::string(part) + "'");
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  return mask;
}

std::int32_t Vocabulary::intern(std::string_view name) {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<std::int32_t> Vocabulary::find(std::string_view name) const {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  return std::nullopt;
}

const std::string& Vocabulary::name(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= names_.size()) {
    throw InvalidArgument("vocabulary id " + std::to_string(id) + " out of range");
  }
  return names_[static_cast<std::size_t>(id)];
}

std::uint64_t vocabulary_hash(const Vocabulary& vocab) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  for (const auto& name : vocab.names()) {
    for (char c : name) mix(static_cast<unsigned char>(c));
    mix('\n');
  }
  return h;
}

std::span<const EntityId> Adjacency::tails(EntityId head,
                                           RelationId relation) const {
  auto it = forward_.find(pair_key(head, relation));
  if (it == forward_.end()) return kNoTails;
  return it->second;
}

std::span<const std::pair<EntityId, RelationId>> Adjacency::incoming(
    EntityId tail) const {
  if (tail < 0 || static_cast<std::size_t>(tail) >= incoming_.size()) return {};
  return incoming_[static_cast<std::size_t>(tail)];
}

void KnowledgeGraph::check_entity(EntityId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= entities_.size()) {
    throw InvalidArgument("entity id " + std::to_string(id) + " out of range");
  }
}

void KnowledgeGraph::check_relation(RelationId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= relations_.size()) {
    throw InvalidArgument("relation id " + std::to_string(id) + " out of range");
  }
}

bool KnowledgeGraph::add_triple(Split split, Triple t) {
  check_entity(t.head);
  check_entity(t.tail);
  check_relation(t.relation);
  auto& data = splits_[static_cast<std::size_t>(split)];
  auto& tails = data.forward[pair_key(t.head, t.relation)];
  auto pos = std::lower_bound(tails.begin(), tails.end(), t.tail);
  if (pos != tails.end() && *pos == t.tail) return false;
  tails.insert(pos, t.tail);
  data.triples.push_back(t);
  return true;
}

std::span<const Triple> KnowledgeGraph::triples(Split split) const {
  return splits_[static_cast<std::size_t>(split)].triples;
}

std::size_t KnowledgeGraph::edge_count(SplitMask mask) const {
  std::size_t n = 0;
  for (auto s : kSplits) {
    if (mask & mask_of(s)) n += triples(s).size();
  }
  return n;
}

std::vector<EntityId> KnowledgeGraph::neighbors(EntityId head,
                                                RelationId relation,
                                                SplitMask mask) const {
  check_entity(head);
  check_relation(relation);
  std::vector<EntityId> out;
  const auto key = pair_key(head, relation);
  for (auto s : kSplits) {
    if (!(mask & mask_of(s))) continue;
    const auto& fwd = splits_[static_cast<std::size_t>(s)].forward;
    auto it = fwd.find(key);
    if (it == fwd.end()) continue;
    std::vector<EntityId> merged;
    merged.reserve(out.size() + it->second.size());
    std::set_union(out.begin(), out.end(), it->second.begin(), it->second.end(),
                   std::back_inserter(merged));
    out = std::move(merged);
  }
  return out;
}

Adjacency KnowledgeGraph::adjacency(SplitMask mask) const {
  Adjacency adj;
  adj.mask_ = mask;
  adj.incoming_.resize(entities_.size());
  for (auto s : kSplits) {
    if (!(mask & mask_of(s))) continue;
    for (const auto& [key, tails] : splits_[static_cast<std::size_t>(s)].forward) {
      auto& dst = adj.forward_[key];
      std::vector<EntityId> merged;
      merged.reserve(dst.size() + tails.size());
      std::set_union(dst.begin(), dst.end(), tails.begin(), tails.end(),
                     std::back_inserter(merged));
      dst = std::move(merged);
    }
  }
  for (const auto& [key, tails] : adj.forward_) {
    const auto head = static_cast<EntityId>(key >> 32);
    const auto rel = static_cast<RelationId>(key & 0xffffffffu);
    for (auto t : tails) {
      adj.incoming_[static_cast<std::size_t>(t)].emplace_back(head, rel);
    }
  }
  for (auto& in : adj.incoming_) std::sort(in.begin(), in.end());
  return adj;
}

void ingest_tsv_stream(KnowledgeGraph& kg, Split split, std::istream& in,
                       const std::string& source,
                       std::vector<std::string>* warnings) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t added = 0;
  std::size_t duplicates = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() ||
        fields[2].empty()) {
      throw FormatError(source + ":" + std::to_string(line_no) +
                        ": expected head<TAB>relation<TAB>tail");
    }
    const Triple t{kg.add_entity(fields[0]), kg.add_relation(fields[1]),
                   kg.add_entity(fields[2])};
    if (kg.add_triple(split, t)) {
      ++added;
    } else {
      ++duplicates;
      if (warnings) {
        warnings->push_back(source + ":" + std::to_string(line_no) +
                            ": duplicate triple ignored");
      }
    }
  }
  if (added == 0 && duplicates == 0) {
    throw FormatError(source + ": no triples (empty file)");
  }
}

KnowledgeGraph ingest_tsv(const SplitPaths& paths,
                          std::vector<std::string>* warnings) {
  KnowledgeGraph kg;
  auto load = [&](Split split, const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    ingest_tsv_stream(kg, split, in, p.string(), warnings);
  };
  load(Split::Train, paths.train);
  if (paths.valid) load(Split::Valid, *paths.valid);
  if (paths.test) load(Split::Test, *paths.test);
  return kg;
}

void write_tsv(const KnowledgeGraph& kg, Split split, std::ostream& out) {
  for (const auto& t : kg.triples(split)) {
    out << kg.entities().name(t.head) << '\t'
        << kg.relations().name(t.relation) << '\t'
        << kg.entities().name(t.tail) << '\n';
  }
}

void write_snapshot(const KnowledgeGraph& kg, std::ostream& out) {
  out << kSnapshotMagic << ' ' << kSnapshotVersion << '\n';
  out << "entities " << kg.entity_count() << '\n';
  for (const auto& n : kg.entities().names()) out << n << '\n';
  out << "relations " << kg.relation_count() << '\n';
  for (const auto& n : kg.relations().names()) out << n << '\n';
  for (auto s : kSplits) {
    out << "split " << to_string(s) << ' ' << kg.triples(s).size() << '\n';
    for (const auto& t : kg.triples(s)) {
      out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
    }
  }
  out << "end\n";
}

void write_snapshot(const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_snapshot(kg, out);
  if (!out) throw IoError("write failed for " + path.string());
}

KnowledgeGraph read_snapshot(std::istream& in) {
  auto fail = [](const std::string& why) -> FormatError {
    return FormatError("snapshot: " + why);
  };
  std::string line;
  if (!std::getline(in, line)) throw fail("empty input");
  {
    std::istringstream hdr(line);
    std::string magic;
    int version = 0;
    hdr >> magic >> version;
    if (magic != kSnapshotMagic) throw fail("bad magic");
    if (version != kSnapshotVersion) {
      throw fail("unsupported version " + std::to_string(version));
    }
  }
  auto read_count = [&](std::string_view keyword) {
    if (!std::getline(in, line)) throw fail("truncated before " + std::string(keyword));
    std::istringstream s(line);
    std::string word;
    std::size_t n = 0;
    if (!(s >> word >> n) || word != keyword) {
      throw fail("expected '" + std::string(keyword) + " <count>'");
    }
    return n;
  };
  KnowledgeGraph kg;
  const auto ne = read_count("entities");
  for (std::size_t i = 0; i < ne; ++i) {
    if (!std::getline(in, line)) throw fail("truncated entity list");
    if (static_cast<std::size_t>(kg.add_entity(line)) != i) {
      throw fail("duplicate entity name '" + line + "'");
    }
  }
  const auto nr = read_count("relations");
  for (std::size_t i = 0; i < nr; ++i) {
    if (!std::getline(in, line)) throw fail("truncated relation list");
    if (static_cast<std::size_t>(kg.add_relation(line)) != i) {
      throw fail("duplicate relation name '" + line + "'");
    }
  }
  for (auto s : kSplits) {
    if (!std::getline(in, line)) throw fail("truncated before split header");
    std::istringstream hdr(line);
    std::string word, name;
    std::size_t n = 0;
    if (!(hdr >> word >> name >> n) || word != "split" || name != to_string(s)) {
      throw fail("expected 'split " + std::string(to_string(s)) + " <count>'");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::getline(in, line)) throw fail("truncated triple list");
      std::istringstream row(line);
      Triple t;
      if (!(row >> t.head >> t.relation >> t.tail)) throw fail("bad triple row");
      try {
        if (!kg.add_triple(s, t)) throw fail("duplicate triple in snapshot");
      } catch (const InvalidArgument& e) {
        throw fail(e.what());
      }
    }
  }
  if (!std::getline(in, line) || line != "end") throw fail("missing end marker");
  return kg;
}

KnowledgeGraph read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_snapshot(in);
}

std::string summary_line(const KnowledgeGraph& kg) {
  std::ostringstream s;
  s << "entities=" << kg.entity_count() << " relations=" << kg.relation_count()
    << " edges=" << kg.edge_count() << " train=" << kg.triples(Split::Train).size()
    << " valid=" << kg.triples(Split::Valid).size()
    << " test=" << kg.triples(Split::Test).size();
  return s.str();
}

}  // namespace gkg
