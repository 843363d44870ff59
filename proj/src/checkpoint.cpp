#include "gkg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gkg/error.hpp"

namespace gkg {

namespace {

constexpr char kMagic[8] = {'G', 'K', 'G', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written in native little-endian order");

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
void put(std::string& buf, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  buf.append(raw, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  template <typename T>
  T get(const char* what) {
    T value;
    need(sizeof(T), what);
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string_view bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string_view v(data_.data() + pos_, n);
    pos_ += n;
    return v;
  }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what);
    }
  }

  std::string data_;
  std::size_t pos_ = 0;
};

nlohmann::json names_json(const Vocabulary& v) {
  return std::vector<std::string>(v.names().begin(), v.names().end());
}

}  // namespace

Checkpoint make_checkpoint(const EmbeddingTable& table, const TrainConfig& config,
                           const KnowledgeGraph& kg) {
  if (table.entities.size() != kg.entity_count() ||
      table.relations.size() != kg.relation_count()) {
    throw InvalidArgument("table does not match the graph vocabularies");
  }
  return Checkpoint{table, config, kg.entities(), kg.relations()};
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const auto& t = ck.table;
  std::string payload;
  auto put_density = [&](const GaussianDensity& g) {
    if (g.dim() != t.dim || g.columns() != t.rank) {
      throw InvalidArgument("density shape differs from the table shape");
    }
    payload.append(reinterpret_cast<const char*>(g.mean.data()),
                   sizeof(double) * static_cast<std::size_t>(g.mean.size()));
    payload.append(reinterpret_cast<const char*>(g.factor.data()),
                   sizeof(double) * static_cast<std::size_t>(g.factor.size()));
  };
  for (const auto& e : t.entities) put_density(e);
  for (const auto& r : t.relations) put_density(r);
  payload.append(reinterpret_cast<const char*>(t.aggregator.theta.data()),
                 sizeof(double) * static_cast<std::size_t>(t.aggregator.theta.size()));

  nlohmann::json header = {
      {"format", "gkg-checkpoint"},
      {"dim", t.dim},
      {"rank", t.rank},
      {"jitter", t.jitter},
      {"aggregator", std::string(to_string(t.aggregator.mode))},
      {"aggregator_params", t.aggregator.theta.size()},
      {"entity_count", t.entities.size()},
      {"relation_count", t.relations.size()},
      {"entity_hash", vocabulary_hash(ck.entities)},
      {"relation_hash", vocabulary_hash(ck.relations)},
      {"entities", names_json(ck.entities)},
      {"relations", names_json(ck.relations)},
      {"config", to_json(ck.config)},
      {"payload_bytes", payload.size()},
  };
  const std::string header_text = header.dump();

  std::string file(kMagic, sizeof kMagic);
  put<std::uint32_t>(file, kCheckpointVersion);
  put<std::uint64_t>(file, header_text.size());
  file += header_text;
  file += payload;
  put<std::uint64_t>(file, fnv1a(payload.data(), payload.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(file.data(), static_cast<std::streamsize>(file.size()));
  if (!out) throw IoError("write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream raw;
  raw << in.rdbuf();
  Reader r(raw.str());

  if (r.bytes(sizeof kMagic, "magic") != std::string_view(kMagic, sizeof kMagic)) {
    throw FormatError(path.string() + " is not a checkpoint (bad magic)");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint format version " + std::to_string(version) +
                      " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = r.get<std::uint64_t>("header length");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.bytes(header_len, "header"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }

  Checkpoint ck;
  try {
    auto& t = ck.table;
    t.dim = header.at("dim").get<Index>();
    t.rank = header.at("rank").get<Index>();
    t.jitter = header.at("jitter").get<double>();
    ck.config = train_config_from_json(header.at("config"));
    for (const auto& n : header.at("entities")) ck.entities.intern(n.get<std::string>());
    for (const auto& n : header.at("relations")) ck.relations.intern(n.get<std::string>());
    const auto ne = header.at("entity_count").get<std::size_t>();
    const auto nr = header.at("relation_count").get<std::size_t>();
    if (ck.entities.size() != ne || ck.relations.size() != nr ||
        vocabulary_hash(ck.entities) != header.at("entity_hash").get<std::uint64_t>() ||
        vocabulary_hash(ck.relations) != header.at("relation_hash").get<std::uint64_t>()) {
      throw FormatError("checkpoint vocabulary is inconsistent with its hashes");
    }
    const auto mode = parse_aggregator_mode(header.at("aggregator").get<std::string>());
    t.aggregator = AggregatorParams(mode, t.dim);
    if (t.aggregator.theta.size() != header.at("aggregator_params").get<Index>()) {
      throw FormatError("checkpoint aggregator size mismatch");
    }
    const auto payload_bytes = header.at("payload_bytes").get<std::size_t>();
    const std::size_t expected =
        sizeof(double) * (static_cast<std::size_t>(t.dim * (t.rank + 1)) * (ne + nr) +
                          static_cast<std::size_t>(t.aggregator.theta.size()));
    if (payload_bytes != expected) throw FormatError("checkpoint payload size mismatch");
    const auto payload = r.bytes(payload_bytes, "payload");
    const auto checksum = r.get<std::uint64_t>("checksum");
    if (checksum != fnv1a(payload.data(), payload.size())) {
      throw FormatError("checkpoint checksum mismatch");
    }
    if (!r.at_end()) throw FormatError("trailing bytes after checkpoint");

    const char* p = payload.data();
    auto take = [&](double* dst, Index n) {
      std::memcpy(dst, p, sizeof(double) * static_cast<std::size_t>(n));
      p += sizeof(double) * static_cast<std::size_t>(n);
    };
    auto read_density = [&] {
      GaussianDensity g(Vector(t.dim), Matrix(t.dim, t.rank), t.jitter);
      take(g.mean.data(), g.mean.size());
      take(g.factor.data(), g.factor.size());
      return g;
    };
    t.entities.reserve(ne);
    for (std::size_t i = 0; i < ne; ++i) t.entities.push_back(read_density());
    t.relations.reserve(nr);
    for (std::size_t i = 0; i < nr; ++i) t.relations.push_back(read_density());
    take(t.aggregator.theta.data(), t.aggregator.theta.size());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const KnowledgeGraph& kg) {
  auto ck = load_checkpoint(path);
  if (vocabulary_hash(ck.entities) != vocabulary_hash(kg.entities()) ||
      ck.entities.size() != kg.entity_count()) {
    throw FormatError("checkpoint entity vocabulary hash does not match the graph "
                      "(trained on a different knowledge graph?)");
  }
  if (vocabulary_hash(ck.relations) != vocabulary_hash(kg.relations()) ||
      ck.relations.size() != kg.relation_count()) {
    throw FormatError("checkpoint relation vocabulary hash does not match the graph "
                      "(trained on a different knowledge graph?)");
  }
  return ck;
}

}  // namespace gkg
