#include "gkg/query.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <string>

#include "gkg/error.hpp"

namespace gkg {

namespace {

struct TypeName {
  QueryType type;
  std::string_view ascii;
  std::string_view symbol;
  std::string_view signature;
};

// Signatures are produced by shape_signature(): children of set operators are
// sorted so that branch order does not matter.
constexpr TypeName kTypeNames[] = {
    {QueryType::T1, "1t", "1t", "(e r)"},
    {QueryType::T2, "2t", "2t", "((e r) r)"},
    {QueryType::T3, "3t", "3t", "(((e r) r) r)"},
    {QueryType::I2, "2i", "2∩", "((e r) & (e r))"},
    {QueryType::I3, "3i", "3∩", "((e r) & (e r) & (e r))"},
    {QueryType::U2, "2u", "2∪", "((e r) | (e r))"},
    {QueryType::IT, "it", "∩t", "(((e r) & (e r)) r)"},
    {QueryType::TI, "ti", "t∩", "(((e r) r) & (e r))"},
    {QueryType::UT, "ut", "∪t", "(((e r) | (e r)) r)"},
};

std::string shape_signature(const QueryDag& dag, std::size_t n) {
  const auto& node = dag.nodes[n];
  switch (node.kind) {
    case NodeKind::Anchor:
      return "e";
    case NodeKind::Translate:
      return "(" + shape_signature(dag, node.children.at(0)) + " r)";
    case NodeKind::Intersect:
    case NodeKind::Union: {
      std::vector<std::string> parts;
      for (auto c : node.children) parts.push_back(shape_signature(dag, c));
      std::sort(parts.begin(), parts.end());
      const char* sep = node.kind == NodeKind::Intersect ? " & " : " | ";
      std::string out = "(";
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
      }
      return out + ")";
    }
  }
  return {};
}

bool is_special(char c) {
  return c == '(' || c == ')' || c == '&' || c == '|';
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

class Parser {
 public:
  Parser(std::string_view text, const Vocabulary& entities,
         const Vocabulary& relations)
      : text_(text), entities_(entities), relations_(relations) {}

  QueryDag parse() {
    QueryDag dag;
    dag.root = expr(dag);
    skip_space();
    if (pos_ != text_.size()) error("unexpected trailing input");
    dag.type = classify(dag);
    return dag;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    throw FormatError("query parse error at byte " + std::to_string(pos_) +
                      ": " + what);
  }

  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  std::string_view name() {
    skip_space();
    const auto start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_]) && !is_special(text_[pos_])) {
      ++pos_;
    }
    if (start == pos_) error("expected a name");
    return text_.substr(start, pos_ - start);
  }

  std::size_t expr(QueryDag& dag) {
    if (peek() != '(') {
      const auto at = pos_;
      const auto n = name();
      auto id = entities_.find(n);
      if (!id) {
        pos_ = at;
        error("unknown entity '" + std::string(n) + "'");
      }
      return dag.add_anchor(*id);
    }
    ++pos_;
    const auto first = expr(dag);
    const char c = peek();
    if (c == '&' || c == '|') {
      std::vector<std::size_t> children{first};
      while (peek() == c) {
        ++pos_;
        children.push_back(expr(dag));
      }
      if (peek() != ')') error("expected ')'");
      ++pos_;
      return c == '&' ? dag.add_intersect(std::move(children))
                      : dag.add_union(std::move(children));
    }
    if (c == ')' || c == '\0') error("expected a relation name or operator");
    const auto at = pos_;
    const auto rel = name();
    auto id = relations_.find(rel);
    if (!id) {
      pos_ = at;
      error("unknown relation '" + std::string(rel) + "'");
    }
    if (peek() != ')') error("expected ')'");
    ++pos_;
    return dag.add_translate(first, *id);
  }

  std::string_view text_;
  const Vocabulary& entities_;
  const Vocabulary& relations_;
  std::size_t pos_ = 0;
};

void merge_into(std::vector<EntityId>& acc, std::span<const EntityId> more) {
  std::vector<EntityId> out;
  out.reserve(acc.size() + more.size());
  std::set_union(acc.begin(), acc.end(), more.begin(), more.end(),
                 std::back_inserter(out));
  acc = std::move(out);
}

}  // namespace

std::string_view to_string(QueryType type) {
  for (const auto& t : kTypeNames) {
    if (t.type == type) return t.ascii;
  }
  return "?";
}

QueryType parse_query_type(std::string_view text) {
  for (const auto& t : kTypeNames) {
    if (text == t.ascii || text == t.symbol) return t.type;
  }
  throw InvalidArgument("unknown query type '" + std::string(text) + "'");
}

std::vector<QueryType> parse_query_types(std::string_view text) {
  if (text == "all") return {std::begin(kAllQueryTypes), std::end(kAllQueryTypes)};
  std::vector<QueryType> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const auto part = text.substr(start, comma == std::string_view::npos
                                             ? std::string_view::npos
                                             : comma - start);
    const auto t = parse_query_type(part);
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::size_t QueryDag::add_anchor(EntityId entity) {
  nodes.push_back({NodeKind::Anchor, entity, {}});
  root = nodes.size() - 1;
  return root;
}

std::size_t QueryDag::add_translate(std::size_t child, RelationId relation) {
  nodes.push_back({NodeKind::Translate, relation, {child}});
  root = nodes.size() - 1;
  return root;
}

std::size_t QueryDag::add_intersect(std::vector<std::size_t> children) {
  nodes.push_back({NodeKind::Intersect, -1, std::move(children)});
  root = nodes.size() - 1;
  return root;
}

std::size_t QueryDag::add_union(std::vector<std::size_t> children) {
  nodes.push_back({NodeKind::Union, -1, std::move(children)});
  root = nodes.size() - 1;
  return root;
}

QueryDag make_query(QueryType type, std::span<const EntityId> anchors,
                    std::span<const RelationId> relations) {
  std::size_t ai = 0, ri = 0;
  auto anchor = [&](QueryDag& d) {
    if (ai >= anchors.size()) throw InvalidArgument("make_query: too few anchors");
    return d.add_anchor(anchors[ai++]);
  };
  auto tr = [&](QueryDag& d, std::size_t child) {
    if (ri >= relations.size()) throw InvalidArgument("make_query: too few relations");
    return d.add_translate(child, relations[ri++]);
  };
  QueryDag d;
  switch (type) {
    case QueryType::T1: tr(d, anchor(d)); break;
    case QueryType::T2: tr(d, tr(d, anchor(d))); break;
    case QueryType::T3: tr(d, tr(d, tr(d, anchor(d)))); break;
    case QueryType::I2: {
      auto a = tr(d, anchor(d));
      auto b = tr(d, anchor(d));
      d.add_intersect({a, b});
      break;
    }
    case QueryType::I3: {
      auto a = tr(d, anchor(d));
      auto b = tr(d, anchor(d));
      auto c = tr(d, anchor(d));
      d.add_intersect({a, b, c});
      break;
    }
    case QueryType::U2: {
      auto a = tr(d, anchor(d));
      auto b = tr(d, anchor(d));
      d.add_union({a, b});
      break;
    }
    case QueryType::IT: {
      auto a = tr(d, anchor(d));
      auto b = tr(d, anchor(d));
      tr(d, d.add_intersect({a, b}));
      break;
    }
    case QueryType::TI: {
      auto a = tr(d, tr(d, anchor(d)));
      auto b = tr(d, anchor(d));
      d.add_intersect({a, b});
      break;
    }
    case QueryType::UT: {
      auto a = tr(d, anchor(d));
      auto b = tr(d, anchor(d));
      tr(d, d.add_union({a, b}));
      break;
    }
  }
  if (ai != anchors.size() || ri != relations.size()) {
    throw InvalidArgument("make_query: too many anchors or relations");
  }
  d.type = type;
  return d;
}

std::optional<QueryType> classify(const QueryDag& dag) {
  if (dag.nodes.empty()) return std::nullopt;
  const auto sig = shape_signature(dag, dag.root);
  for (const auto& t : kTypeNames) {
    if (sig == t.signature) return t.type;
  }
  return std::nullopt;
}

void validate(const QueryDag& dag) {
  if (dag.nodes.empty()) throw InvalidArgument("query has no nodes");
  if (dag.root >= dag.nodes.size()) throw InvalidArgument("query root out of range");
  std::vector<int> parents(dag.nodes.size(), 0);
  for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
    const auto& n = dag.nodes[i];
    switch (n.kind) {
      case NodeKind::Anchor:
        if (!n.children.empty()) throw InvalidArgument("anchor with children");
        break;
      case NodeKind::Translate:
        if (n.children.size() != 1) throw InvalidArgument("translate needs one child");
        break;
      case NodeKind::Intersect:
      case NodeKind::Union:
        if (n.children.size() < 2) {
          throw InvalidArgument("set operator needs at least two children");
        }
        break;
    }
    for (auto c : n.children) {
      if (c >= dag.nodes.size()) throw InvalidArgument("child index out of range");
      ++parents[c];
    }
  }
  if (parents[dag.root] != 0) throw InvalidArgument("root has a parent");
  // Walk from the root; a tree visits every node exactly once.
  std::vector<char> seen(dag.nodes.size(), 0);
  std::vector<std::size_t> stack{dag.root};
  std::size_t visited = 0;
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    if (seen[n]) throw InvalidArgument("query graph is not a tree");
    seen[n] = 1;
    ++visited;
    for (auto c : dag.nodes[n].children) stack.push_back(c);
  }
  if (visited != dag.nodes.size()) throw InvalidArgument("query has unreachable nodes");
  for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
    if (i != dag.root && parents[i] != 1) {
      throw InvalidArgument("query node " + std::to_string(i) +
                            " does not have exactly one parent");
    }
  }
  if (dag.type && classify(dag) != dag.type) {
    throw InvalidArgument("query shape does not match type tag " +
                          std::string(to_string(*dag.type)));
  }
}

void validate(const QueryDag& dag, const KnowledgeGraph& kg) {
  validate(dag);
  for (const auto& n : dag.nodes) {
    if (n.kind == NodeKind::Anchor) kg.check_entity(n.id);
    if (n.kind == NodeKind::Translate) kg.check_relation(n.id);
  }
}

QueryDag parse_query(std::string_view text, const Vocabulary& entities,
                     const Vocabulary& relations) {
  return Parser(text, entities, relations).parse();
}

std::string serialize_query(const QueryDag& dag, const Vocabulary& entities,
                            const Vocabulary& relations) {
  auto check_name = [](const std::string& name) -> const std::string& {
    for (char c : name) {
      if (is_space(c) || is_special(c)) {
        throw FormatError("name '" + name + "' cannot be written in query text");
      }
    }
    return name;
  };
  std::function<std::string(std::size_t)> rec = [&](std::size_t n) -> std::string {
    const auto& node = dag.nodes.at(n);
    switch (node.kind) {
      case NodeKind::Anchor:
        return check_name(entities.name(node.id));
      case NodeKind::Translate:
        return "(" + rec(node.children.at(0)) + " " +
               check_name(relations.name(node.id)) + ")";
      case NodeKind::Intersect:
      case NodeKind::Union: {
        const char* sep = node.kind == NodeKind::Intersect ? " & " : " | ";
        std::string out = "(";
        for (std::size_t i = 0; i < node.children.size(); ++i) {
          if (i) out += sep;
          out += rec(node.children[i]);
        }
        return out + ")";
      }
    }
    return {};
  };
  return rec(dag.root);
}

std::vector<EntityId> enumerate_answers_at(const QueryDag& dag, std::size_t n,
                                           const Adjacency& adj) {
  const auto& node = dag.nodes.at(n);
  switch (node.kind) {
    case NodeKind::Anchor:
      return {node.id};
    case NodeKind::Translate: {
      const auto from = enumerate_answers_at(dag, node.children.at(0), adj);
      std::vector<EntityId> out;
      for (auto e : from) {
        const auto tails = adj.tails(e, node.id);
        out.insert(out.end(), tails.begin(), tails.end());
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      return out;
    }
    case NodeKind::Intersect: {
      auto acc = enumerate_answers_at(dag, node.children.at(0), adj);
      for (std::size_t i = 1; i < node.children.size() && !acc.empty(); ++i) {
        const auto next = enumerate_answers_at(dag, node.children[i], adj);
        std::vector<EntityId> out;
        std::set_intersection(acc.begin(), acc.end(), next.begin(), next.end(),
                              std::back_inserter(out));
        acc = std::move(out);
      }
      return acc;
    }
    case NodeKind::Union: {
      std::vector<EntityId> acc;
      for (auto c : node.children) merge_into(acc, enumerate_answers_at(dag, c, adj));
      return acc;
    }
  }
  return {};
}

std::vector<EntityId> enumerate_answers(const QueryDag& dag, const Adjacency& adj) {
  return enumerate_answers_at(dag, dag.root, adj);
}

std::vector<EntityId> enumerate_answers(const QueryDag& dag,
                                        const KnowledgeGraph& kg, SplitMask mask) {
  validate(dag, kg);
  return enumerate_answers(dag, kg.adjacency(mask));
}

}  // namespace gkg
