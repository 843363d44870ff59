#include "gkg/compile.hpp"

#include <string>

#include "gkg/aggregator.hpp"
#include "gkg/error.hpp"

namespace gkg {

namespace {

[[noreturn]] void rethrow_at(std::size_t node, const NumericError& e) {
  throw NumericError("query node " + std::to_string(node) + ": " + e.what());
}

}  // namespace

CompiledQuery compile_traced(const QueryDag& dag, const EmbeddingTable& table,
                             const CompileOptions& options) {
  using Op = CompiledQuery::Op;
  validate(dag);
  CompiledQuery out;
  auto& steps = out.steps_;

  auto densities = [&](const std::vector<std::size_t>& comps) {
    std::vector<GaussianDensity> v;
    v.reserve(comps.size());
    for (auto c : comps) v.push_back(steps[c].value);
    return v;
  };
  auto cap = [&](std::vector<std::size_t>& comps) {
    if (options.max_components == 0 || comps.size() <= options.max_components) return;
    auto d = densities(comps);
    Vector w = aggregate_weights(d, table.aggregator);
    GaussianMixture m(std::move(d), std::move(w));
    const auto kept = cap_components(m, options.max_components);
    std::vector<std::size_t> next;
    for (auto k : kept) next.push_back(comps[k]);
    comps = std::move(next);
  };

  auto eval = [&](auto&& self, std::size_t n) -> std::vector<std::size_t> {
    const auto& node = dag.nodes[n];
    switch (node.kind) {
      case NodeKind::Anchor:
        steps.push_back({Op::Entity, node.id, 0, 0, table.entity(node.id)});
        return {steps.size() - 1};
      case NodeKind::Translate: {
        auto comps = self(self, node.children[0]);
        steps.push_back({Op::Relation, node.id, 0, 0, table.relation(node.id)});
        const auto rel = steps.size() - 1;
        for (auto& c : comps) {
          auto value = translate(steps[c].value, steps[rel].value, options.limit);
          steps.push_back({Op::Translate, -1, c, rel, std::move(value)});
          c = steps.size() - 1;
        }
        return comps;
      }
      case NodeKind::Intersect: {
        auto acc = self(self, node.children[0]);
        for (std::size_t i = 1; i < node.children.size(); ++i) {
          const auto next = self(self, node.children[i]);
          std::vector<std::size_t> pairs;
          for (auto a : acc) {
            for (auto b : next) {
              try {
                auto value = product(steps[a].value, steps[b].value, options.limit,
                                     "step " + std::to_string(a),
                                     "step " + std::to_string(b));
                steps.push_back({Op::Product, -1, a, b, std::move(value)});
              } catch (const NumericError& e) {
                rethrow_at(n, e);
              }
              pairs.push_back(steps.size() - 1);
            }
          }
          acc = std::move(pairs);
          cap(acc);
        }
        return acc;
      }
      case NodeKind::Union: {
        std::vector<std::size_t> acc;
        for (auto c : node.children) {
          const auto part = self(self, c);
          acc.insert(acc.end(), part.begin(), part.end());
        }
        cap(acc);
        return acc;
      }
    }
    return {};
  };

  out.root_steps_ = eval(eval, dag.root);
  auto comps = densities(out.root_steps_);
  Vector w = aggregate_weights(comps, table.aggregator);
  out.mixture_ = GaussianMixture(std::move(comps), std::move(w));
  return out;
}

GaussianMixture compile(const QueryDag& dag, const EmbeddingTable& table,
                        const CompileOptions& options) {
  return compile_traced(dag, table, options).mixture();
}

void CompiledQuery::backward(const std::vector<DensityGrad>& component_grads,
                             const Vector& weight_grad, const EmbeddingTable& table,
                             TableGradient& out) const {
  const Index d = mixture_.dim();
  std::vector<DensityGrad> grads(steps_.size());
  auto at = [&](std::size_t s) -> DensityGrad& {
    if (grads[s].mean.size() == 0) grads[s] = DensityGrad(d);
    return grads[s];
  };
  for (std::size_t i = 0; i < root_steps_.size(); ++i) {
    if (i < component_grads.size()) at(root_steps_[i]) += component_grads[i];
  }
  if (weight_grad.size() && table.aggregator.mode != AggregatorMode::Average) {
    auto wb = aggregate_weights_backward(mixture_.components, table.aggregator,
                                         weight_grad);
    out.add_aggregator(wb.theta);
    for (std::size_t i = 0; i < root_steps_.size(); ++i) {
      at(root_steps_[i]) += wb.components[i];
    }
  }
  for (std::size_t s = steps_.size(); s-- > 0;) {
    if (grads[s].mean.size() == 0) continue;
    const auto& step = steps_[s];
    const auto& g = grads[s];
    switch (step.op) {
      case Op::Entity: {
        const Matrix gf = factor_grad(g.precision, step.value.factor);
        out.add_entity(step.param, g.mean, &gf);
        break;
      }
      case Op::Relation:
        out.add_relation(step.param, g.mean, factor_grad(g.precision, step.value.factor));
        break;
      case Op::Translate:
        at(step.lhs) += g;
        at(step.rhs) += g;
        break;
      case Op::Product: {
        const auto pg = grad_through_product(g, steps_[step.lhs].value,
                                             steps_[step.rhs].value);
        at(step.lhs) += pg.lhs;
        at(step.rhs) += pg.rhs;
        break;
      }
    }
  }
}

}  // namespace gkg
