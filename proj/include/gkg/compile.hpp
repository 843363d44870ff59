#pragma once

#include <cstddef>
#include <vector>

#include "gkg/embedding_table.hpp"
#include "gkg/gaussian.hpp"
#include "gkg/gradients.hpp"
#include "gkg/query.hpp"

namespace gkg {

struct CompileOptions {
  /// Mixtures produced by set operators keep at most this many components
  /// (lowest weights dropped, the rest renormalised).
  std::size_t max_components = 16;
  FactorLimit limit;
};

/// A compiled query together with the operator trace that produced it, so
/// gradients on the output mixture can be pulled back to the table.
class CompiledQuery {
 public:
  const GaussianMixture& mixture() const { return mixture_; }

  /// `component_grads[i]` is the gradient on root component i (mean and
  /// precision partials); `weight_grad` the gradient on the root weights.
  /// Accumulates into `out`.
  void backward(const std::vector<DensityGrad>& component_grads,
                const Vector& weight_grad, const EmbeddingTable& table,
                TableGradient& out) const;

 private:
  friend CompiledQuery compile_traced(const QueryDag&, const EmbeddingTable&,
                                      const CompileOptions&);

  enum class Op { Entity, Relation, Translate, Product };
  struct Step {
    Op op;
    std::int32_t param = -1;
    std::size_t lhs = 0;
    std::size_t rhs = 0;
    GaussianDensity value;
  };

  std::vector<Step> steps_;
  std::vector<std::size_t> root_steps_;
  GaussianMixture mixture_;
};

/// Anchor -> entity density; Translate -> mixture_translate; Intersect ->
/// mixture_intersect, distributed over component pairs when both sides are
/// mixtures; Union -> mixture_union. Numeric failures name the DAG node.
GaussianMixture compile(const QueryDag& dag, const EmbeddingTable& table,
                        const CompileOptions& options = {});

CompiledQuery compile_traced(const QueryDag& dag, const EmbeddingTable& table,
                             const CompileOptions& options = {});

}  // namespace gkg
