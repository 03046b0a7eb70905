#pragma once

// Reference engine. Embeddings are evaluated bottom-up over the receptive
// field of the target node only, so the measured query cost is exactly the
// cost the recursion forces (Theta(n^2) for two layers on a complete graph).
// Gradients run reverse mode over the stored forward pass and return the full
// Jacobian of the output embedding with respect to every parameter block.

#include <vector>

#include "ctgnn/graph.hpp"
#include "ctgnn/model.hpp"

namespace ctgnn {

// level[l] holds B_l sorted ascending: B_L = {v}, B_{l-1} = union of N(u)
// over u in B_l.
struct ReceptiveField {
  std::vector<std::vector<int>> level;  // size layers+1, level[layers] = {v}
};

ReceptiveField receptive_field(const GraphView& g, int layers, int v, QueryLog& log);

struct EmbedResult {
  Vec z;
  QueryLog queries;
};

struct Embeddings {
  int n = 0;
  int dim = 0;
  std::vector<double> values;  // row-major n x dim
  QueryLog queries;
  const double* row(int v) const { return values.data() + static_cast<std::size_t>(v) * dim; }
};

// Jacobian of the dims[L]-dimensional output with respect to each parameter
// block. Block l stores out_dim slices, each the shape of the corresponding
// parameter block, so slice i is d z[i] / d block. With a scalar output this
// collapses to one gradient per block.
struct GradTensor {
  int out_dim = 0;
  std::vector<std::vector<double>> d_weights;    // per layer: out_dim * rows * cols
  std::vector<std::vector<double>> d_attention;  // per layer: out_dim * len (gat)
  std::vector<double> d_pool_bias;               // out_dim * len (sage_pool)

  double frobenius() const;
};

// sqrt of the summed squared entrywise differences across all blocks; shapes
// must match.
double frobenius_diff(const GradTensor& x, const GradTensor& y);

EmbedResult exact_embed(const GraphView& g, const ModelSpec& spec, const Params& p, int v);

// All-nodes batch; row v is bit-identical to exact_embed(g, spec, p, v).z.
Embeddings exact_embed_all(const GraphView& g, const ModelSpec& spec, const Params& p);

GradTensor exact_gradient(const GraphView& g, const ModelSpec& spec, const Params& p, int v);

}  // namespace ctgnn
