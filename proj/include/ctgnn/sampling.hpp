#pragma once

// Constant-query estimator. sampled_embed draws r^(l) neighbors uniformly
// with replacement at each level of a fresh recursion tree, so its query cost
// depends only on the schedule and the model, never on the graph size.
//
// Seeding contract: a call seeded with s draws its sample indices from the
// stream Rng(s); the recursive sub-estimate for child k at layer l runs on
// derive_seed(s, l, k), where k = 0 is the node's own lower-layer estimate
// and k = 1..r are the sampled neighbors. Identical seeds reproduce
// identical estimates bit for bit.

#include <cstdint>
#include <functional>

#include "ctgnn/exact.hpp"
#include "ctgnn/graph.hpp"
#include "ctgnn/model.hpp"

namespace ctgnn {

struct ToleranceSpec {
  double epsilon = 0.1;  // additive error target, per coordinate deviation bound
  double delta = 0.05;   // failure probability
  double bound_b = 1.0;  // uniform bound on the aggregated summands
  int dim = 1;           // embedding width the union bound runs over
};

// Smallest r with 2 d exp(-r eps^2 / (2 B^2 d)) <= delta. Evaluated as
// ceil((2 B^2 d / eps^2) ln(2d / delta)) with a boundary correction so exact
// equality cases are not pushed up by rounding.
int required_samples(const ToleranceSpec& tol);

struct SampleSchedule {
  std::vector<int> r;  // r[l-1] = samples drawn at layer l

  int layers() const { return static_cast<int>(r.size()); }
  void validate() const;
};

// Per-layer counts for an L-layer model meeting (epsilon, delta) overall:
// the top layer gets (eps/2, delta/2) and each inner layer l gets
// (eps/(2L), delta/(4 r^(l+1))), tightening as the number of dependent
// sub-estimates grows.
SampleSchedule default_schedule(int layers, const ToleranceSpec& tol);

EmbedResult sampled_embed(const GraphView& g, const ModelSpec& spec, const Params& p, int v,
                          const SampleSchedule& sched, std::uint64_t seed);

// Deterministic-draw variant for enumeration tests: picker(v, layer, k)
// returns the neighbor-list index of the k-th draw (0-based k in [0, r)).
using NeighborPicker = std::function<int(int v, int layer, int k)>;
EmbedResult sampled_embed_with_picker(const GraphView& g, const ModelSpec& spec, const Params& p,
                                      int v, const SampleSchedule& sched,
                                      const NeighborPicker& picker);

// Jacobian of the sampled embedding produced by the identical seed: the
// forward pass is the same tree sampled_embed builds, differentiated in
// reverse over the stored intermediates.
GradTensor sampled_gradient(const GraphView& g, const ModelSpec& spec, const Params& p, int v,
                            const SampleSchedule& sched, std::uint64_t seed);

// Mean of sampled_embed over num_nodes uniformly drawn nodes (with
// replacement); estimates the graph-level mean embedding.
EmbedResult sampled_graph_embed(const GraphView& g, const ModelSpec& spec, const Params& p,
                                int num_nodes, const SampleSchedule& sched, std::uint64_t seed);

// Diagnostic for gat: reruns the estimate of sampled_embed(.., seed) and
// returns the attention weight vector of every aggregation in the recursion.
std::vector<std::vector<double>> sampled_attention_trace(const GraphView& g,
                                                         const ModelSpec& spec, const Params& p,
                                                         int v, const SampleSchedule& sched,
                                                         std::uint64_t seed);

}  // namespace ctgnn
