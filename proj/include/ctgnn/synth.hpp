#pragma once

// Synthetic inputs: graph generators for the experiment families and the
// named adversarial fixture pairs that separate the model variants under
// sampling. Each fixture carries two same-topology graphs whose exact
// outputs differ, plus the analytically derived values the exact engine must
// reproduce.

#include <memory>
#include <string>

#include "ctgnn/exact.hpp"
#include "ctgnn/graph.hpp"
#include "ctgnn/model.hpp"

namespace ctgnn {

// Row-major n x dim of i.i.d. standard normal entries.
std::vector<double> normal_features(int n, int dim, std::uint64_t seed);

Graph gen_clique(int n, int feat_dim = 10, std::uint64_t feature_seed = 1);
Graph gen_clique_with_features(int n, std::vector<double> features, int feat_dim);

// Node 0 is the hub, nodes 1..n-1 are leaves. n < 2 throws.
Graph gen_star(int n, int feat_dim = 10, std::uint64_t feature_seed = 1);

// Preferential attachment: a complete seed graph on attach+1 nodes, then
// each new node links to `attach` distinct existing nodes with probability
// proportional to degree. Total edge count is C(attach+1, 2) +
// attach * (n - attach - 1).
Graph gen_ba(int n, int attach, std::uint64_t seed, int feat_dim = 10,
             std::uint64_t feature_seed = 1);

// Erdos-Renyi: each unordered pair independently with probability p.
Graph gen_er(int n, double p, std::uint64_t seed, int feat_dim = 10,
             std::uint64_t feature_seed = 1);

struct Fixture {
  std::string id;
  std::shared_ptr<const GraphView> graph_a;  // baseline inputs
  std::shared_ptr<const GraphView> graph_b;  // adversarial inputs, same topology
  ModelSpec spec;
  Params params;
  int target_node = 0;
  // Analytic exact values at target_node for each input; entries are the
  // embedding, or the flattened weight gradient when is_gradient is set.
  Vec exact_a, exact_b;
  bool is_gradient = false;
  std::string expected;  // what the sampled estimator does here and why
};

// Known failure constructions. Valid ids: unbounded_feature, normalization,
// relu_gradient, pool, gcn_star. n is the construction size (clique or star
// order).
Fixture counterexample(const std::string& id, int n = 10000);

}  // namespace ctgnn
