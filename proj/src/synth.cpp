#include "ctgnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ctgnn/rng.hpp"

namespace ctgnn {

std::vector<double> normal_features(int n, int dim, std::uint64_t seed) {
  Rng rng(mix64(seed));
  std::vector<double> x(static_cast<std::size_t>(n) * dim);
  for (double& v : x) v = rng.normal();
  return x;
}

Graph gen_clique_with_features(int n, std::vector<double> features, int feat_dim) {
  if (n < 2) throw std::invalid_argument("gen_clique: need at least two nodes");
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return build_graph(n, edges, std::move(features), feat_dim);
}

Graph gen_clique(int n, int feat_dim, std::uint64_t feature_seed) {
  return gen_clique_with_features(n, normal_features(n, feat_dim, feature_seed), feat_dim);
}

Graph gen_star(int n, int feat_dim, std::uint64_t feature_seed) {
  if (n < 2) throw std::invalid_argument("gen_star: need at least two nodes");
  std::vector<std::pair<int, int>> edges;
  edges.reserve(n - 1);
  for (int v = 1; v < n; ++v) edges.emplace_back(0, v);
  return build_graph(n, edges, normal_features(n, feat_dim, feature_seed), feat_dim);
}

Graph gen_ba(int n, int attach, std::uint64_t seed, int feat_dim, std::uint64_t feature_seed) {
  if (attach < 1) throw std::invalid_argument("gen_ba: attach must be >= 1");
  if (n < attach + 2) throw std::invalid_argument("gen_ba: need at least attach+2 nodes");
  Rng rng(mix64(seed));
  std::vector<std::pair<int, int>> edges;
  std::vector<int> pool;  // one entry per edge endpoint, so draws are degree-proportional
  for (int i = 0; i <= attach; ++i)
    for (int j = i + 1; j <= attach; ++j) {
      edges.emplace_back(i, j);
      pool.push_back(i);
      pool.push_back(j);
    }
  std::vector<int> chosen;
  for (int v = attach + 1; v < n; ++v) {
    chosen.clear();
    while (static_cast<int>(chosen.size()) < attach) {
      const int u = pool[rng.bounded(static_cast<int>(pool.size()))];
      if (std::find(chosen.begin(), chosen.end(), u) == chosen.end()) chosen.push_back(u);
    }
    for (int u : chosen) {
      edges.emplace_back(v, u);
      pool.push_back(v);
      pool.push_back(u);
    }
  }
  return build_graph(n, edges, normal_features(n, feat_dim, feature_seed), feat_dim);
}

Graph gen_er(int n, double p, std::uint64_t seed, int feat_dim, std::uint64_t feature_seed) {
  if (n < 1) throw std::invalid_argument("gen_er: need at least one node");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("gen_er: p must lie in [0, 1]");
  Rng rng(mix64(seed));
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.next_unit() < p) edges.emplace_back(i, j);
  return build_graph(n, edges, normal_features(n, feat_dim, feature_seed), feat_dim);
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::shared_ptr<CliqueView> clique_features(int n, int dim, bool self_loops) {
  return std::make_shared<CliqueView>(n, std::vector<double>(static_cast<std::size_t>(n) * dim),
                                      dim, self_loops);
}

Mat mat1x1(double v) {
  Mat w(1, 1);
  w.at(0, 0) = v;
  return w;
}

}  // namespace

Fixture counterexample(const std::string& id, int n) {
  if (n < 4) throw std::invalid_argument("counterexample: constructions need n >= 4");
  Fixture f;
  f.id = id;

  if (id == "unbounded_feature") {
    // One node carries a feature that grows with n; the aggregate stays O(1)
    // but any trial that misses that node estimates from an all-zero sample.
    auto a = clique_features(n, 1, true);
    auto b = clique_features(n, 1, true);
    b->mutable_feature(0)[0] = static_cast<double>(n);
    f.graph_a = a;
    f.graph_b = b;
    f.spec = {Variant::sage_gcn, Activation::sigmoid, 1, {1, 1}};
    f.params.weights.push_back(mat1x1(1.0));
    f.target_node = 1;
    f.exact_a = {sigmoid(0.0)};
    f.exact_b = {sigmoid(1.0)};
    f.expected =
        "Exact embeddings are sigmoid(0) and sigmoid(1). The estimator is unbiased, but the "
        "informative summand has magnitude n/deg = 1, carried by a single node: a sample that "
        "misses node 0 yields sigmoid(0) regardless of r, so the error stays Omega(1) until r "
        "grows with n.";
    return f;
  }

  if (id == "normalization") {
    // Projection onto the unit sphere keeps the two inputs' exact embeddings
    // orthogonal at every n, while the unnormalized aggregates both shrink
    // to zero and a missed sample collapses to the zero vector.
    auto a = clique_features(n, 2, true);
    auto b = clique_features(n, 2, true);
    a->mutable_feature(0)[0] = 1.0;
    b->mutable_feature(0)[1] = 1.0;
    f.graph_a = a;
    f.graph_b = b;
    f.spec = {Variant::sage_gcn, Activation::relu_normalize, 1, {2, 2}};
    Mat w(2, 2);
    w.at(0, 0) = 1.0;
    w.at(1, 1) = 1.0;
    f.params.weights.push_back(w);
    f.target_node = 0;
    f.exact_a = {1.0, 0.0};
    f.exact_b = {0.0, 1.0};
    f.expected =
        "Exact embeddings are (1,0) vs (0,1): normalization rescales the shrinking aggregate "
        "x0/n back to unit length. A sampled batch that never draws node 0 aggregates to the "
        "zero vector, which normalizes to zero, at distance 1 from both exact answers.";
    return f;
  }

  if (id == "relu_gradient") {
    // The exact pre-activation sits at +1/n; a sample that misses node 0
    // lands exactly on the ReLU kink, where the derivative is taken as 0.
    auto a = clique_features(n, 2, true);
    auto b = clique_features(n, 2, true);
    for (int v = 0; v < n; ++v) {
      a->mutable_feature(v)[0] = 1.0;
      a->mutable_feature(v)[1] = 1.0;
      b->mutable_feature(v)[0] = 1.0;
      b->mutable_feature(v)[1] = 1.0;
    }
    a->mutable_feature(0)[1] = 2.0;
    b->mutable_feature(0)[1] = 0.0;
    f.graph_a = a;
    f.graph_b = b;
    f.spec = {Variant::sage_gcn, Activation::relu, 1, {2, 1}};
    Mat w(1, 2);
    w.at(0, 0) = -1.0;
    w.at(0, 1) = 1.0;
    f.params.weights.push_back(w);
    f.target_node = 0;
    f.is_gradient = true;
    const double inv = 1.0 / static_cast<double>(n);
    f.exact_a = {1.0, 1.0 + inv};  // d z / d W = h while the unit is active
    f.exact_b = {0.0, 0.0};        // pre-activation -1/n < 0, unit dead
    f.expected =
        "With x0=(1,2) the exact pre-activation is +1/n, so the exact gradient is h = "
        "(1, 1+1/n); with x0=(1,0) it is -1/n and the gradient is zero. A sampled batch that "
        "misses node 0 aggregates to exactly (1,1), pre-activation exactly 0, where ReLU's "
        "derivative is defined as 0: the gradient estimate is identically zero with "
        "probability (1-1/n)^r, an Omega(1) error that no fixed r removes.";
    return f;
  }

  if (id == "pool") {
    // Max-pooling depends on a single witness neighbor; missing it cannot be
    // compensated by reweighting.
    auto a = clique_features(n, 1, false);
    auto b = clique_features(n, 1, false);
    b->mutable_feature(0)[0] = 1.0;
    f.graph_a = a;
    f.graph_b = b;
    f.spec = {Variant::sage_pool, Activation::sigmoid, 1, {1, 1}};
    f.params.weights.push_back(mat1x1(1.0));
    f.params.pool_bias = {0.0};
    f.target_node = 1;
    f.exact_a = {sigmoid(0.0)};
    f.exact_b = {sigmoid(1.0)};
    f.expected =
        "Exact pooled outputs are sigmoid(0) vs sigmoid(1), separated only by node 0. The "
        "sampled max over r draws misses node 0 with probability (1-1/(n-1))^r and then "
        "returns sigmoid(0) exactly, so the two inputs are indistinguishable and the error is "
        "Omega(1).";
    return f;
  }

  if (id == "gcn_star") {
    // Symmetric normalization on a star: roughly sqrt(2n) unit leaves keep
    // the center's exact pre-activation Theta(1), but each sampled summand
    // is scaled by deg_v/sqrt(deg_v) = sqrt(n-1), so single-draw variance
    // does not vanish.
    const int k = static_cast<int>(std::floor(std::sqrt(2.0 * n)));
    if (k > n - 1) throw std::invalid_argument("counterexample: star too small for gcn_star");
    std::vector<double> fa(static_cast<std::size_t>(n), 0.0);
    std::vector<double> fb = fa;
    for (int v = 1; v <= k; ++v) fb[v] = 1.0;
    std::vector<std::pair<int, int>> edges;
    for (int v = 1; v < n; ++v) edges.emplace_back(0, v);
    f.graph_a = std::make_shared<Graph>(build_graph(n, edges, std::move(fa), 1));
    f.graph_b = std::make_shared<Graph>(build_graph(n, edges, std::move(fb), 1));
    f.spec = {Variant::gcn, Activation::sigmoid, 1, {1, 1}};
    f.params.weights.push_back(mat1x1(1.0));
    f.target_node = 0;
    f.exact_a = {sigmoid(0.0)};
    f.exact_b = {sigmoid(static_cast<double>(k) / std::sqrt(static_cast<double>(n - 1)))};
    f.expected =
        "At the hub, symmetric normalization gives the exact pre-activation k/sqrt(n-1) (about "
        "sqrt(2)), computed here analytically rather than quoted as sigmoid(1). Each sampled "
        "message is blown up by deg/r before the 1/sqrt(deg) scaling, so the per-draw summands "
        "have magnitude sqrt(n-1)/r and the estimate keeps Omega(1) error at any fixed r.";
    return f;
  }

  throw std::invalid_argument("counterexample: unknown id '" + id + "'");
}

}  // namespace ctgnn
