#pragma once

// Graph storage and the counted access interface the engines run against.
//
// Engines never touch adjacency or features directly; they go through the
// oracle_* helpers, which bump a QueryLog counter per successful probe. That
// makes query complexity a measured quantity rather than an estimate.
//
// Two concrete graph types:
//   Graph      - CSR adjacency plus a dense feature matrix, built by loaders
//                and generators.
//   CliqueView - an implicit complete graph. Adjacency is computed on the
//                fly, so complete graphs with 10^5 nodes cost O(n d) memory
//                instead of O(n^2).

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctgnn {

struct QueryLog {
  std::int64_t degree_queries = 0;
  std::int64_t neighbor_queries = 0;
  std::int64_t feature_queries = 0;

  std::int64_t total() const { return degree_queries + neighbor_queries + feature_queries; }

  QueryLog& operator+=(const QueryLog& o) {
    degree_queries += o.degree_queries;
    neighbor_queries += o.neighbor_queries;
    feature_queries += o.feature_queries;
    return *this;
  }
  friend bool operator==(const QueryLog&, const QueryLog&) = default;
};

class GraphView {
 public:
  virtual ~GraphView() = default;

  virtual int n() const = 0;
  virtual int feature_dim() const = 0;
  virtual int degree(int v) const = 0;
  virtual int neighbor(int v, int i) const = 0;
  virtual const double* feature(int v) const = 0;

  // Fill out[0..degree(v)) with the neighbor list in ascending order.
  virtual void neighbors_into(int v, int* out) const {
    const int d = degree(v);
    for (int i = 0; i < d; ++i) out[i] = neighbor(v, i);
  }
};

// CSR graph: undirected, neighbor lists sorted ascending, no duplicate
// entries; a self-loop appears once in its own list. Features are row-major
// n x feature_dim. Edge features are carried along when present but none of
// the model variants consume them.
class Graph final : public GraphView {
 public:
  std::vector<std::int64_t> row_ptr;  // size n+1
  std::vector<int> adj;               // size row_ptr[n]
  std::vector<double> features;       // size n * feat_dim
  int feat_dim = 0;
  std::vector<double> edge_features;  // optional, row-major per directed adj entry
  int edge_feat_dim = 0;

  int n() const override { return static_cast<int>(row_ptr.empty() ? 0 : row_ptr.size() - 1); }
  int feature_dim() const override { return feat_dim; }
  int degree(int v) const override { return static_cast<int>(row_ptr[v + 1] - row_ptr[v]); }
  int neighbor(int v, int i) const override { return adj[row_ptr[v] + i]; }
  const double* feature(int v) const override {
    return features.data() + static_cast<std::size_t>(v) * feat_dim;
  }
  void neighbors_into(int v, int* out) const override;
};

// Implicit complete graph on n nodes. With `self_loops` every node is
// adjacent to all n nodes including itself; without, to the other n-1.
class CliqueView final : public GraphView {
 public:
  CliqueView(int n, std::vector<double> features, int feat_dim, bool self_loops)
      : n_(n), feat_dim_(feat_dim), self_loops_(self_loops), features_(std::move(features)) {
    if (n_ <= 0) throw std::invalid_argument("CliqueView: need at least one node");
    if (features_.size() != static_cast<std::size_t>(n_) * feat_dim_)
      throw std::invalid_argument("CliqueView: feature matrix has wrong size");
  }

  int n() const override { return n_; }
  int feature_dim() const override { return feat_dim_; }
  int degree(int) const override { return self_loops_ ? n_ : n_ - 1; }
  int neighbor(int v, int i) const override { return self_loops_ ? i : (i < v ? i : i + 1); }
  const double* feature(int v) const override {
    return features_.data() + static_cast<std::size_t>(v) * feat_dim_;
  }
  void neighbors_into(int v, int* out) const override;

  bool has_self_loops() const { return self_loops_; }
  double* mutable_feature(int v) {
    return features_.data() + static_cast<std::size_t>(v) * feat_dim_;
  }

 private:
  int n_;
  int feat_dim_;
  bool self_loops_;
  std::vector<double> features_;
};

// ---- counted access -------------------------------------------------------

inline int oracle_degree(const GraphView& g, int v, QueryLog& log) {
  if (v < 0 || v >= g.n()) throw std::out_of_range("oracle_degree: node id out of range");
  ++log.degree_queries;
  return g.degree(v);
}

inline int oracle_neighbor(const GraphView& g, int v, int i, QueryLog& log) {
  if (v < 0 || v >= g.n()) throw std::out_of_range("oracle_neighbor: node id out of range");
  if (i < 0 || i >= g.degree(v)) throw std::out_of_range("oracle_neighbor: index out of range");
  ++log.neighbor_queries;
  return g.neighbor(v, i);
}

inline std::span<const double> oracle_feature(const GraphView& g, int v, QueryLog& log) {
  if (v < 0 || v >= g.n()) throw std::out_of_range("oracle_feature: node id out of range");
  ++log.feature_queries;
  return {g.feature(v), static_cast<std::size_t>(g.feature_dim())};
}

// Reads the whole neighbor list of v, charged as degree(v) neighbor probes.
inline void oracle_neighbors(const GraphView& g, int v, std::vector<int>& out, QueryLog& log) {
  if (v < 0 || v >= g.n()) throw std::out_of_range("oracle_neighbors: node id out of range");
  const int d = g.degree(v);
  out.resize(d);
  g.neighbors_into(v, out.data());
  log.neighbor_queries += d;
}

// ---- construction and utilities -------------------------------------------

// Build a CSR graph from undirected edge pairs. Pairs are symmetrized and
// deduplicated; (v, v) becomes a single self-loop entry.
Graph build_graph(int n, const std::vector<std::pair<int, int>>& edges,
                  std::vector<double> features, int feat_dim);

// Parse an edge-list text ("u v" per line, '#' comments allowed) and a
// headerless feature CSV (row i = features of node i). Node count is the
// number of CSV rows; an edge endpoint >= n or a ragged CSV row throws
// std::invalid_argument.
Graph load_graph(const std::string& edge_list_text, const std::string& feature_csv_text);

// File-reading convenience wrapper around load_graph.
Graph load_graph_files(const std::string& edge_path, const std::string& feature_path);

std::string graph_to_edge_list(const GraphView& g);
std::string features_to_csv(const GraphView& g);

// Copy with a self-loop added to every node that lacks one. Idempotent; also
// the supported repair for degree-0 nodes.
Graph with_self_loops(const Graph& g);

// max degree / min degree. Throws std::domain_error when some node has
// degree 0 (the ratio is meaningless and most models cannot run).
double degree_ratio(const GraphView& g);

}  // namespace ctgnn
