#include "ctgnn/graph.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ctgnn/linalg.hpp"

namespace ctgnn {

void Graph::neighbors_into(int v, int* out) const {
  const std::int64_t b = row_ptr[v];
  const std::int64_t e = row_ptr[v + 1];
  std::memcpy(out, adj.data() + b, static_cast<std::size_t>(e - b) * sizeof(int));
}

void CliqueView::neighbors_into(int v, int* out) const {
  if (self_loops_) {
    std::iota(out, out + n_, 0);
    return;
  }
  std::iota(out, out + v, 0);
  std::iota(out + v, out + n_ - 1, v + 1);
}

Graph build_graph(int n, const std::vector<std::pair<int, int>>& edges,
                  std::vector<double> features, int feat_dim) {
  if (n <= 0) throw std::invalid_argument("build_graph: need at least one node");
  if (features.size() != static_cast<std::size_t>(n) * feat_dim)
    throw std::invalid_argument("build_graph: feature matrix has wrong size");

  std::vector<std::pair<int, int>> dir;
  dir.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw std::invalid_argument("build_graph: edge endpoint out of range");
    dir.emplace_back(u, v);
    if (u != v) dir.emplace_back(v, u);
  }
  std::sort(dir.begin(), dir.end());
  dir.erase(std::unique(dir.begin(), dir.end()), dir.end());

  Graph g;
  g.feat_dim = feat_dim;
  g.features = std::move(features);
  g.row_ptr.assign(n + 1, 0);
  for (const auto& [u, v] : dir) ++g.row_ptr[u + 1];
  for (int v = 0; v < n; ++v) g.row_ptr[v + 1] += g.row_ptr[v];
  g.adj.resize(dir.size());
  {
    std::vector<std::int64_t> fill(g.row_ptr.begin(), g.row_ptr.end() - 1);
    for (const auto& [u, v] : dir) g.adj[fill[u]++] = v;
  }
  return g;
}

namespace {

std::vector<std::pair<int, int>> parse_edge_list(const std::string& text) {
  std::vector<std::pair<int, int>> edges;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long u, v;
    if (!(ls >> u)) continue;  // blank line
    if (!(ls >> v)) throw std::invalid_argument("edge list line " + std::to_string(lineno) +
                                                ": expected two node ids");
    long long extra;
    if (ls >> extra)
      throw std::invalid_argument("edge list line " + std::to_string(lineno) +
                                  ": trailing tokens");
    if (u < 0 || v < 0)
      throw std::invalid_argument("edge list line " + std::to_string(lineno) +
                                  ": negative node id");
    edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
  }
  return edges;
}

}  // namespace

Graph load_graph(const std::string& edge_list_text, const std::string& feature_csv_text) {
  std::vector<double> feat;
  int dim = -1;
  int n = 0;
  {
    std::istringstream in(feature_csv_text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
      int count = 0;
      std::string cell;
      std::istringstream ls(line);
      while (std::getline(ls, cell, ',')) {
        std::size_t pos = 0;
        double val;
        try {
          val = std::stod(cell, &pos);
        } catch (const std::exception&) {
          throw std::invalid_argument("feature csv line " + std::to_string(lineno) +
                                      ": bad number '" + cell + "'");
        }
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        if (pos != cell.size())
          throw std::invalid_argument("feature csv line " + std::to_string(lineno) +
                                      ": bad number '" + cell + "'");
        feat.push_back(val);
        ++count;
      }
      if (dim < 0)
        dim = count;
      else if (count != dim)
        throw std::invalid_argument("feature csv line " + std::to_string(lineno) + ": expected " +
                                    std::to_string(dim) + " columns, got " +
                                    std::to_string(count));
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("feature csv has no rows");

  auto edges = parse_edge_list(edge_list_text);
  for (const auto& [u, v] : edges)
    if (u >= n || v >= n)
      throw std::invalid_argument("edge references node " + std::to_string(std::max(u, v)) +
                                  " but feature csv has only " + std::to_string(n) + " rows");
  return build_graph(n, edges, std::move(feat), dim);
}

namespace {
std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

Graph load_graph_files(const std::string& edge_path, const std::string& feature_path) {
  return load_graph(slurp(edge_path), slurp(feature_path));
}

std::string graph_to_edge_list(const GraphView& g) {
  std::string out;
  std::vector<int> nbrs;
  for (int v = 0; v < g.n(); ++v) {
    const int d = g.degree(v);
    nbrs.resize(d);
    g.neighbors_into(v, nbrs.data());
    for (int u : nbrs) {
      if (u < v) continue;  // each undirected edge once
      out += std::to_string(v);
      out += ' ';
      out += std::to_string(u);
      out += '\n';
    }
  }
  return out;
}

std::string features_to_csv(const GraphView& g) {
  std::string out;
  const int d = g.feature_dim();
  for (int v = 0; v < g.n(); ++v) {
    const double* x = g.feature(v);
    for (int j = 0; j < d; ++j) {
      if (j) out += ',';
      out += fmt_double(x[j]);
    }
    out += '\n';
  }
  return out;
}

Graph with_self_loops(const Graph& g) {
  const int n = g.n();
  Graph out;
  out.feat_dim = g.feat_dim;
  out.features = g.features;
  out.row_ptr.assign(n + 1, 0);
  std::vector<char> has_loop(n, 0);
  for (int v = 0; v < n; ++v) {
    const std::int64_t b = g.row_ptr[v];
    const std::int64_t e = g.row_ptr[v + 1];
    for (std::int64_t i = b; i < e; ++i)
      if (g.adj[i] == v) has_loop[v] = 1;
    out.row_ptr[v + 1] = e - b + (has_loop[v] ? 0 : 1);
  }
  for (int v = 0; v < n; ++v) out.row_ptr[v + 1] += out.row_ptr[v];
  out.adj.resize(out.row_ptr[n]);
  for (int v = 0; v < n; ++v) {
    std::int64_t w = out.row_ptr[v];
    bool placed = has_loop[v];
    for (std::int64_t i = g.row_ptr[v]; i < g.row_ptr[v + 1]; ++i) {
      const int u = g.adj[i];
      if (!placed && u > v) {
        out.adj[w++] = v;
        placed = true;
      }
      out.adj[w++] = u;
    }
    if (!placed) out.adj[w++] = v;
  }
  return out;
}

double degree_ratio(const GraphView& g) {
  int lo = g.degree(0), hi = lo;
  for (int v = 1; v < g.n(); ++v) {
    const int d = g.degree(v);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  if (lo == 0) throw std::domain_error("degree_ratio: graph has an isolated node");
  return static_cast<double>(hi) / static_cast<double>(lo);
}

}  // namespace ctgnn
