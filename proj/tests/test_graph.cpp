#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>
#include <stdexcept>

#include "ctgnn/graph.hpp"
#include "ctgnn/synth.hpp"
#include "doctest.h"

using namespace ctgnn;

namespace {

std::vector<int> neighbors_of(const GraphView& g, int v) {
  std::vector<int> out(g.degree(v));
  g.neighbors_into(v, out.data());
  return out;
}

void check_symmetric(const GraphView& g) {
  for (int v = 0; v < g.n(); ++v) {
    for (int u : neighbors_of(g, v)) {
      if (u == v) continue;
      auto nu = neighbors_of(g, u);
      CHECK(std::find(nu.begin(), nu.end(), v) != nu.end());
    }
  }
}

void check_sorted_unique(const GraphView& g) {
  for (int v = 0; v < g.n(); ++v) {
    auto nb = neighbors_of(g, v);
    CHECK(std::is_sorted(nb.begin(), nb.end()));
    CHECK(std::adjacent_find(nb.begin(), nb.end()) == nb.end());
  }
}

}  // namespace

TEST_CASE("load_graph smallest graph") {
  Graph g = load_graph("0 1", "1\n3\n");
  CHECK(g.n() == 2);
  CHECK(g.feature_dim() == 1);
  CHECK(g.degree(0) == 1);
  CHECK(neighbors_of(g, 0) == std::vector<int>{1});
  CHECK(g.feature(0)[0] == 1.0);
  CHECK(g.feature(1)[0] == 3.0);
}

TEST_CASE("load_graph collapses duplicate and reversed edges") {
  Graph a = load_graph("0 1", "1\n3\n");
  Graph b = load_graph("0 1\n1 0", "1\n3\n");
  CHECK(a.row_ptr == b.row_ptr);
  CHECK(a.adj == b.adj);
}

TEST_CASE("load_graph rejects malformed input") {
  CHECK_THROWS_AS(load_graph("0 5", "1\n3\n"), std::invalid_argument);
  CHECK_THROWS_AS(load_graph("0 1", "1,2\n3\n"), std::invalid_argument);  // ragged rows
  CHECK_THROWS_AS(load_graph("0 -1", "1\n3\n"), std::invalid_argument);
  CHECK_THROWS_AS(load_graph("0 x", "1\n3\n"), std::invalid_argument);
  CHECK_THROWS_AS(load_graph("0 1", "1\nx\n"), std::invalid_argument);
}

TEST_CASE("load_graph tolerates comments and blank lines") {
  Graph g = load_graph("# a comment\n\n0 1\n\n# trailing\n", "1\n3\n");
  CHECK(g.n() == 2);
  CHECK(g.degree(1) == 1);
}

TEST_CASE("isolated node comes from the feature row count") {
  Graph g = load_graph("0 1", "1\n2\n3\n");
  CHECK(g.n() == 3);
  CHECK(g.degree(2) == 0);
}

TEST_CASE("oracles return values and charge the log") {
  Graph k3 = gen_clique(3, 1, 7);
  QueryLog log;
  CHECK(oracle_degree(k3, 0, log) == 2);
  CHECK(log.degree_queries == 1);

  Graph path = load_graph("0 1\n1 2", "1\n1\n1\n");
  CHECK(oracle_neighbor(path, 1, 0, log) == 0);  // sorted adjacency
  CHECK(oracle_neighbor(path, 1, 1, log) == 2);
  CHECK(log.neighbor_queries == 2);

  for (int i = 0; i < 3; ++i) oracle_feature(k3, i, log);
  CHECK(log.feature_queries == 3);
  CHECK(log.total() == 6);
}

TEST_CASE("failed oracle calls do not count") {
  Graph g = load_graph("0 1", "1\n3\n");
  QueryLog log;
  CHECK_THROWS_AS(oracle_degree(g, 2, log), std::out_of_range);
  CHECK_THROWS_AS(oracle_degree(g, -1, log), std::out_of_range);
  CHECK_THROWS_AS(oracle_neighbor(g, 0, 1, log), std::out_of_range);
  CHECK_THROWS_AS(oracle_feature(g, 9, log), std::out_of_range);
  CHECK(log.total() == 0);
}

TEST_CASE("query log merge") {
  QueryLog a{1, 2, 3}, b{10, 20, 30};
  a += b;
  CHECK(a == QueryLog{11, 22, 33});
}

TEST_CASE("with_self_loops on K_2") {
  Graph g = with_self_loops(load_graph("0 1", "1\n3\n"));
  CHECK(g.degree(0) == 2);
  CHECK(neighbors_of(g, 0) == std::vector<int>{0, 1});
  CHECK(neighbors_of(g, 1) == std::vector<int>{0, 1});
}

TEST_CASE("with_self_loops is idempotent") {
  Graph once = with_self_loops(load_graph("0 1\n1 2", "1\n1\n1\n"));
  Graph twice = with_self_loops(once);
  CHECK(once.row_ptr == twice.row_ptr);
  CHECK(once.adj == twice.adj);
}

TEST_CASE("with_self_loops repairs an isolated node") {
  Graph g = with_self_loops(load_graph("0 1", "1\n2\n3\n"));
  CHECK(g.degree(2) == 1);
  CHECK(neighbors_of(g, 2) == std::vector<int>{2});
}

TEST_CASE("degree_ratio") {
  CHECK(degree_ratio(gen_clique(6, 1, 1)) == 1.0);
  CHECK(degree_ratio(gen_star(5, 1, 1)) == 4.0);
  CHECK_THROWS_AS(degree_ratio(load_graph("0 1", "1\n2\n3\n")), std::domain_error);

  Graph ba = gen_ba(100, 2, 3, 1, 1);
  int dmax = 0, dmin = ba.n();
  for (int v = 0; v < ba.n(); ++v) {
    dmax = std::max(dmax, ba.degree(v));
    dmin = std::min(dmin, ba.degree(v));
  }
  CHECK(degree_ratio(ba) == doctest::Approx(double(dmax) / dmin).epsilon(1e-15));
}

TEST_CASE("edge list and feature csv round-trip") {
  Graph g = gen_er(25, 0.2, 11, 3, 5);
  Graph back = load_graph(graph_to_edge_list(g), features_to_csv(g));
  CHECK(back.n() == g.n());
  CHECK(back.row_ptr == g.row_ptr);
  CHECK(back.adj == g.adj);
  for (int v = 0; v < g.n(); ++v)
    for (int j = 0; j < g.feature_dim(); ++j) CHECK(back.feature(v)[j] == g.feature(v)[j]);
}

TEST_CASE("loaders and generators keep adjacency symmetric, sorted, deduplicated") {
  check_symmetric(gen_er(30, 0.3, 5, 1, 1));
  check_sorted_unique(gen_er(30, 0.3, 5, 1, 1));
  check_symmetric(gen_ba(40, 3, 5, 1, 1));
  check_sorted_unique(gen_ba(40, 3, 5, 1, 1));
  Graph g = with_self_loops(load_graph("2 0\n0 1\n2 1\n1 0", "1\n1\n1\n"));
  check_symmetric(g);
  check_sorted_unique(g);
}

TEST_CASE("clique view matches a materialized clique") {
  const int n = 9;
  Graph dense = with_self_loops(gen_clique(n, 2, 13));
  std::vector<double> feats(dense.features);
  CliqueView view(n, feats, 2, /*self_loops=*/true);
  CHECK(view.n() == n);
  for (int v = 0; v < n; ++v) {
    CHECK(view.degree(v) == dense.degree(v));
    CHECK(neighbors_of(view, v) == neighbors_of(dense, v));
    for (int j = 0; j < 2; ++j) CHECK(view.feature(v)[j] == dense.feature(v)[j]);
  }

  Graph open = gen_clique(n, 2, 13);
  CliqueView open_view(n, feats, 2, /*self_loops=*/false);
  for (int v = 0; v < n; ++v) {
    CHECK(open_view.degree(v) == open.degree(v));
    CHECK(neighbors_of(open_view, v) == neighbors_of(open, v));
  }
}

TEST_CASE("build_graph validates endpoints") {
  CHECK_THROWS_AS(build_graph(2, {{0, 2}}, {1.0, 2.0}, 1), std::invalid_argument);
  Graph g = build_graph(3, {{0, 1}, {1, 0}, {1, 2}}, {1, 2, 3}, 1);
  CHECK(g.degree(1) == 2);
  CHECK(neighbors_of(g, 1) == std::vector<int>{0, 2});
}
