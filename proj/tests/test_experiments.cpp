#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "ctgnn/experiments.hpp"
#include "ctgnn/graph.hpp"
#include "ctgnn/synth.hpp"
#include "doctest.h"

using namespace ctgnn;

namespace {

std::vector<double> errors_at(const std::vector<TrialRecord>& rows, int r,
                              const std::string& experiment = "") {
  std::vector<double> out;
  for (const auto& row : rows)
    if (row.r == r && (experiment.empty() || row.experiment == experiment))
      out.push_back(row.error);
  return out;
}

}  // namespace

TEST_CASE("nearest-rank percentile") {
  std::vector<double> v{15, 20, 35, 40, 50};
  CHECK(percentile_nearest_rank(v, 30) == 20.0);   // ceil(1.5) = 2nd
  CHECK(percentile_nearest_rank(v, 40) == 20.0);   // ceil(2.0) = 2nd
  CHECK(percentile_nearest_rank(v, 50) == 35.0);
  CHECK(percentile_nearest_rank(v, 100) == 50.0);
  CHECK(percentile_nearest_rank(v, 1) == 15.0);
  CHECK(percentile_nearest_rank({7.0}, 99) == 7.0);
  std::vector<double> unsorted{3, 1, 2};
  CHECK(percentile_nearest_rank(unsorted, 99) == 3.0);
  CHECK_THROWS_AS(percentile_nearest_rank({}, 50), std::invalid_argument);
  CHECK_THROWS_AS(percentile_nearest_rank({1.0}, 0), std::invalid_argument);
  CHECK_THROWS_AS(percentile_nearest_rank({1.0}, 101), std::invalid_argument);
}

TEST_CASE("spearman correlation") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {9, 7, 5, 2}) == doctest::Approx(-1.0));
  // monotone in rank even when wildly nonlinear in value
  CHECK(spearman({1, 2, 3, 4, 5}, {0.1, 100, 101, 5000, 1e9}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3}, {5, 5, 5}) == 0.0);  // constant side has no ranks to correlate
  CHECK(spearman({2, 2, 2}, {1, 2, 3}) == 0.0);
  // ties get average ranks
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 20, 40}) == doctest::Approx(0.9486832980505138));
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(spearman({1}, {1}), std::invalid_argument);
}

TEST_CASE("log-log slope") {
  std::vector<double> x{10, 100, 1000, 10000};
  std::vector<double> y;
  for (double xi : x) y.push_back(3.7 / std::sqrt(xi));
  CHECK(fit_loglog_slope(x, y) == doctest::Approx(-0.5).epsilon(1e-12));
  std::vector<double> y2;
  for (double xi : x) y2.push_back(0.2 * xi * xi);
  CHECK(fit_loglog_slope(x, y2) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_loglog_slope({1, 2}, {1, 0}), std::invalid_argument);   // non-positive y
  CHECK_THROWS_AS(fit_loglog_slope({1}, {1}), std::invalid_argument);         // need two points
  CHECK_THROWS_AS(fit_loglog_slope({2, 2}, {1, 3}), std::invalid_argument);   // degenerate x
}

TEST_CASE("operator norm") {
  Mat id(2, 2);
  id.at(0, 0) = 1;
  id.at(1, 1) = 1;
  CHECK(operator_norm(id) == doctest::Approx(1.0).epsilon(1e-9));
  Mat d(2, 2);
  d.at(0, 0) = 3;
  d.at(1, 1) = -7;
  CHECK(operator_norm(d) == doctest::Approx(7.0).epsilon(1e-9));
  Mat r(1, 2);
  r.at(0, 0) = 3;
  r.at(0, 1) = 4;
  CHECK(operator_norm(r) == doctest::Approx(5.0).epsilon(1e-9));
  Mat ones(2, 2);
  ones.at(0, 0) = ones.at(0, 1) = ones.at(1, 0) = ones.at(1, 1) = 1;
  CHECK(operator_norm(ones) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("csv serialization") {
  TrialRecord a;
  a.experiment = "demo";
  a.n = 10000;
  a.r = 30;
  a.trial = 2;
  a.seed = 99;
  a.error = 0.125;
  a.queries = QueryLog{1, 30, 31};
  TrialRecord b = a;
  b.trial = 3;
  b.error = 1e-17;
  b.wall_time_ns = 12345;
  const std::string csv = records_to_csv({a, b});
  CHECK(csv.substr(0, csv.find('\n')) ==
        "experiment,n,r,trial,seed,error,wall_time_ns,q_deg,q_nbr,q_feat");
  CHECK(csv.find("demo,10000,30,2,99,0.125,0,1,30,31\n") != std::string::npos);
  CHECK(csv.find("1.0000000000000001e-17") != std::string::npos);  // round-trip precision
  CHECK(csv.back() == '\n');

  const char* path = "csv_roundtrip_test.tmp";
  write_csv(path, {a, b});
  std::ifstream in(path);
  std::string disk((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(disk == csv);
  std::remove(path);
}

TEST_CASE("speed driver keeps sampled cost flat while exact cost grows") {
  SpeedConfig cfg;
  cfg.min_exp = 5;
  cfg.max_exp = 8;
  cfg.reps = 2;
  cfg.schedule = {3, 3};
  cfg.feat_dim = 2;
  auto rows = run_speed(cfg);
  // 4 sizes x 2 reps x 2 engines
  CHECK(rows.size() == 16u);

  std::set<std::int64_t> sampled_deg, sampled_feat;
  std::int64_t prev_exact_nbr = 0;
  for (const auto& row : rows) {
    CHECK((row.experiment == "speed_exact" || row.experiment == "speed_sampled"));
    if (row.experiment == "speed_sampled") {
      CHECK(row.error >= 0.0);  // distance to the exact value of the same run
      sampled_deg.insert(row.queries.degree_queries);
      sampled_feat.insert(row.queries.feature_queries);
      CHECK(row.wall_time_ns >= 0);
    } else if (row.trial == 0) {
      CHECK(row.error == 0.0);
      CHECK(row.queries.neighbor_queries > prev_exact_nbr);  // grows with n
      prev_exact_nbr = row.queries.neighbor_queries;
    }
  }
  CHECK(sampled_deg.size() == 1u);  // constant across n
  CHECK(sampled_feat.size() == 1u);
  CHECK(*sampled_feat.begin() == 16);  // (1 + r) * (1 + r) at r = (3, 3)
}

TEST_CASE("fixed-input error driver") {
  ErrorConfig cfg;
  cfg.input = "normalization";
  cfg.n = 400;
  cfg.r_list = {5, 30};
  cfg.trials = 40;
  auto rows = run_error_vs_samples(cfg);
  REQUIRE(rows.size() == 80u);
  for (const auto& row : rows) {
    CHECK(row.experiment == "normalization");
    CHECK(row.n == 400);
    CHECK(row.wall_time_ns == 0);
    CHECK(row.error >= 0.0);
    CHECK(row.error <= 2.0);  // both vectors on or inside the unit sphere
    CHECK(row.queries.feature_queries == row.r + 1);
  }
  // node 0 carries (1,0), the rest (0,1/n): a batch missing node 0
  // normalizes to (0,1) while the exact answer is the unit vector along
  // (1, (n-1)/n); with n = 400 >> r those misses dominate the median
  const double n = 400;
  const double len = std::hypot(1.0, (n - 1) / n);
  const double miss = std::hypot(1.0 / len, 1.0 - (n - 1) / n / len);
  auto e5 = errors_at(rows, 5);
  CHECK(percentile_nearest_rank(e5, 50) == doctest::Approx(miss).epsilon(1e-9));

  auto again = run_error_vs_samples(cfg);
  CHECK(records_to_csv(again) == records_to_csv(rows));
}

TEST_CASE("gradient-input error driver uses frobenius distance") {
  ErrorConfig cfg;
  cfg.input = "grad_relu";
  cfg.n = 300;
  cfg.r_list = {5};
  cfg.trials = 60;
  auto rows = run_error_vs_samples(cfg);
  REQUIRE(rows.size() == 60u);
  // miss of node 0 gives the zero gradient, error ~ ||(1, 1+1/n)|| ~ sqrt(2)
  const double expect = std::hypot(1.0, 1.0 + 1.0 / 300.0);
  auto e = errors_at(rows, 5);
  CHECK(percentile_nearest_rank(e, 50) == doctest::Approx(expect).epsilon(1e-9));

  ErrorConfig sg = cfg;
  sg.input = "grad_sigmoid";
  auto srows = run_error_vs_samples(sg);
  REQUIRE(srows.size() == 60u);
  for (const auto& row : srows) CHECK(row.error < 1.0);  // sigmoid damps the plateau
}

TEST_CASE("growing-graph error driver couples n to r") {
  ErrorConfig cfg;
  cfg.input = "ba";
  cfg.r_list = {4, 8};
  cfg.graphs = 3;
  cfg.estimates = 2;
  cfg.feat_dim = 3;
  cfg.variant = Variant::gcn;
  auto rows = run_error_vs_samples(cfg);
  REQUIRE(rows.size() == 12u);  // per r: graphs * estimates
  for (const auto& row : rows) {
    CHECK(row.n == std::int64_t(row.r) * row.r);  // ba family: n = r^2
    CHECK(row.error >= 0.0);
  }
  auto again = run_error_vs_samples(cfg);
  CHECK(records_to_csv(again) == records_to_csv(rows));

  ErrorConfig er = cfg;
  er.input = "er";
  er.variant = Variant::sage_pool;
  er.r_list = {9, 16};
  auto erows = run_error_vs_samples(er);
  for (const auto& row : erows)
    CHECK(row.n == std::int64_t(std::floor(std::pow(double(row.r), 1.5))));

  ErrorConfig bad = cfg;
  bad.input = "unknown_family";
  CHECK_THROWS_AS(run_error_vs_samples(bad), std::invalid_argument);
  ErrorConfig empty = cfg;
  empty.r_list = {};
  CHECK_THROWS_AS(run_error_vs_samples(empty), std::invalid_argument);
}

TEST_CASE("rate driver validations and determinism") {
  RateConfig bad;
  bad.r_list = {10, 30};
  CHECK_THROWS_AS(run_rate(bad), std::invalid_argument);
  RateConfig one_trial;
  one_trial.trials = 1;
  CHECK_THROWS_AS(run_rate(one_trial), std::invalid_argument);

  RateConfig cfg;
  cfg.n = 500;
  cfg.r_list = {5, 15, 45, 135};
  cfg.trials = 80;
  RateResult res = run_rate(cfg);
  REQUIRE(res.p99.size() == 4u);
  CHECK(res.rows.size() == 320u);
  for (double p : res.p99) CHECK(p > 0.0);
  // quadrupling r should visibly shrink the tail on a bounded family
  CHECK(res.p99.back() < res.p99.front());
  CHECK(res.spearman_rho < 0.0);
  CHECK(res.slope < 0.0);

  RateResult again = run_rate(cfg);
  CHECK(records_to_csv(again.rows) == records_to_csv(res.rows));
  CHECK(again.slope == res.slope);
}

TEST_CASE("loaded-graph driver normalizes by the first r") {
  Graph g = gen_er(60, 0.15, 5, 3, 8);
  const char* epath = "real_edges_test.tmp";
  const char* fpath = "real_feats_test.tmp";
  {
    std::ofstream e(epath);
    for (int v = 0; v < g.n(); ++v)
      for (int i = 0; i < g.degree(v); ++i)
        if (v < g.neighbor(v, i)) e << v << " " << g.neighbor(v, i) << "\n";
    std::ofstream f(fpath);
    f.precision(17);
    for (int v = 0; v < g.n(); ++v) {
      for (int j = 0; j < 3; ++j) f << (j ? "," : "") << g.feature(v)[j];
      f << "\n";
    }
  }

  RealConfig cfg;
  cfg.edge_path = epath;
  cfg.feature_path = fpath;
  cfg.spec = ModelSpec{Variant::sage_mean, Activation::sigmoid, 2, {3, 3, 3}};
  cfg.r_list = {2, 8, 32};
  cfg.test_nodes = 10;
  RealResult res = run_on_loaded_graph(cfg);
  REQUIRE(res.embed_p99.size() == 3u);
  REQUIRE(res.grad_p99.size() == 3u);
  REQUIRE(res.rows.size() == 6u);  // one embed + one grad row per r

  int embed_rows = 0, grad_rows = 0;
  for (const auto& row : res.rows) {
    if (row.experiment == "real_embed") {
      if (row.r == 2) CHECK(row.error == doctest::Approx(1.0).epsilon(1e-12));
      ++embed_rows;
    } else {
      CHECK(row.experiment == "real_grad");
      if (row.r == 2) CHECK(row.error == doctest::Approx(1.0).epsilon(1e-12));
      ++grad_rows;
    }
    CHECK(row.n == 60);
  }
  CHECK(embed_rows == 3);
  CHECK(grad_rows == 3);

  RealResult again = run_on_loaded_graph(cfg);
  CHECK(records_to_csv(again.rows) == records_to_csv(res.rows));

  std::remove(epath);
  std::remove(fpath);
}
