#pragma once

// Experiment drivers. Each returns per-trial rows that serialize to a fixed
// CSV schema:
//
//   experiment,n,r,trial,seed,error,wall_time_ns,q_deg,q_nbr,q_feat
//
// Every run is a pure function of (config, seed): rerunning writes identical
// bytes. The one exception is run_speed, whose wall_time_ns column is a real
// measurement; the other drivers write 0 there.

#include <cstdint>
#include <string>
#include <vector>

#include "ctgnn/graph.hpp"
#include "ctgnn/model.hpp"

namespace ctgnn {

struct TrialRecord {
  std::string experiment;
  std::int64_t n = 0;
  int r = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double error = 0.0;
  std::int64_t wall_time_ns = 0;
  QueryLog queries;
};

std::string records_to_csv(const std::vector<TrialRecord>& rows);
void write_csv(const std::string& path, const std::vector<TrialRecord>& rows);

// Nearest-rank percentile: the ceil(pct/100 * N)-th smallest value.
double percentile_nearest_rank(std::vector<double> values, double pct);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Spectral norm (largest singular value) by power iteration.
double operator_norm(const Mat& w);

// ---- wall time: exact vs sampled on growing cliques -------------------------

struct SpeedConfig {
  int min_exp = 7;   // smallest clique is 2^min_exp nodes
  int max_exp = 14;  // largest is 2^max_exp
  int reps = 10;
  std::vector<int> schedule = {100, 100};
  int feat_dim = 10;
  std::uint64_t seed = 1;
};

// Rows alternate experiments "speed_exact" and "speed_sampled"; one row per
// (n, rep) with the measured wall time and the query counts of that run.
std::vector<TrialRecord> run_speed(const SpeedConfig& cfg);

// ---- estimate error against the exact engine --------------------------------

struct ErrorConfig {
  // Prepared input families: normalization, no_normalization, grad_relu,
  // grad_sigmoid, unbounded_feature, pool, gcn_star run on a fixed adversarial
  // input of size n; ba and er grow the graph with r (n = r^2, n = r^1.5).
  std::string input = "normalization";
  std::int64_t n = 10000;
  std::vector<int> r_list = {5, 30, 100};
  int trials = 500;
  std::uint64_t seed = 1;
  // knobs for the ba/er graph families
  int feat_dim = 10;
  int ba_attach = 2;
  double er_p = 0.2;
  int graphs = 10;     // graphs per r
  int estimates = 5;   // estimates per graph
  Variant variant = Variant::sage_gcn;
  Activation activation = Activation::relu;
};

// One row per (r, trial); error is the L2 embedding distance to exact, or the
// Frobenius gradient distance for the grad_* inputs.
std::vector<TrialRecord> run_error_vs_samples(const ErrorConfig& cfg);

// ---- convergence rate of the tail quantile ----------------------------------

struct RateConfig {
  std::int64_t n = 10000;
  std::vector<int> r_list = {10, 30, 100, 300, 1000, 3000};
  int trials = 400;
  std::uint64_t seed = 1;
};

struct RateResult {
  std::vector<TrialRecord> rows;  // per (r, trial) raw errors
  std::vector<double> p99;        // aligned with r_list
  double slope = 0.0;             // log-log fit of p99 against r
  double spearman_rho = 0.0;      // p99 against r
};

// Single-layer mean aggregation on a clique with +-1 features and a weight
// matrix rescaled to unit operator norm, refreshed per r. Fewer than 3
// r-values throws std::invalid_argument.
RateResult run_rate(const RateConfig& cfg);

// ---- loaded-graph error protocol ---------------------------------------------

struct RealConfig {
  std::string edge_path;
  std::string feature_path;
  std::string params_path;  // empty: initialize from seed
  ModelSpec spec;
  std::vector<int> r_list = {1, 3, 10, 30, 100};
  int test_nodes = 50;
  std::uint64_t seed = 1;
  double init_scale = 0.5;
};

struct RealResult {
  std::vector<TrialRecord> rows;  // real_embed and real_grad, error = normalized p99 per r
  std::vector<double> embed_p99;  // raw values aligned with r_list
  std::vector<double> grad_p99;
};

// Draws test nodes, then reports the 99th-percentile embedding and gradient
// errors per r, normalized by the first r in the list (so that row is 1.0).
RealResult run_on_loaded_graph(const RealConfig& cfg);

}  // namespace ctgnn
