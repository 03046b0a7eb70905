// Acceptance gate. Each numbered check prints exactly one [PASS]/[FAIL] line
// with the measured quantities; the process exit status is the number of
// failed checks. Run with a number 1..10 to execute a single check.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "ctgnn/exact.hpp"
#include "ctgnn/experiments.hpp"
#include "ctgnn/linalg.hpp"
#include "ctgnn/model.hpp"
#include "ctgnn/rng.hpp"
#include "ctgnn/sampling.hpp"
#include "ctgnn/synth.hpp"

using namespace ctgnn;

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<double> errors_at(const std::vector<TrialRecord>& rows, int r) {
  std::vector<double> out;
  for (const auto& row : rows)
    if (row.r == r) out.push_back(row.error);
  return out;
}

double mean_error_at(const std::vector<TrialRecord>& rows, int r) {
  double sum = 0;
  int count = 0;
  for (const auto& row : rows)
    if (row.r == r) {
      sum += row.error;
      ++count;
    }
  return sum / double(count);
}

Graph er_min_degree_one(int n, double p, std::uint64_t seed, int feat_dim,
                        std::uint64_t feature_seed) {
  for (std::uint64_t s = seed;; ++s) {
    Graph g = gen_er(n, p, s, feat_dim, feature_seed);
    bool ok = true;
    for (int v = 0; v < g.n(); ++v) ok &= g.degree(v) > 0;
    if (ok) return g;
  }
}

// 1. The sampled estimator's query count must not change when the clique
// grows 100x, while the exact engine's count explodes.
Outcome check_constant_queries() {
  ModelSpec spec{Variant::sage_gcn, Activation::sigmoid, 2, {2, 2, 2}};
  SampleSchedule sched{{100, 100}};
  Params params = init_params(spec, 3, 1.0);
  CliqueView small(1000, normal_features(1000, 2, 1), 2, /*self_loops=*/true);
  CliqueView big(100000, normal_features(100000, 2, 2), 2, /*self_loops=*/true);

  QueryLog qs = sampled_embed(small, spec, params, 0, sched, 7).queries;
  QueryLog qb = sampled_embed(big, spec, params, 0, sched, 7).queries;
  const std::int64_t exact_small = exact_embed(small, spec, params, 0).queries.total();
  const std::int64_t exact_big = exact_embed(big, spec, params, 0).queries.total();
  const double growth = double(exact_big) / double(exact_small);

  Outcome o;
  o.pass = qs == qb && growth >= 100.0;
  o.detail = fmt(
      "sampled log at n=1e3 and n=1e5 both (%lld deg / %lld nbr / %lld feat), equal=%s; "
      "exact total %lld -> %lld (%.0fx)",
      (long long)qs.degree_queries, (long long)qs.neighbor_queries, (long long)qs.feature_queries,
      qs == qb ? "yes" : "no", (long long)exact_small, (long long)exact_big, growth);
  return o;
}

// 2. Normalized clique input: the estimate stays far from the exact unit
// vector no matter the sample count, and removing the normalization makes
// the same input easy.
Outcome check_normalization_gap() {
  ErrorConfig cfg;
  cfg.input = "normalization";
  cfg.n = 10000;
  cfg.r_list = {5, 30, 100};
  cfg.trials = 500;
  cfg.seed = 21;
  auto rows = run_error_vs_samples(cfg);
  const double median100 = percentile_nearest_rank(errors_at(rows, 100), 50);

  cfg.input = "no_normalization";
  cfg.r_list = {100};
  auto plain = run_error_vs_samples(cfg);
  const double p99 = percentile_nearest_rank(errors_at(plain, 100), 99);

  Outcome o;
  o.pass = median100 >= 0.6 && median100 <= 0.9 && p99 <= 0.05;
  o.detail = fmt("normalized median error at r=100 is %.4f (want 0.6..0.9); "
                 "unnormalized p99 %.2e (want <= 0.05)",
                 median100, p99);
  return o;
}

// 3. Gradient estimates on the relu kink construction: relu stays wrong at
// every r, sigmoid's tail error is small and shrinks as r grows.
Outcome check_gradient_plateau() {
  ErrorConfig cfg;
  cfg.input = "grad_relu";
  cfg.n = 200;
  cfg.r_list = {5, 30, 100};
  cfg.trials = 500;
  cfg.seed = 33;
  auto relu_rows = run_error_vs_samples(cfg);
  double min_median = 1e300;
  for (int r : cfg.r_list)
    min_median = std::min(min_median, percentile_nearest_rank(errors_at(relu_rows, r), 50));

  cfg.input = "grad_sigmoid";
  auto sig_rows = run_error_vs_samples(cfg);
  std::vector<double> rs, p99s;
  for (int r : cfg.r_list) {
    rs.push_back(r);
    p99s.push_back(percentile_nearest_rank(errors_at(sig_rows, r), 99));
  }
  const double rho = spearman(rs, p99s);

  Outcome o;
  o.pass = min_median >= 0.5 && p99s.back() <= 0.1 && rho <= -0.9;
  o.detail = fmt("relu min median %.3f (want >= 0.5); sigmoid p99 at r=100 %.2e "
                 "(want <= 0.1), spearman %.2f (want <= -0.9)",
                 min_median, p99s.back(), rho);
  return o;
}

// 4. Tail error shrinks like r^{-1/2} on a bounded clique family.
Outcome check_convergence_rate() {
  RateConfig cfg;  // n=10^4, r in {10..3000}, 400 trials
  RateResult res = run_rate(cfg);
  Outcome o;
  o.pass = res.slope >= -0.65 && res.slope <= -0.35;
  o.detail = fmt("log-log slope of p99 error vs r is %.3f (want -0.65..-0.35), "
                 "p99 %.3e -> %.3e over r %d..%d",
                 res.slope, res.p99.front(), res.p99.back(), cfg.r_list.front(),
                 cfg.r_list.back());
  return o;
}

// 5. The closed-form sample count really delivers its (eps, delta) promise.
Outcome check_sample_size_bound() {
  const ToleranceSpec tol{0.3, 0.1, std::sqrt(2.0), 2};
  const int r = required_samples(tol);

  const int n = 2000;
  std::vector<double> feats(std::size_t(n) * 2);
  Rng frng(404);
  for (double& x : feats) x = (frng.next_u64() & 1) ? 1.0 : -1.0;
  Graph g = with_self_loops(gen_clique_with_features(n, std::move(feats), 2));
  ModelSpec spec{Variant::sage_gcn, Activation::sigmoid, 1, {2, 2}};
  Params params;
  Mat w(2, 2);
  w.at(0, 0) = 1.0;
  w.at(1, 1) = 1.0;
  params.weights.push_back(w);

  const Vec exact = exact_embed(g, spec, params, 0).z;
  const int trials = 2000;
  int failures = 0;
  for (int t = 0; t < trials; ++t) {
    Vec est = sampled_embed(g, spec, params, 0, {{r}}, derive_seed(5, 1, t)).z;
    if (norm2_diff(est, exact) >= tol.epsilon) ++failures;
  }
  const double freq = double(failures) / trials;

  Outcome o;
  o.pass = r == 328 && freq <= tol.delta;
  o.detail = fmt("required_samples(0.3, 0.1, sqrt2, 2) = %d (want 328); "
                 "deviation frequency %.4f over %d trials (want <= 0.1)",
                 r, freq, trials);
  return o;
}

// 6. Both gradient engines agree with central finite differences on random
// small configurations.
Outcome check_gradients_vs_fd() {
  const double step = 1e-5;
  double worst = 0.0;
  const Variant variants[] = {Variant::sage_gcn, Variant::sage_mean, Variant::gcn, Variant::gat};
  for (int t = 0; t < 20; ++t) {
    Graph raw = er_min_degree_one(10, 0.6, 700 + 50 * t, 3, 800 + t);
    const Variant variant = variants[t % 4];
    const Graph g = variant == Variant::sage_gcn ? with_self_loops(raw) : std::move(raw);
    ModelSpec spec{variant, (t % 2) ? Activation::tanh : Activation::sigmoid, 2, {3, 3, 2}};
    Params params = init_params(spec, 900 + t, 0.8);
    const int v = t % 10;
    SampleSchedule sched{{2, 3}};
    const std::uint64_t seed = 77 + t;

    GradTensor exact_g = exact_gradient(g, spec, params, v);
    GradTensor sampled_g = sampled_gradient(g, spec, params, v, sched, seed);

    auto fd_check = [&](double* base, std::size_t len, const std::vector<double>& exact_grad,
                        const std::vector<double>& sampled_grad, int out_dim) {
      for (std::size_t j = 0; j < len; ++j) {
        const double keep = base[j];
        base[j] = keep + step;
        Vec eu = exact_embed(g, spec, params, v).z;
        Vec su = sampled_embed(g, spec, params, v, sched, seed).z;
        base[j] = keep - step;
        Vec ed = exact_embed(g, spec, params, v).z;
        Vec sd = sampled_embed(g, spec, params, v, sched, seed).z;
        base[j] = keep;
        for (int i = 0; i < out_dim; ++i) {
          const double fd_e = (eu[i] - ed[i]) / (2 * step);
          const double fd_s = (su[i] - sd[i]) / (2 * step);
          const double ae = exact_grad[std::size_t(i) * len + j];
          const double as = sampled_grad[std::size_t(i) * len + j];
          worst = std::max(worst, std::abs(ae - fd_e) / (1.0 + std::abs(ae)));
          worst = std::max(worst, std::abs(as - fd_s) / (1.0 + std::abs(as)));
        }
      }
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l)
      fd_check(params.weights[l].a.data(), params.weights[l].a.size(), exact_g.d_weights[l],
               sampled_g.d_weights[l], exact_g.out_dim);
    for (std::size_t l = 0; l < params.attention.size(); ++l)
      fd_check(params.attention[l].data(), params.attention[l].size(), exact_g.d_attention[l],
               sampled_g.d_attention[l], exact_g.out_dim);
  }

  Outcome o;
  o.pass = worst <= 1e-4;
  o.detail = fmt("max relative gradient deviation from finite differences %.3e over "
                 "20 configurations, both engines (want <= 1e-4)",
                 worst);
  return o;
}

// 7. Averaging the estimator over every possible sample tuple reproduces the
// exact linear aggregate: the estimator is unbiased.
Outcome check_unbiasedness() {
  struct Case {
    Graph g;
    int target;
  };
  std::vector<Case> cases;
  cases.push_back({gen_star(5, 2, 3), 0});
  cases.push_back({gen_star(5, 2, 3), 1});
  cases.push_back({with_self_loops(gen_clique(4, 2, 9)), 2});
  cases.push_back({load_graph("0 1\n1 2", "0.4,1\n-2,0.25\n7,3\n"), 1});

  double worst = 0.0;
  for (Variant variant : {Variant::sage_gcn, Variant::gcn}) {
    for (auto& c : cases) {
      ModelSpec spec{variant, Activation::linear, 1, {2, 2}};
      Params params = init_params(spec, 55, 0.9);
      const Vec exact = exact_embed(c.g, spec, params, c.target).z;
      const int deg = c.g.degree(c.target);
      for (int r = 1; r <= 3; ++r) {
        std::int64_t tuples = 1;
        for (int i = 0; i < r; ++i) tuples *= deg;
        Vec mean(2, 0.0);
        for (std::int64_t code = 0; code < tuples; ++code) {
          auto picker = [&](int, int, int k) {
            std::int64_t rest = code;
            for (int j = 0; j < k; ++j) rest /= deg;
            return int(rest % deg);
          };
          Vec z = sampled_embed_with_picker(c.g, spec, params, c.target, {{r}}, picker).z;
          axpy(1.0 / double(tuples), z.data(), mean.data(), 2);
        }
        for (int j = 0; j < 2; ++j) worst = std::max(worst, std::abs(mean[j] - exact[j]));
      }
    }
  }

  Outcome o;
  o.pass = worst <= 1e-12;
  o.detail = fmt("max |enumerated mean - exact| = %.3e over stars, cliques and paths, "
                 "deg <= 4, r <= 3 (want <= 1e-12)",
                 worst);
  return o;
}

// 8. Growing-graph error: symmetric normalization keeps the max-degree
// node's error from vanishing on heavy-tailed graphs, bounded mean
// aggregation converges, and max-pooling stalls once degrees outgrow r.
Outcome check_degree_coupling() {
  ErrorConfig base;
  base.r_list = {8, 16, 32, 64, 128};
  base.graphs = 10;
  base.estimates = 20;
  base.seed = 88;

  auto ratio = [&](const char* input, Variant variant) {
    ErrorConfig cfg = base;
    cfg.input = input;
    cfg.variant = variant;
    auto rows = run_error_vs_samples(cfg);
    return mean_error_at(rows, 128) / mean_error_at(rows, 8);
  };

  const double ba_gcn = ratio("ba", Variant::gcn);
  const double ba_sage = ratio("ba", Variant::sage_gcn);
  const double er_gcn = ratio("er", Variant::gcn);
  const double er_sage = ratio("er", Variant::sage_gcn);
  const double er_pool = ratio("er", Variant::sage_pool);

  Outcome o;
  o.pass = ba_gcn >= 0.5 && ba_sage <= 0.3 && er_gcn <= 0.3 && er_sage <= 0.3 && er_pool >= 0.5;
  o.detail = fmt("mean-error ratios r=128 vs r=8: ba gcn %.2f (>= 0.5), ba sage %.2f (<= 0.3), "
                 "er gcn %.2f (<= 0.3), er sage %.2f (<= 0.3), er pool %.2f (>= 0.5)",
                 ba_gcn, ba_sage, er_gcn, er_sage, er_pool);
  return o;
}

// 9. Attention weights are a proper distribution under sampling, and the
// bounded attention mean converges with r.
Outcome check_attention() {
  double worst_sum = 0.0;
  Rng rng(3030);
  int traces = 0;
  for (int t = 0; t < 1000; ++t) {
    Graph g = er_min_degree_one(25, 0.25, 4000 + 20 * t, 3, 5000 + t);
    ModelSpec spec{Variant::gat, Activation::sigmoid, 2, {3, 3, 3}};
    Params params = init_params(spec, rng.next_u64(), 1.2);
    const int v = int(rng.bounded(g.n()));
    for (const auto& w : sampled_attention_trace(g, spec, params, v, {{3, 4}}, rng.next_u64())) {
      double sum = 0;
      for (double wi : w) sum += wi;
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      ++traces;
    }
  }

  Graph g = er_min_degree_one(400, 0.05, 606, 4, 707);
  ModelSpec spec{Variant::gat, Activation::sigmoid, 2, {4, 4, 4}};
  Params params = init_params(spec, 61, 1.0);
  const int target = 0;
  const Vec exact = exact_embed(g, spec, params, target).z;
  std::vector<double> rs, means;
  for (int r : {2, 4, 8, 16, 32, 64}) {
    SampleSchedule sched{{r, r}};
    double sum = 0;
    const int estimates = 50;
    for (int e = 0; e < estimates; ++e)
      sum += norm2_diff(sampled_embed(g, spec, params, target, sched, derive_seed(9, r, e)).z,
                        exact);
    rs.push_back(r);
    means.push_back(sum / estimates);
  }
  const double rho = spearman(rs, means);

  Outcome o;
  o.pass = worst_sum <= 1e-12 && rho <= -0.9;
  o.detail = fmt("max |attention sum - 1| = %.2e over %d aggregations (want <= 1e-12); "
                 "error spearman vs r %.2f (want <= -0.9, mean %.3f -> %.3f)",
                 worst_sum, traces, rho, means.front(), means.back());
  return o;
}

// 10. Wall-clock sanity at the largest clique: the sampled estimate must be
// at least 10x faster than the exact pass.
Outcome check_wall_time() {
  SpeedConfig cfg;
  cfg.min_exp = 14;
  cfg.max_exp = 14;
  cfg.reps = 3;
  auto rows = run_speed(cfg);
  std::vector<double> exact_ns, sampled_ns;
  for (const auto& row : rows)
    (row.experiment == "speed_exact" ? exact_ns : sampled_ns).push_back(double(row.wall_time_ns));
  const double exact_med = percentile_nearest_rank(exact_ns, 50);
  const double sampled_med = percentile_nearest_rank(sampled_ns, 50);

  Outcome o;
  o.pass = sampled_med * 10.0 <= exact_med;
  o.detail = fmt("median wall time on the 16384-clique: exact %.0f ms, sampled %.2f ms "
                 "(%.0fx, want >= 10x)",
                 exact_med / 1e6, sampled_med / 1e6, exact_med / sampled_med);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::function<Outcome()> checks[] = {
      check_constant_queries, check_normalization_gap, check_gradient_plateau,
      check_convergence_rate, check_sample_size_bound, check_gradients_vs_fd,
      check_unbiasedness,     check_degree_coupling,   check_attention,
      check_wall_time,
  };
  const int count = int(std::size(checks));

  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > count) {
      std::fprintf(stderr, "usage: %s [1..%d]\n", argv[0], count);
      return 2;
    }
  }

  int failures = 0;
  for (int i = 1; i <= count; ++i) {
    if (only != 0 && only != i) continue;
    Outcome o;
    try {
      o = checks[i - 1]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = fmt("threw: %s", e.what());
    }
    std::printf("[%s] criterion %d: %s\n", o.pass ? "PASS" : "FAIL", i, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures;
}
