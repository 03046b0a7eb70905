#include "ctgnn/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "ctgnn/exact.hpp"
#include "ctgnn/rng.hpp"
#include "ctgnn/sampling.hpp"
#include "ctgnn/synth.hpp"

namespace ctgnn {

std::string records_to_csv(const std::vector<TrialRecord>& rows) {
  std::string out = "experiment,n,r,trial,seed,error,wall_time_ns,q_deg,q_nbr,q_feat\n";
  for (const TrialRecord& t : rows) {
    out += t.experiment;
    out += ',' + std::to_string(t.n);
    out += ',' + std::to_string(t.r);
    out += ',' + std::to_string(t.trial);
    out += ',' + std::to_string(t.seed);
    out += ',' + fmt_double(t.error);
    out += ',' + std::to_string(t.wall_time_ns);
    out += ',' + std::to_string(t.queries.degree_queries);
    out += ',' + std::to_string(t.queries.neighbor_queries);
    out += ',' + std::to_string(t.queries.feature_queries);
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<TrialRecord>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << records_to_csv(rows);
  if (!out) throw std::runtime_error("failed writing " + path);
}

double percentile_nearest_rank(std::vector<double> values, double pct) {
  if (values.empty()) throw std::invalid_argument("percentile: empty sample");
  if (!(pct > 0.0) || pct > 100.0) throw std::invalid_argument("percentile: pct in (0, 100]");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(
      std::ceil(pct / 100.0 * static_cast<double>(values.size())));
  if (rank < 1) rank = 1;
  if (rank > values.size()) rank = values.size();
  return values[rank - 1];
}

namespace {
std::vector<double> average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
    i = j + 1;
  }
  return rank;
}
}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("spearman: need two samples of equal size >= 2");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;  // a constant sequence carries no order
  return sxy / std::sqrt(sxx * syy);
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_loglog_slope: need two samples of equal size >= 2");
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("fit_loglog_slope: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_loglog_slope: x values are all equal");
  return sxy / sxx;
}

double operator_norm(const Mat& w) {
  Vec v(w.cols, 1.0 / std::sqrt(static_cast<double>(w.cols)));
  Vec u(w.rows), vt(w.cols);
  for (int it = 0; it < 200; ++it) {
    gemv(w, v.data(), u.data());
    std::fill(vt.begin(), vt.end(), 0.0);
    gemv_t_add(w, u.data(), vt.data());
    const double nrm = norm2(vt);
    if (nrm == 0.0) return 0.0;
    for (int j = 0; j < w.cols; ++j) v[j] = vt[j] / nrm;
  }
  gemv(w, v.data(), u.data());
  return norm2(u);
}

// ---- speed -------------------------------------------------------------------

namespace {
std::int64_t elapsed_ns(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                              t0)
      .count();
}
}  // namespace

std::vector<TrialRecord> run_speed(const SpeedConfig& cfg) {
  if (cfg.min_exp < 1 || cfg.max_exp < cfg.min_exp)
    throw std::invalid_argument("run_speed: bad size range");
  if (cfg.reps < 1) throw std::invalid_argument("run_speed: reps must be >= 1");
  const int layers = static_cast<int>(cfg.schedule.size());
  ModelSpec spec{Variant::sage_gcn, Activation::sigmoid, layers,
                 std::vector<int>(layers + 1, cfg.feat_dim)};
  SampleSchedule sched{cfg.schedule};
  std::vector<TrialRecord> rows;
  for (int e = cfg.min_exp; e <= cfg.max_exp; ++e) {
    const int n = 1 << e;
    CliqueView g(n, normal_features(n, cfg.feat_dim, derive_seed(cfg.seed, e, 0)), cfg.feat_dim,
                 /*self_loops=*/true);
    const Params params = init_params(spec, derive_seed(cfg.seed, e, 1), 1.0);
    for (int rep = 0; rep < cfg.reps; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      EmbedResult ex = exact_embed(g, spec, params, 0);
      const std::int64_t exact_ns = elapsed_ns(t0);
      rows.push_back({"speed_exact", n, 0, rep, cfg.seed, 0.0, exact_ns, ex.queries});

      const std::uint64_t s = derive_seed(cfg.seed, e, 100 + rep);
      t0 = std::chrono::steady_clock::now();
      EmbedResult res = sampled_embed(g, spec, params, 0, sched, s);
      const std::int64_t sampled_ns = elapsed_ns(t0);
      rows.push_back({"speed_sampled", n, cfg.schedule.back(), rep, s, norm2_diff(res.z, ex.z),
                      sampled_ns, res.queries});
    }
  }
  return rows;
}

// ---- error vs samples ----------------------------------------------------------

namespace {

struct FixedInput {
  std::shared_ptr<const GraphView> graph;
  ModelSpec spec;
  Params params;
  int target = 0;
  bool gradient = false;
};

FixedInput prepare_fixed_input(const ErrorConfig& cfg) {
  const int n = static_cast<int>(cfg.n);
  FixedInput in;
  if (cfg.input == "normalization" || cfg.input == "no_normalization") {
    // The separation experiment runs on a clique where node 0 carries (1,0)
    // and everyone else (0, 1/n): the normalized exact embedding keeps unit
    // length while the raw aggregate shrinks, so removing the normalization
    // makes every estimate trivially close to exact.
    std::vector<double> feats(static_cast<std::size_t>(n) * 2, 0.0);
    feats[0] = 1.0;
    for (int v = 1; v < n; ++v) feats[static_cast<std::size_t>(v) * 2 + 1] = 1.0 / n;
    in.graph = std::make_shared<CliqueView>(n, std::move(feats), 2, /*self_loops=*/true);
    in.spec = {Variant::sage_gcn,
               cfg.input == "normalization" ? Activation::relu_normalize : Activation::relu, 1,
               {2, 2}};
    Mat w(2, 2);
    w.at(0, 0) = 1.0;
    w.at(1, 1) = 1.0;
    in.params.weights.push_back(w);
    in.target = 1;
    return in;
  }
  if (cfg.input == "grad_relu" || cfg.input == "grad_sigmoid") {
    Fixture f = counterexample("relu_gradient", n);
    in.graph = f.graph_a;
    in.spec = f.spec;
    if (cfg.input == "grad_sigmoid") in.spec.activation = Activation::sigmoid;
    in.params = std::move(f.params);
    in.target = f.target_node;
    in.gradient = true;
    return in;
  }
  if (cfg.input == "unbounded_feature" || cfg.input == "pool" || cfg.input == "gcn_star") {
    Fixture f = counterexample(cfg.input, n);
    in.graph = f.graph_b;
    in.spec = f.spec;
    in.params = std::move(f.params);
    in.target = f.target_node;
    return in;
  }
  throw std::invalid_argument("run_error_vs_samples: unknown input '" + cfg.input + "'");
}

std::vector<TrialRecord> run_error_fixed(const ErrorConfig& cfg) {
  const FixedInput in = prepare_fixed_input(cfg);
  GradTensor exact_grad;
  Vec exact_z;
  if (in.gradient)
    exact_grad = exact_gradient(*in.graph, in.spec, in.params, in.target);
  else
    exact_z = exact_embed(*in.graph, in.spec, in.params, in.target).z;

  std::vector<TrialRecord> rows;
  for (int r : cfg.r_list) {
    SampleSchedule sched{std::vector<int>(in.spec.layers, r)};
    for (int t = 0; t < cfg.trials; ++t) {
      const std::uint64_t s = derive_seed(cfg.seed, static_cast<std::uint64_t>(r), t);
      TrialRecord row;
      row.experiment = cfg.input;
      row.n = cfg.n;
      row.r = r;
      row.trial = t;
      row.seed = s;
      if (in.gradient) {
        GradTensor gt = sampled_gradient(*in.graph, in.spec, in.params, in.target, sched, s);
        row.error = frobenius_diff(gt, exact_grad);
      } else {
        EmbedResult res = sampled_embed(*in.graph, in.spec, in.params, in.target, sched, s);
        row.error = norm2_diff(res.z, exact_z);
        row.queries = res.queries;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

int max_degree_node(const GraphView& g) {
  int best = 0;
  for (int v = 1; v < g.n(); ++v)
    if (g.degree(v) > g.degree(best)) best = v;
  return best;
}

std::vector<TrialRecord> run_error_grown(const ErrorConfig& cfg) {
  const bool ba = cfg.input == "ba";
  ModelSpec spec{cfg.variant, cfg.activation, 2,
                 std::vector<int>(3, cfg.feat_dim)};
  std::vector<TrialRecord> rows;
  for (int r : cfg.r_list) {
    const int n = ba ? r * r
                     : static_cast<int>(std::floor(std::pow(static_cast<double>(r), 1.5)));
    SampleSchedule sched{std::vector<int>(spec.layers, r)};
    for (int gi = 0; gi < cfg.graphs; ++gi) {
      const std::uint64_t gseed = derive_seed(cfg.seed, static_cast<std::uint64_t>(r), 9000 + gi);
      Graph raw = ba ? gen_ba(n, cfg.ba_attach, gseed, cfg.feat_dim, derive_seed(gseed, 1, 0))
                     : gen_er(n, cfg.er_p, gseed, cfg.feat_dim, derive_seed(gseed, 1, 0));
      const Graph g = (cfg.variant == Variant::sage_gcn || cfg.variant == Variant::sage_mean)
                          ? with_self_loops(raw)
                          : std::move(raw);
      const Params params = init_params(spec, derive_seed(gseed, 2, 0), 1.0);
      const int target = max_degree_node(g);
      const Vec exact_z = exact_embed(g, spec, params, target).z;
      for (int e = 0; e < cfg.estimates; ++e) {
        const std::uint64_t s = derive_seed(gseed, 3, e);
        EmbedResult res = sampled_embed(g, spec, params, target, sched, s);
        TrialRecord row;
        row.experiment = cfg.input;
        row.n = n;
        row.r = r;
        row.trial = gi * cfg.estimates + e;
        row.seed = s;
        row.error = norm2_diff(res.z, exact_z);
        row.queries = res.queries;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace

std::vector<TrialRecord> run_error_vs_samples(const ErrorConfig& cfg) {
  if (cfg.r_list.empty()) throw std::invalid_argument("run_error_vs_samples: empty r list");
  if (cfg.trials < 1 && cfg.input != "ba" && cfg.input != "er")
    throw std::invalid_argument("run_error_vs_samples: trials must be >= 1");
  if (cfg.input == "ba" || cfg.input == "er") return run_error_grown(cfg);
  return run_error_fixed(cfg);
}

// ---- rate ----------------------------------------------------------------------

RateResult run_rate(const RateConfig& cfg) {
  if (cfg.r_list.size() < 3)
    throw std::invalid_argument("run_rate: need at least three r values for a rate fit");
  if (cfg.trials < 2) throw std::invalid_argument("run_rate: need at least two trials");
  const int n = static_cast<int>(cfg.n);
  ModelSpec spec{Variant::sage_gcn, Activation::sigmoid, 1, {2, 2}};

  RateResult out;
  for (int r : cfg.r_list) {
    // Fresh +-1 features and a fresh unit-operator-norm weight per r.
    std::vector<double> feats(static_cast<std::size_t>(n) * 2);
    {
      Rng frng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r), 0));
      for (double& x : feats) x = (frng.next_u64() & 1u) ? 1.0 : -1.0;
    }
    CliqueView g(n, std::move(feats), 2, /*self_loops=*/true);
    Params params = init_params(spec, derive_seed(cfg.seed, static_cast<std::uint64_t>(r), 1), 1.0);
    const double s = operator_norm(params.weights[0]);
    for (double& x : params.weights[0].a) x /= s;

    SampleSchedule sched{{r}};
    Rng trng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r), 2));
    std::map<int, Vec> exact_cache;
    std::vector<double> errs;
    errs.reserve(cfg.trials);
    for (int t = 0; t < cfg.trials; ++t) {
      const int target = trng.bounded(n);
      auto it = exact_cache.find(target);
      if (it == exact_cache.end())
        it = exact_cache.emplace(target, exact_embed(g, spec, params, target).z).first;
      const std::uint64_t es = derive_seed(cfg.seed, static_cast<std::uint64_t>(r), 3 + t);
      EmbedResult res = sampled_embed(g, spec, params, target, sched, es);
      const double err = norm2_diff(res.z, it->second);
      errs.push_back(err);
      TrialRecord row;
      row.experiment = "rate";
      row.n = cfg.n;
      row.r = r;
      row.trial = t;
      row.seed = es;
      row.error = err;
      row.queries = res.queries;
      out.rows.push_back(std::move(row));
    }
    out.p99.push_back(percentile_nearest_rank(errs, 99.0));
  }
  std::vector<double> rs(cfg.r_list.begin(), cfg.r_list.end());
  out.slope = fit_loglog_slope(rs, out.p99);
  out.spearman_rho = spearman(rs, out.p99);
  return out;
}

// ---- loaded graph ---------------------------------------------------------------

RealResult run_on_loaded_graph(const RealConfig& cfg) {
  if (cfg.r_list.empty()) throw std::invalid_argument("run_on_loaded_graph: empty r list");
  if (cfg.test_nodes < 1) throw std::invalid_argument("run_on_loaded_graph: need test nodes");
  ModelSpec spec = cfg.spec;
  spec.validate();
  Graph loaded = load_graph_files(cfg.edge_path, cfg.feature_path);
  const Graph g = spec.needs_self_loops() ? with_self_loops(loaded) : std::move(loaded);

  Params params;
  if (cfg.params_path.empty()) {
    params = init_params(spec, derive_seed(cfg.seed, 0x70, 0), cfg.init_scale);
  } else {
    std::ifstream in(cfg.params_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + cfg.params_path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    params = load_params(text);
    validate_params(spec, params);
  }

  Rng node_rng(derive_seed(cfg.seed, 0x746e, 0));
  std::vector<int> nodes(cfg.test_nodes);
  for (int& v : nodes) v = node_rng.bounded(g.n());

  std::vector<Vec> exact_z(nodes.size());
  std::vector<GradTensor> exact_g(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    exact_z[j] = exact_embed(g, spec, params, nodes[j]).z;
    exact_g[j] = exact_gradient(g, spec, params, nodes[j]);
  }

  RealResult out;
  std::vector<QueryLog> embed_logs;
  for (int r : cfg.r_list) {
    SampleSchedule sched{std::vector<int>(spec.layers, r)};
    std::vector<double> ez, eg;
    QueryLog qlog;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const std::uint64_t es = derive_seed(cfg.seed, static_cast<std::uint64_t>(r), j);
      EmbedResult res = sampled_embed(g, spec, params, nodes[j], sched, es);
      qlog = res.queries;
      ez.push_back(norm2_diff(res.z, exact_z[j]));
      const std::uint64_t gs =
          derive_seed(cfg.seed, static_cast<std::uint64_t>(r), 100000 + j);
      GradTensor gt = sampled_gradient(g, spec, params, nodes[j], sched, gs);
      eg.push_back(frobenius_diff(gt, exact_g[j]));
    }
    out.embed_p99.push_back(percentile_nearest_rank(ez, 99.0));
    out.grad_p99.push_back(percentile_nearest_rank(eg, 99.0));
    embed_logs.push_back(qlog);
  }

  const double base_e = out.embed_p99.front();
  const double base_g = out.grad_p99.front();
  for (std::size_t i = 0; i < cfg.r_list.size(); ++i) {
    TrialRecord row;
    row.n = g.n();
    row.r = cfg.r_list[i];
    row.trial = 0;
    row.seed = cfg.seed;
    row.queries = embed_logs[i];
    row.experiment = "real_embed";
    row.error = base_e > 0.0 ? out.embed_p99[i] / base_e : out.embed_p99[i];
    out.rows.push_back(row);
    row.experiment = "real_grad";
    row.error = base_g > 0.0 ? out.grad_p99[i] / base_g : out.grad_p99[i];
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace ctgnn
