// Command line front end: graph generation, exact and sampled embeddings and
// gradients, and the experiment drivers. Run `ctgnn --help` or see README.md.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctgnn/exact.hpp"
#include "ctgnn/experiments.hpp"
#include "ctgnn/graph.hpp"
#include "ctgnn/model.hpp"
#include "ctgnn/sampling.hpp"
#include "ctgnn/synth.hpp"

namespace {

using namespace ctgnn;

struct ModelArgs {
  std::string model = "sage_gcn";
  std::string activation = "sigmoid";
  int layers = 1;
  std::vector<int> dims;
};

void add_model_flags(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--model", m.model, "variant: sage_gcn, sage_mean, sage_pool, gcn, gat");
  cmd->add_option("--activation", m.activation,
                  "sigmoid, tanh, relu, relu_normalize or linear");
  cmd->add_option("--layers", m.layers, "number of layers");
  cmd->add_option("--dims", m.dims, "comma separated widths d0,...,dL")->delimiter(',');
}

ModelSpec make_spec(const ModelArgs& m, int graph_feat_dim) {
  ModelSpec spec;
  spec.variant = variant_from_string(m.model);
  spec.activation = activation_from_string(m.activation);
  spec.layers = m.layers;
  spec.dims = m.dims.empty() ? std::vector<int>(m.layers + 1, graph_feat_dim) : m.dims;
  spec.validate();
  return spec;
}

struct GraphArgs {
  std::string graph;
  std::string features;
  bool self_loops = false;
};

void add_graph_flags(CLI::App* cmd, GraphArgs& g) {
  cmd->add_option("--graph", g.graph, "edge list file")->required();
  cmd->add_option("--features", g.features, "feature csv file")->required();
  cmd->add_flag("--self-loops", g.self_loops, "add a self loop to every node before running");
}

struct ParamArgs {
  std::string params;
  std::uint64_t param_seed = 1;
  double param_scale = 1.0;
};

void add_param_flags(CLI::App* cmd, ParamArgs& p) {
  cmd->add_option("--params", p.params, "parameter file (omit to initialize from --param-seed)");
  cmd->add_option("--param-seed", p.param_seed, "seed for random initialization");
  cmd->add_option("--param-scale", p.param_scale, "stddev of random initialization");
}

Params make_params(const ParamArgs& pa, const ModelSpec& spec) {
  if (pa.params.empty()) return init_params(spec, pa.param_seed, pa.param_scale);
  std::ifstream in(pa.params, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + pa.params);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Params p = load_params(text);
  validate_params(spec, p);
  return p;
}

struct ScheduleArgs {
  std::vector<int> r;
  std::vector<int> schedule;
  double eps = 0.0;
  double delta = 0.0;
  double bound = 1.0;
  int dim = 0;
};

void add_schedule_flags(CLI::App* cmd, ScheduleArgs& s) {
  cmd->add_option("--r", s.r, "samples per layer (one value applies to every layer)")
      ->delimiter(',');
  cmd->add_option("--schedule", s.schedule, "explicit per-layer sample counts, top layer last")
      ->delimiter(',');
  cmd->add_option("--eps", s.eps, "derive the schedule for this additive error");
  cmd->add_option("--delta", s.delta, "failure probability for --eps");
  cmd->add_option("--bound", s.bound, "summand bound B for --eps");
  cmd->add_option("--dim", s.dim, "union-bound dimension for --eps (default: output width)");
}

SampleSchedule make_schedule(const ScheduleArgs& s, const ModelSpec& spec) {
  if (!s.schedule.empty()) {
    if (static_cast<int>(s.schedule.size()) != spec.layers)
      throw std::invalid_argument("--schedule must list one count per layer");
    return SampleSchedule{s.schedule};
  }
  if (!s.r.empty()) {
    if (s.r.size() == 1) return SampleSchedule{std::vector<int>(spec.layers, s.r[0])};
    if (static_cast<int>(s.r.size()) != spec.layers)
      throw std::invalid_argument("--r must give one count, or one per layer");
    return SampleSchedule{s.r};
  }
  if (s.eps > 0.0) {
    ToleranceSpec tol{s.eps, s.delta > 0.0 ? s.delta : 0.05, s.bound,
                      s.dim > 0 ? s.dim : spec.dims[spec.layers]};
    return default_schedule(spec.layers, tol);
  }
  throw std::invalid_argument("give --r, --schedule, or --eps/--delta");
}

void write_or_print(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + out_path + " for writing");
  out << text;
}

std::string format_vec(const Vec& z) {
  std::string s;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i) s += ' ';
    s += fmt_double(z[i]);
  }
  return s;
}

std::string format_queries(const QueryLog& q) {
  return "queries deg=" + std::to_string(q.degree_queries) +
         " nbr=" + std::to_string(q.neighbor_queries) +
         " feat=" + std::to_string(q.feature_queries) + "\n";
}

std::string format_grad(const GradTensor& g) {
  std::string s;
  for (std::size_t l = 0; l < g.d_weights.size(); ++l) {
    const std::size_t block = g.d_weights[l].size() / g.out_dim;
    for (int i = 0; i < g.out_dim; ++i) {
      s += "dW " + std::to_string(l + 1) + " " + std::to_string(i) + "\n";
      const double* p = g.d_weights[l].data() + static_cast<std::size_t>(i) * block;
      for (std::size_t j = 0; j < block; ++j) {
        if (j) s += ' ';
        s += fmt_double(p[j]);
      }
      s += '\n';
    }
  }
  for (std::size_t l = 0; l < g.d_attention.size(); ++l) {
    const std::size_t block = g.d_attention[l].size() / g.out_dim;
    for (int i = 0; i < g.out_dim; ++i) {
      s += "da " + std::to_string(l + 1) + " " + std::to_string(i) + "\n";
      const double* p = g.d_attention[l].data() + static_cast<std::size_t>(i) * block;
      for (std::size_t j = 0; j < block; ++j) {
        if (j) s += ' ';
        s += fmt_double(p[j]);
      }
      s += '\n';
    }
  }
  if (!g.d_pool_bias.empty()) {
    const std::size_t block = g.d_pool_bias.size() / g.out_dim;
    for (int i = 0; i < g.out_dim; ++i) {
      s += "db " + std::to_string(i) + "\n";
      const double* p = g.d_pool_bias.data() + static_cast<std::size_t>(i) * block;
      for (std::size_t j = 0; j < block; ++j) {
        if (j) s += ' ';
        s += fmt_double(p[j]);
      }
      s += '\n';
    }
  }
  s += "frobenius " + fmt_double(g.frobenius()) + "\n";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constant-query GNN embedding estimators"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read key = value defaults from a file");
  app.fallthrough();

  // gen
  struct {
    std::string type = "clique";
    int n = 100;
    int attach = 2;
    double p = 0.1;
    std::uint64_t seed = 1;
    int feat_dim = 10;
    std::uint64_t feature_seed = 1;
    std::string out, features;
  } gen;
  CLI::App* cgen = app.add_subcommand("gen", "generate a graph and feature file");
  cgen->add_option("--type", gen.type, "clique, star, ba or er");
  cgen->add_option("--n", gen.n, "number of nodes")->required();
  cgen->add_option("--attach", gen.attach, "ba: edges per new node");
  cgen->add_option("--p", gen.p, "er: edge probability");
  cgen->add_option("--seed", gen.seed, "structure seed (ba, er)");
  cgen->add_option("--feat-dim", gen.feat_dim, "feature width");
  cgen->add_option("--feature-seed", gen.feature_seed, "feature seed");
  cgen->add_option("--out", gen.out, "edge list output path")->required();
  cgen->add_option("--features", gen.features, "feature csv output path")->required();

  // embed / sample-embed / grad / sample-grad
  GraphArgs ga_embed, ga_sembed, ga_grad, ga_sgrad;
  ModelArgs ma_embed, ma_sembed, ma_grad, ma_sgrad;
  ParamArgs pa_embed, pa_sembed, pa_grad, pa_sgrad;
  ScheduleArgs sa_sembed, sa_sgrad;
  int node_embed = 0, node_sembed = 0, node_grad = 0, node_sgrad = 0;
  bool embed_all = false;
  std::uint64_t seed_sembed = 1, seed_sgrad = 1;
  std::string out_embed, out_sembed, out_grad, out_sgrad;

  CLI::App* cembed = app.add_subcommand("embed", "exact embedding of one node (or --all)");
  add_graph_flags(cembed, ga_embed);
  add_model_flags(cembed, ma_embed);
  add_param_flags(cembed, pa_embed);
  cembed->add_option("--node", node_embed, "target node");
  cembed->add_flag("--all", embed_all, "embed every node");
  cembed->add_option("--out", out_embed, "write output here instead of stdout");

  CLI::App* csembed = app.add_subcommand("sample-embed", "sampled embedding estimate");
  add_graph_flags(csembed, ga_sembed);
  add_model_flags(csembed, ma_sembed);
  add_param_flags(csembed, pa_sembed);
  add_schedule_flags(csembed, sa_sembed);
  csembed->add_option("--node", node_sembed, "target node")->required();
  csembed->add_option("--seed", seed_sembed, "estimator seed");
  csembed->add_option("--out", out_sembed, "write output here instead of stdout");

  CLI::App* cgrad = app.add_subcommand("grad", "exact parameter Jacobian of one node");
  add_graph_flags(cgrad, ga_grad);
  add_model_flags(cgrad, ma_grad);
  add_param_flags(cgrad, pa_grad);
  cgrad->add_option("--node", node_grad, "target node")->required();
  cgrad->add_option("--out", out_grad, "write output here instead of stdout");

  CLI::App* csgrad = app.add_subcommand("sample-grad", "sampled parameter Jacobian estimate");
  add_graph_flags(csgrad, ga_sgrad);
  add_model_flags(csgrad, ma_sgrad);
  add_param_flags(csgrad, pa_sgrad);
  add_schedule_flags(csgrad, sa_sgrad);
  csgrad->add_option("--node", node_sgrad, "target node")->required();
  csgrad->add_option("--seed", seed_sgrad, "estimator seed");
  csgrad->add_option("--out", out_sgrad, "write output here instead of stdout");

  // schedule
  ScheduleArgs sa_sched;
  int sched_layers = 2;
  CLI::App* csched = app.add_subcommand("schedule", "print the derived sample schedule");
  csched->add_option("--layers", sched_layers, "number of layers");
  csched->add_option("--eps", sa_sched.eps, "additive error target")->required();
  csched->add_option("--delta", sa_sched.delta, "failure probability")->required();
  csched->add_option("--bound", sa_sched.bound, "summand bound B");
  csched->add_option("--dim", sa_sched.dim, "union-bound dimension")->required();

  // exp
  CLI::App* cexp = app.add_subcommand("exp", "experiment drivers");
  cexp->require_subcommand(1);

  SpeedConfig speed_cfg;
  std::string speed_out;
  CLI::App* cspeed = cexp->add_subcommand("speed", "exact vs sampled wall time on cliques");
  cspeed->add_option("--min-exp", speed_cfg.min_exp, "smallest size 2^k");
  cspeed->add_option("--max-exp", speed_cfg.max_exp, "largest size 2^k");
  cspeed->add_option("--reps", speed_cfg.reps, "repetitions per size");
  cspeed->add_option("--schedule", speed_cfg.schedule, "per-layer sample counts")->delimiter(',');
  cspeed->add_option("--feat-dim", speed_cfg.feat_dim, "feature width");
  cspeed->add_option("--seed", speed_cfg.seed, "seed");
  cspeed->add_option("--out", speed_out, "csv output path")->required();

  ErrorConfig err_cfg;
  std::string err_out, err_variant = "sage_gcn", err_act = "relu";
  CLI::App* cerr = cexp->add_subcommand("error", "estimate error on an adversarial input");
  cerr->add_option("--input", err_cfg.input,
                   "normalization, no_normalization, grad_relu, grad_sigmoid, "
                   "unbounded_feature, pool, gcn_star, ba, er");
  cerr->add_option("--n", err_cfg.n, "input size for the fixed families");
  cerr->add_option("--r", err_cfg.r_list, "sample counts")->delimiter(',');
  cerr->add_option("--trials", err_cfg.trials, "trials per r");
  cerr->add_option("--seed", err_cfg.seed, "seed");
  cerr->add_option("--feat-dim", err_cfg.feat_dim, "feature width (ba, er)");
  cerr->add_option("--attach", err_cfg.ba_attach, "ba attachment count");
  cerr->add_option("--p", err_cfg.er_p, "er edge probability");
  cerr->add_option("--graphs", err_cfg.graphs, "graphs per r (ba, er)");
  cerr->add_option("--estimates", err_cfg.estimates, "estimates per graph (ba, er)");
  cerr->add_option("--model", err_variant, "variant for ba/er");
  cerr->add_option("--activation", err_act, "activation for ba/er");
  cerr->add_option("--out", err_out, "csv output path")->required();

  RateConfig rate_cfg;
  std::string rate_out;
  CLI::App* crate = cexp->add_subcommand("rate", "tail-quantile convergence rate fit");
  crate->add_option("--n", rate_cfg.n, "clique size");
  crate->add_option("--r", rate_cfg.r_list, "sample counts (>= 3)")->delimiter(',');
  crate->add_option("--trials", rate_cfg.trials, "trials per r");
  crate->add_option("--seed", rate_cfg.seed, "seed");
  crate->add_option("--out", rate_out, "csv output path")->required();

  RealConfig real_cfg;
  ModelArgs ma_real;
  std::string real_out;
  CLI::App* creal = cexp->add_subcommand("real", "error protocol on a loaded graph");
  creal->add_option("--graph", real_cfg.edge_path, "edge list file")->required();
  creal->add_option("--features", real_cfg.feature_path, "feature csv file")->required();
  creal->add_option("--params", real_cfg.params_path, "parameter file (omit to initialize)");
  add_model_flags(creal, ma_real);
  creal->add_option("--r", real_cfg.r_list, "sample counts, baseline first")->delimiter(',');
  creal->add_option("--test-nodes", real_cfg.test_nodes, "number of sampled test nodes");
  creal->add_option("--seed", real_cfg.seed, "seed");
  creal->add_option("--init-scale", real_cfg.init_scale, "stddev when initializing params");
  creal->add_option("--out", real_out, "csv output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cgen->parsed()) {
      Graph g = [&]() {
        if (gen.type == "clique") return gen_clique(gen.n, gen.feat_dim, gen.feature_seed);
        if (gen.type == "star") return gen_star(gen.n, gen.feat_dim, gen.feature_seed);
        if (gen.type == "ba")
          return gen_ba(gen.n, gen.attach, gen.seed, gen.feat_dim, gen.feature_seed);
        if (gen.type == "er")
          return gen_er(gen.n, gen.p, gen.seed, gen.feat_dim, gen.feature_seed);
        throw std::invalid_argument("gen: unknown --type '" + gen.type + "'");
      }();
      write_or_print(gen.out, graph_to_edge_list(g));
      write_or_print(gen.features, features_to_csv(g));
      std::cout << "wrote " << g.n() << " nodes, " << g.row_ptr[g.n()] / 2 << " edges\n";
      return 0;
    }

    if (cembed->parsed()) {
      Graph g0 = load_graph_files(ga_embed.graph, ga_embed.features);
      const ModelSpec spec = make_spec(ma_embed, g0.feature_dim());
      const Graph g =
          (ga_embed.self_loops || spec.needs_self_loops()) ? with_self_loops(g0) : std::move(g0);
      const Params params = make_params(pa_embed, spec);
      std::string text;
      if (embed_all) {
        Embeddings emb = exact_embed_all(g, spec, params);
        for (int v = 0; v < emb.n; ++v) {
          text += format_vec(Vec(emb.row(v), emb.row(v) + emb.dim));
          text += '\n';
        }
        text += format_queries(emb.queries);
      } else {
        EmbedResult res = exact_embed(g, spec, params, node_embed);
        text = "z " + format_vec(res.z) + "\n" + format_queries(res.queries);
      }
      write_or_print(out_embed, text);
      return 0;
    }

    if (csembed->parsed()) {
      Graph g0 = load_graph_files(ga_sembed.graph, ga_sembed.features);
      const ModelSpec spec = make_spec(ma_sembed, g0.feature_dim());
      const Graph g =
          (ga_sembed.self_loops || spec.needs_self_loops()) ? with_self_loops(g0) : std::move(g0);
      const Params params = make_params(pa_sembed, spec);
      const SampleSchedule sched = make_schedule(sa_sembed, spec);
      EmbedResult res = sampled_embed(g, spec, params, node_sembed, sched, seed_sembed);
      std::string text = "z " + format_vec(res.z) + "\n" + format_queries(res.queries);
      write_or_print(out_sembed, text);
      return 0;
    }

    if (cgrad->parsed()) {
      Graph g0 = load_graph_files(ga_grad.graph, ga_grad.features);
      const ModelSpec spec = make_spec(ma_grad, g0.feature_dim());
      const Graph g =
          (ga_grad.self_loops || spec.needs_self_loops()) ? with_self_loops(g0) : std::move(g0);
      const Params params = make_params(pa_grad, spec);
      write_or_print(out_grad, format_grad(exact_gradient(g, spec, params, node_grad)));
      return 0;
    }

    if (csgrad->parsed()) {
      Graph g0 = load_graph_files(ga_sgrad.graph, ga_sgrad.features);
      const ModelSpec spec = make_spec(ma_sgrad, g0.feature_dim());
      const Graph g =
          (ga_sgrad.self_loops || spec.needs_self_loops()) ? with_self_loops(g0) : std::move(g0);
      const Params params = make_params(pa_sgrad, spec);
      const SampleSchedule sched = make_schedule(sa_sgrad, spec);
      write_or_print(out_sgrad,
                     format_grad(sampled_gradient(g, spec, params, node_sgrad, sched, seed_sgrad)));
      return 0;
    }

    if (csched->parsed()) {
      ToleranceSpec tol{sa_sched.eps, sa_sched.delta, sa_sched.bound, sa_sched.dim};
      SampleSchedule s = default_schedule(sched_layers, tol);
      for (int l = 0; l < s.layers(); ++l)
        std::cout << "layer " << (l + 1) << " r " << s.r[l] << "\n";
      return 0;
    }

    if (cspeed->parsed()) {
      write_csv(speed_out, run_speed(speed_cfg));
      std::cout << "wrote " << speed_out << "\n";
      return 0;
    }
    if (cerr->parsed()) {
      err_cfg.variant = variant_from_string(err_variant);
      err_cfg.activation = activation_from_string(err_act);
      write_csv(err_out, run_error_vs_samples(err_cfg));
      std::cout << "wrote " << err_out << "\n";
      return 0;
    }
    if (crate->parsed()) {
      RateResult res = run_rate(rate_cfg);
      write_csv(rate_out, res.rows);
      for (std::size_t i = 0; i < res.p99.size(); ++i)
        std::cout << "r " << rate_cfg.r_list[i] << " p99 " << fmt_double(res.p99[i]) << "\n";
      std::cout << "slope " << fmt_double(res.slope) << "\nspearman "
                << fmt_double(res.spearman_rho) << "\nwrote " << rate_out << "\n";
      return 0;
    }
    if (creal->parsed()) {
      real_cfg.spec = make_spec(ma_real, [&]() {
        // peek at the feature width so --dims can be defaulted
        Graph g = load_graph_files(real_cfg.edge_path, real_cfg.feature_path);
        return g.feature_dim();
      }());
      RealResult res = run_on_loaded_graph(real_cfg);
      write_csv(real_out, res.rows);
      for (const TrialRecord& row : res.rows)
        std::cout << row.experiment << " r " << row.r << " normalized_p99 "
                  << fmt_double(row.error) << "\n";
      std::cout << "wrote " << real_out << "\n";
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
