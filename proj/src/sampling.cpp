#include "ctgnn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ctgnn/rng.hpp"

namespace ctgnn {

namespace {
double tail_bound(const ToleranceSpec& t, double r) {
  return 2.0 * t.dim *
         std::exp(-r * t.epsilon * t.epsilon / (2.0 * t.bound_b * t.bound_b * t.dim));
}
}  // namespace

int required_samples(const ToleranceSpec& tol) {
  if (!(tol.epsilon > 0.0)) throw std::invalid_argument("required_samples: epsilon must be > 0");
  if (!(tol.delta > 0.0) || !(tol.delta < 1.0))
    throw std::invalid_argument("required_samples: delta must lie in (0, 1)");
  if (!(tol.bound_b > 0.0)) throw std::invalid_argument("required_samples: bound must be > 0");
  if (tol.dim < 1) throw std::invalid_argument("required_samples: dim must be >= 1");
  const double raw = 2.0 * tol.bound_b * tol.bound_b * tol.dim / (tol.epsilon * tol.epsilon) *
                     std::log(2.0 * tol.dim / tol.delta);
  long long r = static_cast<long long>(std::ceil(raw));
  if (r < 1) r = 1;
  while (r > 1 && tail_bound(tol, static_cast<double>(r - 1)) <= tol.delta) --r;
  while (tail_bound(tol, static_cast<double>(r)) > tol.delta) ++r;
  if (r > (1ll << 40)) throw std::invalid_argument("required_samples: count overflows sanity cap");
  return static_cast<int>(r);
}

void SampleSchedule::validate() const {
  if (r.empty()) throw std::invalid_argument("schedule: needs at least one layer");
  for (int c : r)
    if (c < 1) throw std::invalid_argument("schedule: sample counts must be >= 1");
}

SampleSchedule default_schedule(int layers, const ToleranceSpec& tol) {
  if (layers < 1) throw std::invalid_argument("default_schedule: need at least one layer");
  SampleSchedule s;
  s.r.assign(layers, 0);
  ToleranceSpec top = tol;
  top.epsilon = tol.epsilon / 2.0;
  top.delta = tol.delta / 2.0;
  s.r[layers - 1] = required_samples(top);
  for (int l = layers - 1; l >= 1; --l) {
    ToleranceSpec inner = tol;
    inner.epsilon = tol.epsilon / (2.0 * layers);
    inner.delta = tol.delta / (4.0 * static_cast<double>(s.r[l]));
    s.r[l - 1] = required_samples(inner);
  }
  return s;
}

namespace {

struct SNode {
  int v = -1;
  int layer = 0;
  int deg = 0;
  std::vector<int> kids;  // kids[0] = own estimate for non-pool layers, then samples
  Vec z;
  double act_norm = 0.0;
  Vec upd_in;
  std::vector<double> alpha, tpre;  // gat
  std::vector<int> argmax;          // sage_pool
};

class SampledRun {
 public:
  SampledRun(const GraphView& g, const ModelSpec& spec, const Params& p,
             const SampleSchedule& sched, bool keep_tape)
      : g_(g), spec_(spec), p_(p), sched_(sched), keep_tape_(keep_tape) {
    spec_.validate();
    validate_params(spec_, p_);
    sched_.validate();
    if (sched_.layers() != spec_.layers)
      throw std::invalid_argument("schedule depth does not match model layers");
    if (g.feature_dim() != spec.dims[0])
      throw std::invalid_argument("graph feature width does not match dims[0]");
  }

  int estimate(int layer, int v, std::uint64_t seed, const NeighborPicker* picker) {
    if (v < 0 || v >= g_.n()) throw std::out_of_range("sampled engine: node id out of range");
    const int idx = static_cast<int>(tape_.size());
    tape_.emplace_back();
    tape_[idx].v = v;
    tape_[idx].layer = layer;

    if (layer == 0) {
      const auto x = oracle_feature(g_, v, log);
      tape_[idx].z.assign(x.begin(), x.end());
      return idx;
    }

    const int deg = oracle_degree(g_, v, log);
    tape_[idx].deg = deg;
    const int r = sched_.r[layer - 1];
    const Mat& w = p_.weights[layer - 1];
    const int dprev = spec_.dims[layer - 1];

    if (deg == 0) throw std::domain_error("sampled engine: node has degree 0");

    // The call's own stream supplies the sample indices; children get
    // derived seeds afterwards.
    Rng rng(seed);
    std::vector<int> picks(r);
    for (int k = 0; k < r; ++k) {
      const int i = picker ? (*picker)(v, layer, k) : rng.bounded(deg);
      picks[k] = oracle_neighbor(g_, v, i, log);
    }

    // Recursive calls grow the tape, so collect child indices locally and
    // only take a reference to this node once the subtree is complete.
    const bool has_own = spec_.variant != Variant::sage_pool;
    std::vector<int> kids;
    kids.reserve(r + (has_own ? 1 : 0));
    if (has_own) kids.push_back(estimate(layer - 1, v, derive_seed(seed, layer, 0), picker));
    for (int k = 0; k < r; ++k)
      kids.push_back(estimate(layer - 1, picks[k], derive_seed(seed, layer, k + 1), picker));

    SNode& node = tape_[idx];
    node.kids = kids;
    node.z.assign(w.rows, 0.0);

    switch (spec_.variant) {
      case Variant::sage_gcn:
      case Variant::sage_mean: {
        const double s = message_scale(spec_.variant, deg, deg);
        const double blowup = static_cast<double>(deg) / static_cast<double>(r);
        node.upd_in.assign(w.cols, 0.0);
        double* h = node.upd_in.data() +
                    (spec_.variant == Variant::sage_mean ? dprev : 0);
        for (int k = 0; k < r; ++k) axpy(s, tape_[kids[1 + k]].z.data(), h, dprev);
        for (int j = 0; j < dprev; ++j) h[j] *= blowup;
        if (spec_.variant == Variant::sage_mean) {
          const Vec& own = tape_[kids[0]].z;
          std::copy(own.begin(), own.end(), node.upd_in.begin());
        }
        gemv(w, node.upd_in.data(), node.z.data());
        break;
      }
      case Variant::gcn: {
        const double blowup = static_cast<double>(deg) / static_cast<double>(r);
        node.upd_in.assign(dprev, 0.0);
        for (int k = 0; k < r; ++k) {
          const int du = oracle_degree(g_, picks[k], log);
          const double s = message_scale(Variant::gcn, deg, du);
          axpy(s, tape_[kids[1 + k]].z.data(), node.upd_in.data(), dprev);
        }
        for (int j = 0; j < dprev; ++j) node.upd_in[j] *= blowup;
        gemv(w, node.upd_in.data(), node.z.data());
        break;
      }
      case Variant::gat: {
        // Attention renormalizes over the sampled multiset, so no deg/r
        // blow-up factor is applied.
        const Vec& a = p_.attention[layer - 1];
        const double* a1 = a.data();
        const double* a2 = a.data() + w.rows;
        Vec pw(w.rows);
        gemv(w, tape_[kids[0]].z.data(), pw.data());
        const double c1 = dot(a1, pw.data(), w.rows);
        std::vector<double> t(r), al(r);
        for (int k = 0; k < r; ++k) {
          gemv(w, tape_[kids[1 + k]].z.data(), pw.data());
          t[k] = c1 + dot(a2, pw.data(), w.rows);
        }
        double mx = leaky_relu(t[0]);
        for (int k = 1; k < r; ++k) mx = std::max(mx, leaky_relu(t[k]));
        double denom = 0.0;
        for (int k = 0; k < r; ++k) {
          al[k] = std::exp(leaky_relu(t[k]) - mx);
          denom += al[k];
        }
        for (int k = 0; k < r; ++k) al[k] /= denom;
        node.upd_in.assign(dprev, 0.0);
        for (int k = 0; k < r; ++k)
          axpy(al[k], tape_[kids[1 + k]].z.data(), node.upd_in.data(), dprev);
        gemv(w, node.upd_in.data(), node.z.data());
        node.alpha = std::move(al);
        if (keep_tape_) node.tpre = std::move(t);
        break;
      }
      case Variant::sage_pool: {
        node.argmax.assign(w.rows, 0);
        Vec y(w.rows);
        for (int k = 0; k < r; ++k) {
          gemv(w, tape_[kids[k]].z.data(), y.data());
          for (int i = 0; i < w.rows; ++i) y[i] += p_.pool_bias[i];
          activation_apply_inplace(spec_.activation, y.data(), w.rows, nullptr);
          if (k == 0) {
            std::copy(y.begin(), y.end(), node.z.begin());
          } else {
            for (int i = 0; i < w.rows; ++i)
              if (y[i] > node.z[i]) {
                node.z[i] = y[i];
                node.argmax[i] = k;
              }
          }
        }
        return idx;
      }
    }
    activation_apply_inplace(spec_.activation, node.z.data(), w.rows, &tape_[idx].act_norm);
    return idx;
  }

  GradTensor backward(int root);

  QueryLog log;
  std::vector<SNode> tape_;

 private:
  void back_node(int idx, const Vec& zb, GradTensor& grad, int out_slice);

  const GraphView& g_;
  ModelSpec spec_;
  const Params& p_;
  SampleSchedule sched_;
  bool keep_tape_;
};

GradTensor SampledRun::backward(int root) {
  const int L = spec_.layers;
  const int out_dim = spec_.dims[L];
  GradTensor grad;
  grad.out_dim = out_dim;
  grad.d_weights.resize(L);
  for (int l = 0; l < L; ++l)
    grad.d_weights[l].assign(
        static_cast<std::size_t>(out_dim) * p_.weights[l].rows * p_.weights[l].cols, 0.0);
  if (spec_.variant == Variant::gat) {
    grad.d_attention.resize(L);
    for (int l = 0; l < L; ++l)
      grad.d_attention[l].assign(static_cast<std::size_t>(out_dim) * p_.attention[l].size(), 0.0);
  }
  if (spec_.variant == Variant::sage_pool)
    grad.d_pool_bias.assign(static_cast<std::size_t>(out_dim) * p_.pool_bias.size(), 0.0);

  for (int i = 0; i < out_dim; ++i) {
    Vec seed_bar(out_dim, 0.0);
    seed_bar[i] = 1.0;
    back_node(root, seed_bar, grad, i);
  }
  return grad;
}

void SampledRun::back_node(int idx, const Vec& zb, GradTensor& grad, int out_slice) {
  const SNode& node = tape_[idx];
  if (node.layer == 0) return;
  bool live = false;
  for (double x : zb)
    if (x != 0.0) {
      live = true;
      break;
    }
  if (!live) return;

  const int l = node.layer;
  const Mat& w = p_.weights[l - 1];
  const int dl = w.rows;
  const int dprev = spec_.dims[l - 1];
  const int r = sched_.r[l - 1];
  double* dw = grad.d_weights[l - 1].data() + static_cast<std::size_t>(out_slice) * w.rows * w.cols;

  if (spec_.variant == Variant::sage_pool) {
    double* db = grad.d_pool_bias.data() + static_cast<std::size_t>(out_slice) * dl;
    std::vector<std::pair<int, int>> win(dl);
    for (int j = 0; j < dl; ++j) win[j] = {node.argmax[j], j};
    std::sort(win.begin(), win.end());
    Vec y(dl), ybar(dl), qbar(dl);
    for (std::size_t s = 0; s < win.size();) {
      std::size_t e = s;
      while (e < win.size() && win[e].first == win[s].first) ++e;
      const int k = win[s].first;
      const Vec& zin = tape_[node.kids[k]].z;
      gemv(w, zin.data(), y.data());
      for (int j = 0; j < dl; ++j) y[j] += p_.pool_bias[j];
      double nrm = 0.0;
      activation_apply_inplace(spec_.activation, y.data(), dl, &nrm);
      std::fill(ybar.begin(), ybar.end(), 0.0);
      for (std::size_t t = s; t < e; ++t) ybar[win[t].second] = zb[win[t].second];
      activation_vjp(spec_.activation, y.data(), nrm, ybar.data(), qbar.data(), dl);
      outer_add(dw, qbar.data(), dl, zin.data(), dprev);
      for (int j = 0; j < dl; ++j) db[j] += qbar[j];
      Vec kid_bar(dprev, 0.0);
      gemv_t_add(w, qbar.data(), kid_bar.data());
      back_node(node.kids[k], kid_bar, grad, out_slice);
      s = e;
    }
    return;
  }

  Vec abar(dl);
  activation_vjp(spec_.activation, node.z.data(), node.act_norm, zb.data(), abar.data(), dl);
  outer_add(dw, abar.data(), dl, node.upd_in.data(), w.cols);
  Vec in_bar(w.cols, 0.0);
  gemv_t_add(w, abar.data(), in_bar.data());

  switch (spec_.variant) {
    case Variant::sage_gcn:
    case Variant::sage_mean: {
      const double* hbar = in_bar.data();
      if (spec_.variant == Variant::sage_mean) {
        Vec own_bar(in_bar.begin(), in_bar.begin() + dprev);
        back_node(node.kids[0], own_bar, grad, out_slice);
        hbar = in_bar.data() + dprev;
      }
      const double s = message_scale(spec_.variant, node.deg, node.deg);
      const double blowup = static_cast<double>(node.deg) / static_cast<double>(r);
      Vec kid_bar(dprev);
      for (int k = 0; k < r; ++k) {
        for (int j = 0; j < dprev; ++j) kid_bar[j] = hbar[j] * blowup * s;
        back_node(node.kids[1 + k], kid_bar, grad, out_slice);
      }
      break;
    }
    case Variant::gcn: {
      const double blowup = static_cast<double>(node.deg) / static_cast<double>(r);
      Vec kid_bar(dprev);
      for (int k = 0; k < r; ++k) {
        const int kid = node.kids[1 + k];
        const double s = message_scale(Variant::gcn, node.deg, g_.degree(tape_[kid].v));
        for (int j = 0; j < dprev; ++j) kid_bar[j] = in_bar[j] * blowup * s;
        back_node(kid, kid_bar, grad, out_slice);
      }
      break;
    }
    case Variant::gat: {
      const Vec& a = p_.attention[l - 1];
      const double* a1 = a.data();
      const double* a2 = a.data() + dl;
      const std::vector<double>& al = node.alpha;
      const std::vector<double>& t = node.tpre;
      const double* hbar = in_bar.data();
      std::vector<double> albar(r);
      std::vector<Vec> kid_bar(r, Vec(dprev, 0.0));
      for (int k = 0; k < r; ++k) {
        const Vec& zk = tape_[node.kids[1 + k]].z;
        albar[k] = dot(zk.data(), hbar, dprev);
        axpy(al[k], hbar, kid_bar[k].data(), dprev);
      }
      double ssum = 0.0;
      for (int k = 0; k < r; ++k) ssum += al[k] * albar[k];
      double tbar_sum = 0.0;
      Vec pw(dl), pbar(dl);
      double* da = grad.d_attention[l - 1].data() + static_cast<std::size_t>(out_slice) * a.size();
      for (int k = 0; k < r; ++k) {
        const double sbar = al[k] * (albar[k] - ssum);
        const double tbar = sbar * leaky_relu_grad(t[k]);
        tbar_sum += tbar;
        if (tbar == 0.0) continue;
        const Vec& zk = tape_[node.kids[1 + k]].z;
        gemv(w, zk.data(), pw.data());
        axpy(tbar, pw.data(), da + dl, dl);
        for (int j = 0; j < dl; ++j) pbar[j] = tbar * a2[j];
        outer_add(dw, pbar.data(), dl, zk.data(), dprev);
        gemv_t_add(w, pbar.data(), kid_bar[k].data());
      }
      Vec own_bar(dprev, 0.0);
      const Vec& zown = tape_[node.kids[0]].z;
      if (tbar_sum != 0.0) {
        gemv(w, zown.data(), pw.data());
        axpy(tbar_sum, pw.data(), da, dl);
        for (int j = 0; j < dl; ++j) pbar[j] = tbar_sum * a1[j];
        outer_add(dw, pbar.data(), dl, zown.data(), dprev);
        gemv_t_add(w, pbar.data(), own_bar.data());
      }
      back_node(node.kids[0], own_bar, grad, out_slice);
      for (int k = 0; k < r; ++k) back_node(node.kids[1 + k], kid_bar[k], grad, out_slice);
      break;
    }
    case Variant::sage_pool:
      break;  // handled above
  }
}

}  // namespace

EmbedResult sampled_embed(const GraphView& g, const ModelSpec& spec, const Params& p, int v,
                          const SampleSchedule& sched, std::uint64_t seed) {
  SampledRun run(g, spec, p, sched, /*keep_tape=*/false);
  const int root = run.estimate(spec.layers, v, seed, nullptr);
  EmbedResult out;
  out.z = run.tape_[root].z;
  out.queries = run.log;
  return out;
}

EmbedResult sampled_embed_with_picker(const GraphView& g, const ModelSpec& spec, const Params& p,
                                      int v, const SampleSchedule& sched,
                                      const NeighborPicker& picker) {
  SampledRun run(g, spec, p, sched, /*keep_tape=*/false);
  const int root = run.estimate(spec.layers, v, 0, &picker);
  EmbedResult out;
  out.z = run.tape_[root].z;
  out.queries = run.log;
  return out;
}

GradTensor sampled_gradient(const GraphView& g, const ModelSpec& spec, const Params& p, int v,
                            const SampleSchedule& sched, std::uint64_t seed) {
  SampledRun run(g, spec, p, sched, /*keep_tape=*/true);
  const int root = run.estimate(spec.layers, v, seed, nullptr);
  return run.backward(root);
}

std::vector<std::vector<double>> sampled_attention_trace(const GraphView& g,
                                                         const ModelSpec& spec, const Params& p,
                                                         int v, const SampleSchedule& sched,
                                                         std::uint64_t seed) {
  if (spec.variant != Variant::gat)
    throw std::invalid_argument("sampled_attention_trace: only defined for gat");
  SampledRun run(g, spec, p, sched, /*keep_tape=*/true);
  run.estimate(spec.layers, v, seed, nullptr);
  std::vector<std::vector<double>> out;
  for (const SNode& node : run.tape_)
    if (node.layer > 0) out.push_back(node.alpha);
  return out;
}

EmbedResult sampled_graph_embed(const GraphView& g, const ModelSpec& spec, const Params& p,
                                int num_nodes, const SampleSchedule& sched, std::uint64_t seed) {
  if (num_nodes < 1) throw std::invalid_argument("sampled_graph_embed: need at least one draw");
  Rng node_rng(derive_seed(seed, 0x6e6f6465, 0));
  EmbedResult acc;
  acc.z.assign(spec.dims[spec.layers], 0.0);
  for (int j = 0; j < num_nodes; ++j) {
    const int v = node_rng.bounded(g.n());
    EmbedResult one = sampled_embed(g, spec, p, v, sched, derive_seed(seed, 1, j));
    for (std::size_t i = 0; i < acc.z.size(); ++i) acc.z[i] += one.z[i];
    acc.queries += one.queries;
  }
  for (double& x : acc.z) x /= static_cast<double>(num_nodes);
  return acc;
}

}  // namespace ctgnn
