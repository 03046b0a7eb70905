#include "ctgnn/exact.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ctgnn {

ReceptiveField receptive_field(const GraphView& g, int layers, int v, QueryLog& log) {
  if (v < 0 || v >= g.n()) throw std::out_of_range("receptive_field: node id out of range");
  if (layers < 1) throw std::invalid_argument("receptive_field: need at least one layer");
  ReceptiveField rf;
  rf.level.assign(layers + 1, {});
  rf.level[layers] = {v};
  std::vector<int> nbrs;
  for (int l = layers; l >= 1; --l) {
    std::vector<int>& prev = rf.level[l - 1];
    for (int u : rf.level[l]) {
      oracle_degree(g, u, log);
      oracle_neighbors(g, u, nbrs, log);
      prev.insert(prev.end(), nbrs.begin(), nbrs.end());
    }
    std::sort(prev.begin(), prev.end());
    prev.erase(std::unique(prev.begin(), prev.end()), prev.end());
  }
  return rf;
}

double GradTensor::frobenius() const {
  double s = 0.0;
  for (const auto& blk : d_weights)
    for (double x : blk) s += x * x;
  for (const auto& blk : d_attention)
    for (double x : blk) s += x * x;
  for (double x : d_pool_bias) s += x * x;
  return std::sqrt(s);
}

double frobenius_diff(const GradTensor& x, const GradTensor& y) {
  if (x.out_dim != y.out_dim || x.d_weights.size() != y.d_weights.size() ||
      x.d_attention.size() != y.d_attention.size() ||
      x.d_pool_bias.size() != y.d_pool_bias.size())
    throw std::invalid_argument("frobenius_diff: mismatched gradient shapes");
  double s = 0.0;
  for (std::size_t l = 0; l < x.d_weights.size(); ++l) {
    if (x.d_weights[l].size() != y.d_weights[l].size())
      throw std::invalid_argument("frobenius_diff: mismatched gradient shapes");
    for (std::size_t i = 0; i < x.d_weights[l].size(); ++i) {
      const double t = x.d_weights[l][i] - y.d_weights[l][i];
      s += t * t;
    }
  }
  for (std::size_t l = 0; l < x.d_attention.size(); ++l) {
    if (x.d_attention[l].size() != y.d_attention[l].size())
      throw std::invalid_argument("frobenius_diff: mismatched gradient shapes");
    for (std::size_t i = 0; i < x.d_attention[l].size(); ++i) {
      const double t = x.d_attention[l][i] - y.d_attention[l][i];
      s += t * t;
    }
  }
  for (std::size_t i = 0; i < x.d_pool_bias.size(); ++i) {
    const double t = x.d_pool_bias[i] - y.d_pool_bias[i];
    s += t * t;
  }
  return std::sqrt(s);
}

namespace {

struct Level {
  std::vector<int> nodes;
  std::vector<int> row_of;  // node -> row index, -1 when absent
};

// One forward evaluation over level sets, with optional tape retention for
// the backward sweep. All graph access is charged through the stamp arrays,
// so each distinct node costs one degree probe, degree(u) neighbor probes and
// one feature probe no matter how many times a pass revisits it.
class ExactRun {
 public:
  ExactRun(const GraphView& g, const ModelSpec& spec, const Params& p, bool keep_tape)
      : g_(g), spec_(spec), p_(p), keep_tape_(keep_tape) {
    spec_.validate();
    validate_params(spec_, p_);
    if (g.feature_dim() != spec.dims[0])
      throw std::invalid_argument("graph feature width does not match dims[0]");
    const int n = g.n();
    deg_charged_.assign(n, 0);
    adj_charged_.assign(n, 0);
    feat_have_.assign(n, 0);
    feat_store_.resize(static_cast<std::size_t>(n) * g.feature_dim());
    scratch_.reserve(64);
  }

  void run_single(int v) {
    if (v < 0 || v >= g_.n()) throw std::out_of_range("exact engine: node id out of range");
    const int L = spec_.layers;
    levels_.assign(L + 1, {});
    levels_[L].nodes = {v};
    build_row_of(levels_[L]);
    const int lowest = (spec_.variant == Variant::gat) ? 1 : 2;
    for (int l = L; l >= lowest; --l) {
      std::vector<int>& prev = levels_[l - 1].nodes;
      for (int u : levels_[l].nodes) {
        const auto nbrs = fetch_neighbors(u);
        prev.insert(prev.end(), nbrs.begin(), nbrs.end());
      }
      if (spec_.variant == Variant::sage_mean || spec_.variant == Variant::gat)
        prev.insert(prev.end(), levels_[l].nodes.begin(), levels_[l].nodes.end());
      std::sort(prev.begin(), prev.end());
      prev.erase(std::unique(prev.begin(), prev.end()), prev.end());
      build_row_of(levels_[l - 1]);
    }
    forward();
  }

  void run_all() {
    const int L = spec_.layers;
    levels_.assign(L + 1, {});
    std::vector<int> all(g_.n());
    for (int v = 0; v < g_.n(); ++v) all[v] = v;
    for (int l = 0; l <= L; ++l) {
      levels_[l].nodes = all;
      build_row_of(levels_[l]);
    }
    forward();
  }

  GradTensor backward(int target_row);

  const Mat& top() const { return z_.back(); }
  QueryLog log;

 private:
  std::span<const int> fetch_neighbors(int u) {
    if (!deg_charged_[u]) {
      deg_charged_[u] = 1;
      ++log.degree_queries;
    }
    const int d = g_.degree(u);
    scratch_.resize(d);
    g_.neighbors_into(u, scratch_.data());
    if (!adj_charged_[u]) {
      adj_charged_[u] = 1;
      log.neighbor_queries += d;
    }
    return {scratch_.data(), static_cast<std::size_t>(d)};
  }

  int get_degree(int u) {
    if (!deg_charged_[u]) {
      deg_charged_[u] = 1;
      ++log.degree_queries;
    }
    return g_.degree(u);
  }

  const double* get_feature(int w) {
    const int d0 = g_.feature_dim();
    double* slot = feat_store_.data() + static_cast<std::size_t>(w) * d0;
    if (!feat_have_[w]) {
      feat_have_[w] = 1;
      ++log.feature_queries;
      const double* x = g_.feature(w);
      std::copy(x, x + d0, slot);
    }
    return slot;
  }

  void build_row_of(Level& lv) {
    lv.row_of.assign(g_.n(), -1);
    for (std::size_t r = 0; r < lv.nodes.size(); ++r) lv.row_of[lv.nodes[r]] = static_cast<int>(r);
  }

  const double* z_prev(int layer, int w) {
    if (layer == 1) return get_feature(w);
    return z_[layer - 1].row(levels_[layer - 1].row_of[w]);
  }

  void forward();
  void forward_node(int layer, int row, int u);

  const GraphView& g_;
  ModelSpec spec_;
  const Params& p_;
  bool keep_tape_;

  std::vector<char> deg_charged_, adj_charged_, feat_have_;
  std::vector<double> feat_store_;
  std::vector<int> scratch_;

  std::vector<Level> levels_;       // 0..L
  std::vector<Mat> z_;              // z_[l] rows align with levels_[l], l >= 1
  std::vector<Mat> upd_in_;         // input of W at layer l (not sage_pool)
  std::vector<std::vector<double>> act_norm_;
  std::vector<Mat> wz_;             // gat: W^(l) z^(l-1) rows align with levels_[l-1]
  std::vector<std::vector<std::vector<double>>> alpha_, tpre_;  // gat per node
  std::vector<std::vector<std::vector<int>>> argmax_;           // sage_pool per node

  friend struct BackwardSweep;
};

void ExactRun::forward() {
  const int L = spec_.layers;
  z_.assign(L + 1, {});
  upd_in_.assign(L + 1, {});
  act_norm_.assign(L + 1, {});
  wz_.assign(L + 1, {});
  alpha_.assign(L + 1, {});
  tpre_.assign(L + 1, {});
  argmax_.assign(L + 1, {});

  for (int l = 1; l <= L; ++l) {
    const int rows = static_cast<int>(levels_[l].nodes.size());
    z_[l] = Mat(rows, spec_.dims[l]);
    act_norm_[l].assign(rows, 0.0);
    if (spec_.variant != Variant::sage_pool) upd_in_[l] = Mat(rows, spec_.update_in_width(l - 1));
    if (spec_.variant == Variant::gat) {
      // Transformed states of every node feeding layer l.
      const Level& below = levels_[l - 1];
      wz_[l] = Mat(static_cast<int>(below.nodes.size()), spec_.dims[l]);
      for (std::size_t r = 0; r < below.nodes.size(); ++r)
        gemv(p_.weights[l - 1], z_prev(l, below.nodes[r]), wz_[l].row(static_cast<int>(r)));
      alpha_[l].resize(rows);
      tpre_[l].resize(rows);
    }
    if (spec_.variant == Variant::sage_pool) argmax_[l].resize(rows);

    for (int r = 0; r < rows; ++r) forward_node(l, r, levels_[l].nodes[r]);

    if (!keep_tape_ && l >= 2) {
      // The layer below is no longer needed once this one is done.
      z_[l - 1] = Mat();
      upd_in_[l - 1] = Mat();
      wz_[l - 1] = Mat();
    }
  }
}

void ExactRun::forward_node(int layer, int row, int u) {
  const Mat& w = p_.weights[layer - 1];
  const int dprev = spec_.dims[layer - 1];
  const auto nbrs = fetch_neighbors(u);
  const int deg = static_cast<int>(nbrs.size());
  double* zrow = z_[layer].row(row);

  switch (spec_.variant) {
    case Variant::sage_gcn:
    case Variant::sage_mean: {
      const double s = message_scale(spec_.variant, deg, deg);
      double* h = upd_in_[layer].row(row);
      double* hsum = (spec_.variant == Variant::sage_mean) ? h + dprev : h;
      std::fill(hsum, hsum + dprev, 0.0);
      for (int nb : nbrs) axpy(s, z_prev(layer, nb), hsum, dprev);
      if (spec_.variant == Variant::sage_mean) {
        const double* own = z_prev(layer, u);
        std::copy(own, own + dprev, h);
      }
      gemv(w, h, zrow);
      break;
    }
    case Variant::gcn: {
      double* h = upd_in_[layer].row(row);
      std::fill(h, h + dprev, 0.0);
      for (int nb : nbrs) {
        const double s = message_scale(Variant::gcn, deg, get_degree(nb));
        axpy(s, z_prev(layer, nb), h, dprev);
      }
      gemv(w, h, zrow);
      break;
    }
    case Variant::gat: {
      if (deg == 0) throw std::domain_error("gat: node has degree 0");
      const Level& below = levels_[layer - 1];
      const Vec& a = p_.attention[layer - 1];
      const double* a1 = a.data();
      const double* a2 = a.data() + w.rows;
      const double c1 = dot(a1, wz_[layer].row(below.row_of[u]), w.rows);
      std::vector<double> t(deg), al(deg);
      for (int k = 0; k < deg; ++k)
        t[k] = c1 + dot(a2, wz_[layer].row(below.row_of[nbrs[k]]), w.rows);
      double mx = leaky_relu(t[0]);
      for (int k = 1; k < deg; ++k) mx = std::max(mx, leaky_relu(t[k]));
      double denom = 0.0;
      for (int k = 0; k < deg; ++k) {
        al[k] = std::exp(leaky_relu(t[k]) - mx);
        denom += al[k];
      }
      for (int k = 0; k < deg; ++k) al[k] /= denom;
      double* h = upd_in_[layer].row(row);
      std::fill(h, h + dprev, 0.0);
      for (int k = 0; k < deg; ++k) axpy(al[k], z_prev(layer, nbrs[k]), h, dprev);
      gemv(w, h, zrow);
      if (keep_tape_) {
        alpha_[layer][row] = std::move(al);
        tpre_[layer][row] = std::move(t);
      }
      break;
    }
    case Variant::sage_pool: {
      if (deg == 0) throw std::domain_error("sage_pool: node has degree 0");
      std::vector<int>& am = argmax_[layer][row];
      am.assign(w.rows, 0);
      Vec y(w.rows);
      for (int k = 0; k < deg; ++k) {
        gemv(w, z_prev(layer, nbrs[k]), y.data());
        for (int i = 0; i < w.rows; ++i) y[i] += p_.pool_bias[i];
        activation_apply_inplace(spec_.activation, y.data(), w.rows, nullptr);
        if (k == 0) {
          std::copy(y.begin(), y.end(), zrow);
        } else {
          for (int i = 0; i < w.rows; ++i)
            if (y[i] > zrow[i]) {
              zrow[i] = y[i];
              am[i] = k;
            }
        }
      }
      return;  // pool layers have no separate update step
    }
  }
  activation_apply_inplace(spec_.activation, zrow, w.rows, &act_norm_[layer][row]);
}

GradTensor ExactRun::backward(int target_row) {
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

  std::vector<int> nbrs;
  for (int i = 0; i < out_dim; ++i) {
    // Adjoints of z_[l], rows aligned with levels_[l].
    std::vector<Mat> zbar(L + 1);
    for (int l = 1; l <= L; ++l)
      zbar[l] = Mat(static_cast<int>(levels_[l].nodes.size()), spec_.dims[l]);
    zbar[L].row(target_row)[i] = 1.0;

    for (int l = L; l >= 1; --l) {
      const Mat& w = p_.weights[l - 1];
      const int dl = spec_.dims[l];
      const int dprev = spec_.dims[l - 1];
      double* dw = grad.d_weights[l - 1].data() +
                   static_cast<std::size_t>(i) * w.rows * w.cols;
      Vec abar(dl), qbar(dl);
      for (std::size_t r = 0; r < levels_[l].nodes.size(); ++r) {
        const double* zb = zbar[l].row(static_cast<int>(r));
        bool live = false;
        for (int j = 0; j < dl && !live; ++j) live = zb[j] != 0.0;
        if (!live) continue;
        const int u = levels_[l].nodes[r];
        nbrs.resize(g_.degree(u));
        g_.neighbors_into(u, nbrs.data());
        const int deg = static_cast<int>(nbrs.size());

        if (spec_.variant == Variant::sage_pool) {
          const std::vector<int>& am = argmax_[l][static_cast<int>(r)];
          double* db = grad.d_pool_bias.data() + static_cast<std::size_t>(i) * dl;
          // Handle each winning neighbor once.
          std::vector<std::pair<int, int>> win(dl);
          for (int j = 0; j < dl; ++j) win[j] = {am[j], j};
          std::sort(win.begin(), win.end());
          Vec y(dl), ybar(dl), in_bar(dprev);
          for (std::size_t s = 0; s < win.size();) {
            std::size_t e = s;
            while (e < win.size() && win[e].first == win[s].first) ++e;
            const int k = win[s].first;
            const double* zin = z_prev(l, nbrs[k]);
            gemv(w, zin, y.data());
            for (int j = 0; j < dl; ++j) y[j] += p_.pool_bias[j];
            double nrm = 0.0;
            activation_apply_inplace(spec_.activation, y.data(), dl, &nrm);
            std::fill(ybar.begin(), ybar.end(), 0.0);
            for (std::size_t t = s; t < e; ++t) ybar[win[t].second] = zb[win[t].second];
            activation_vjp(spec_.activation, y.data(), nrm, ybar.data(), qbar.data(), dl);
            outer_add(dw, qbar.data(), dl, zin, dprev);
            for (int j = 0; j < dl; ++j) db[j] += qbar[j];
            if (l > 1) {
              std::fill(in_bar.begin(), in_bar.end(), 0.0);
              gemv_t_add(w, qbar.data(), in_bar.data());
              double* tgt = zbar[l - 1].row(levels_[l - 1].row_of[nbrs[k]]);
              for (int j = 0; j < dprev; ++j) tgt[j] += in_bar[j];
            }
            s = e;
          }
          continue;
        }

        activation_vjp(spec_.activation, z_[l].row(static_cast<int>(r)), act_norm_[l][r],
                       zb, abar.data(), dl);
        const double* uin = upd_in_[l].row(static_cast<int>(r));
        outer_add(dw, abar.data(), dl, uin, w.cols);
        Vec in_bar(w.cols, 0.0);
        gemv_t_add(w, abar.data(), in_bar.data());

        switch (spec_.variant) {
          case Variant::sage_gcn:
          case Variant::sage_mean: {
            const double* hbar = in_bar.data();
            if (spec_.variant == Variant::sage_mean) {
              if (l > 1) {
                double* own = zbar[l - 1].row(levels_[l - 1].row_of[u]);
                for (int j = 0; j < dprev; ++j) own[j] += in_bar[j];
              }
              hbar = in_bar.data() + dprev;
            }
            if (l > 1) {
              const double s = message_scale(spec_.variant, deg, deg);
              for (int nb : nbrs)
                axpy(s, hbar, zbar[l - 1].row(levels_[l - 1].row_of[nb]), dprev);
            }
            break;
          }
          case Variant::gcn: {
            if (l > 1) {
              for (int nb : nbrs) {
                const double s = message_scale(Variant::gcn, deg, g_.degree(nb));
                axpy(s, in_bar.data(), zbar[l - 1].row(levels_[l - 1].row_of[nb]), dprev);
              }
            }
            break;
          }
          case Variant::gat: {
            const Level& below = levels_[l - 1];
            const Vec& a = p_.attention[l - 1];
            const double* a1 = a.data();
            const double* a2 = a.data() + dl;
            const std::vector<double>& al = alpha_[l][r];
            const std::vector<double>& t = tpre_[l][r];
            const double* hbar = in_bar.data();
            // h = sum_k alpha_k z_k
            std::vector<double> albar(deg);
            for (int k = 0; k < deg; ++k) {
              albar[k] = dot(z_prev(l, nbrs[k]), hbar, dprev);
              if (l > 1)
                axpy(al[k], hbar, zbar[l - 1].row(below.row_of[nbrs[k]]), dprev);
            }
            double ssum = 0.0;
            for (int k = 0; k < deg; ++k) ssum += al[k] * albar[k];
            double tbar_sum = 0.0;
            Vec pbar(dl), a1bar(dl, 0.0), a2bar(dl, 0.0), inb(dprev);
            for (int k = 0; k < deg; ++k) {
              const double sbar = al[k] * (albar[k] - ssum);
              const double tbar = sbar * leaky_relu_grad(t[k]);
              tbar_sum += tbar;
              if (tbar == 0.0) continue;
              const double* pw = wz_[l].row(below.row_of[nbrs[k]]);
              axpy(tbar, pw, a2bar.data(), dl);
              // p_k = W z_k path
              for (int j = 0; j < dl; ++j) pbar[j] = tbar * a2[j];
              const double* zin = z_prev(l, nbrs[k]);
              outer_add(dw, pbar.data(), dl, zin, dprev);
              if (l > 1) {
                std::fill(inb.begin(), inb.end(), 0.0);
                gemv_t_add(w, pbar.data(), inb.data());
                double* tgt = zbar[l - 1].row(below.row_of[nbrs[k]]);
                for (int j = 0; j < dprev; ++j) tgt[j] += inb[j];
              }
            }
            // self term: every score shares c1 = a1 . (W z_u)
            const double* pu = wz_[l].row(below.row_of[u]);
            axpy(tbar_sum, pu, a1bar.data(), dl);
            if (tbar_sum != 0.0) {
              for (int j = 0; j < dl; ++j) pbar[j] = tbar_sum * a1[j];
              const double* zin = z_prev(l, u);
              outer_add(dw, pbar.data(), dl, zin, dprev);
              if (l > 1) {
                std::fill(inb.begin(), inb.end(), 0.0);
                gemv_t_add(w, pbar.data(), inb.data());
                double* tgt = zbar[l - 1].row(below.row_of[u]);
                for (int j = 0; j < dprev; ++j) tgt[j] += inb[j];
              }
            }
            double* da = grad.d_attention[l - 1].data() +
                         static_cast<std::size_t>(i) * a.size();
            for (int j = 0; j < dl; ++j) {
              da[j] += a1bar[j];
              da[dl + j] += a2bar[j];
            }
            break;
          }
          case Variant::sage_pool:
            break;  // handled above
        }
      }
    }
  }
  return grad;
}

}  // namespace

EmbedResult exact_embed(const GraphView& g, const ModelSpec& spec, const Params& p, int v) {
  ExactRun run(g, spec, p, /*keep_tape=*/false);
  run.run_single(v);
  EmbedResult out;
  const Mat& top = run.top();
  out.z.assign(top.row(0), top.row(0) + top.cols);
  out.queries = run.log;
  return out;
}

Embeddings exact_embed_all(const GraphView& g, const ModelSpec& spec, const Params& p) {
  ExactRun run(g, spec, p, /*keep_tape=*/false);
  run.run_all();
  Embeddings out;
  out.n = g.n();
  out.dim = spec.dims[spec.layers];
  out.values = run.top().a;
  out.queries = run.log;
  return out;
}

GradTensor exact_gradient(const GraphView& g, const ModelSpec& spec, const Params& p, int v) {
  ExactRun run(g, spec, p, /*keep_tape=*/true);
  run.run_single(v);
  return run.backward(0);
}

}  // namespace ctgnn
