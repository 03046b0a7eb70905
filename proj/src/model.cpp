#include "ctgnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ctgnn/rng.hpp"

namespace ctgnn {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::sage_gcn: return "sage_gcn";
    case Variant::sage_mean: return "sage_mean";
    case Variant::sage_pool: return "sage_pool";
    case Variant::gcn: return "gcn";
    case Variant::gat: return "gat";
  }
  return "?";
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::relu_normalize: return "relu_normalize";
    case Activation::linear: return "linear";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "sage_gcn") return Variant::sage_gcn;
  if (s == "sage_mean") return Variant::sage_mean;
  if (s == "sage_pool") return Variant::sage_pool;
  if (s == "gcn") return Variant::gcn;
  if (s == "gat") return Variant::gat;
  throw std::invalid_argument("unknown variant '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  if (s == "relu_normalize") return Activation::relu_normalize;
  if (s == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

void ModelSpec::validate() const {
  if (layers < 1) throw std::invalid_argument("model needs at least one layer");
  if (dims.size() != static_cast<std::size_t>(layers) + 1)
    throw std::invalid_argument("dims must list layers+1 widths");
  for (int d : dims)
    if (d < 1) throw std::invalid_argument("layer widths must be positive");
  if (variant == Variant::sage_pool) {
    for (int l = 2; l <= layers; ++l)
      if (dims[l] != dims[1])
        throw std::invalid_argument(
            "sage_pool shares one bias vector, so all output widths must match");
  }
}

void validate_params(const ModelSpec& spec, const Params& p) {
  spec.validate();
  if (p.weights.size() != static_cast<std::size_t>(spec.layers))
    throw std::invalid_argument("expected one weight matrix per layer");
  for (int l = 0; l < spec.layers; ++l) {
    const Mat& w = p.weights[l];
    if (w.rows != spec.dims[l + 1] || w.cols != spec.update_in_width(l))
      throw std::invalid_argument("weight matrix " + std::to_string(l + 1) +
                                  " has shape " + std::to_string(w.rows) + "x" +
                                  std::to_string(w.cols) + ", expected " +
                                  std::to_string(spec.dims[l + 1]) + "x" +
                                  std::to_string(spec.update_in_width(l)));
    if (w.a.size() != static_cast<std::size_t>(w.rows) * w.cols)
      throw std::invalid_argument("weight matrix storage size mismatch");
  }
  if (spec.variant == Variant::gat) {
    if (p.attention.size() != static_cast<std::size_t>(spec.layers))
      throw std::invalid_argument("gat expects one attention vector per layer");
    for (int l = 0; l < spec.layers; ++l)
      if (p.attention[l].size() != static_cast<std::size_t>(2 * spec.dims[l + 1]))
        throw std::invalid_argument("attention vector " + std::to_string(l + 1) +
                                    " must have length 2*" + std::to_string(spec.dims[l + 1]));
  } else if (!p.attention.empty()) {
    throw std::invalid_argument("attention vectors only belong to gat");
  }
  if (spec.variant == Variant::sage_pool) {
    if (p.pool_bias.size() != static_cast<std::size_t>(spec.dims[1]))
      throw std::invalid_argument("pool bias must have length " + std::to_string(spec.dims[1]));
  } else if (!p.pool_bias.empty()) {
    throw std::invalid_argument("pool bias only belongs to sage_pool");
  }
}

Params init_params(const ModelSpec& spec, std::uint64_t seed, double scale) {
  spec.validate();
  if (scale <= 0.0) throw std::invalid_argument("init_params: scale must be positive");
  Rng rng(mix64(seed));
  Params p;
  p.weights.reserve(spec.layers);
  for (int l = 0; l < spec.layers; ++l) {
    Mat w(spec.dims[l + 1], spec.update_in_width(l));
    for (double& x : w.a) x = rng.normal() * scale;
    p.weights.push_back(std::move(w));
  }
  if (spec.variant == Variant::gat) {
    for (int l = 0; l < spec.layers; ++l) {
      Vec a(2 * spec.dims[l + 1]);
      for (double& x : a) x = rng.normal() * scale;
      p.attention.push_back(std::move(a));
    }
  }
  if (spec.variant == Variant::sage_pool) {
    p.pool_bias.resize(spec.dims[1]);
    for (double& x : p.pool_bias) x = rng.normal() * scale;
  }
  return p;
}

std::string save_params(const Params& p) {
  std::string out;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const Mat& w = p.weights[l];
    out += "W " + std::to_string(l + 1) + " " + std::to_string(w.rows) + " " +
           std::to_string(w.cols) + "\n";
    for (int i = 0; i < w.rows; ++i) {
      for (int j = 0; j < w.cols; ++j) {
        if (j) out += ' ';
        out += fmt_double(w.at(i, j));
      }
      out += '\n';
    }
  }
  for (std::size_t l = 0; l < p.attention.size(); ++l) {
    const Vec& a = p.attention[l];
    out += "a " + std::to_string(l + 1) + " " + std::to_string(a.size()) + "\n";
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (j) out += ' ';
      out += fmt_double(a[j]);
    }
    out += '\n';
  }
  if (!p.pool_bias.empty()) {
    out += "b " + std::to_string(p.pool_bias.size()) + "\n";
    for (std::size_t j = 0; j < p.pool_bias.size(); ++j) {
      if (j) out += ' ';
      out += fmt_double(p.pool_bias[j]);
    }
    out += '\n';
  }
  return out;
}

Params load_params(const std::string& text) {
  std::istringstream in(text);
  Params p;
  std::string kind;
  while (in >> kind) {
    if (kind == "W") {
      int layer, rows, cols;
      if (!(in >> layer >> rows >> cols) || layer < 1 || rows < 1 || cols < 1)
        throw std::invalid_argument("params: bad W header");
      if (static_cast<int>(p.weights.size()) + 1 != layer)
        throw std::invalid_argument("params: W blocks must appear as layers 1..L in order");
      Mat w(rows, cols);
      for (double& x : w.a)
        if (!(in >> x)) throw std::invalid_argument("params: truncated W block");
      p.weights.push_back(std::move(w));
    } else if (kind == "a") {
      int layer, len;
      if (!(in >> layer >> len) || layer < 1 || len < 1)
        throw std::invalid_argument("params: bad a header");
      if (static_cast<int>(p.attention.size()) + 1 != layer)
        throw std::invalid_argument("params: a blocks must appear as layers 1..L in order");
      Vec a(len);
      for (double& x : a)
        if (!(in >> x)) throw std::invalid_argument("params: truncated a block");
      p.attention.push_back(std::move(a));
    } else if (kind == "b") {
      int len;
      if (!(in >> len) || len < 1) throw std::invalid_argument("params: bad b header");
      if (!p.pool_bias.empty()) throw std::invalid_argument("params: duplicate b block");
      p.pool_bias.resize(len);
      for (double& x : p.pool_bias)
        if (!(in >> x)) throw std::invalid_argument("params: truncated b block");
    } else {
      throw std::invalid_argument("params: unknown block kind '" + kind + "'");
    }
  }
  if (p.weights.empty()) throw std::invalid_argument("params: no weight blocks");
  return p;
}

// ---- activations ------------------------------------------------------------

void activation_apply_inplace(Activation act, double* x, int d, double* norm_out) {
  switch (act) {
    case Activation::sigmoid:
      for (int i = 0; i < d; ++i) x[i] = 1.0 / (1.0 + std::exp(-x[i]));
      break;
    case Activation::tanh:
      for (int i = 0; i < d; ++i) x[i] = std::tanh(x[i]);
      break;
    case Activation::relu:
      for (int i = 0; i < d; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
      break;
    case Activation::relu_normalize: {
      double s = 0.0;
      for (int i = 0; i < d; ++i) {
        x[i] = x[i] > 0.0 ? x[i] : 0.0;
        s += x[i] * x[i];
      }
      const double nrm = std::sqrt(s);
      if (nrm > 0.0)
        for (int i = 0; i < d; ++i) x[i] /= nrm;
      if (norm_out) *norm_out = nrm;
      break;
    }
    case Activation::linear:
      break;
  }
}

Vec activation_apply(Activation act, const Vec& x) {
  Vec out = x;
  activation_apply_inplace(act, out.data(), static_cast<int>(out.size()), nullptr);
  return out;
}

void activation_vjp(Activation act, const double* z, double norm, const double* zbar,
                    double* xbar, int d) {
  switch (act) {
    case Activation::sigmoid:
      for (int i = 0; i < d; ++i) xbar[i] = zbar[i] * z[i] * (1.0 - z[i]);
      break;
    case Activation::tanh:
      for (int i = 0; i < d; ++i) xbar[i] = zbar[i] * (1.0 - z[i] * z[i]);
      break;
    case Activation::relu:
      for (int i = 0; i < d; ++i) xbar[i] = z[i] > 0.0 ? zbar[i] : 0.0;
      break;
    case Activation::relu_normalize: {
      if (norm == 0.0) {
        for (int i = 0; i < d; ++i) xbar[i] = 0.0;
        break;
      }
      const double zdot = dot(z, zbar, d);
      for (int i = 0; i < d; ++i)
        xbar[i] = z[i] > 0.0 ? (zbar[i] - z[i] * zdot) / norm : 0.0;
      break;
    }
    case Activation::linear:
      for (int i = 0; i < d; ++i) xbar[i] = zbar[i];
      break;
  }
}

double leaky_relu(double x) { return x >= 0.0 ? x : 0.2 * x; }
double leaky_relu_grad(double x) { return x >= 0.0 ? 1.0 : 0.2; }

// ---- layer ops ---------------------------------------------------------------

double message_scale(Variant variant, int deg_v, int deg_u) {
  switch (variant) {
    case Variant::sage_gcn:
    case Variant::sage_mean:
      if (deg_v <= 0) throw std::domain_error("message: node has degree 0");
      return 1.0 / static_cast<double>(deg_v);
    case Variant::gcn:
      if (deg_v <= 0 || deg_u <= 0) throw std::domain_error("message: node has degree 0");
      return 1.0 / std::sqrt(static_cast<double>(deg_v) * static_cast<double>(deg_u));
    default:
      throw std::invalid_argument("message_scale: variant has no per-edge scale");
  }
}

Vec message(const ModelSpec& spec, const Params& p, int layer, const Vec& z_v, const Vec& z_u,
            int deg_v, int deg_u, std::span<const double> e_vu) {
  (void)p;
  (void)z_v;
  (void)e_vu;
  if (layer < 0 || layer >= spec.layers) throw std::invalid_argument("message: bad layer");
  if (spec.variant == Variant::gat)
    throw std::invalid_argument("message: gat messages need the full list; use gat_attention");
  if (spec.variant == Variant::sage_pool)
    throw std::invalid_argument("message: sage_pool does not factor into messages");
  if (z_u.size() != static_cast<std::size_t>(spec.dims[layer]))
    throw std::invalid_argument("message: z_u has wrong width");
  const double s = message_scale(spec.variant, deg_v, deg_u);
  Vec m(z_u.size());
  for (std::size_t i = 0; i < z_u.size(); ++i) m[i] = z_u[i] * s;
  return m;
}

Vec update(const ModelSpec& spec, const Params& p, int layer, const Vec& z_v, const Vec& h_v) {
  if (layer < 0 || layer >= spec.layers) throw std::invalid_argument("update: bad layer");
  if (spec.variant == Variant::sage_pool)
    throw std::invalid_argument("update: sage_pool layers are pool_aggregate only");
  const Mat& w = p.weights[layer];
  Vec out(w.rows);
  if (spec.variant == Variant::sage_mean) {
    if (z_v.size() + h_v.size() != static_cast<std::size_t>(w.cols))
      throw std::invalid_argument("update: [z_v; h_v] width does not match W");
    Vec in(w.cols);
    std::copy(z_v.begin(), z_v.end(), in.begin());
    std::copy(h_v.begin(), h_v.end(), in.begin() + z_v.size());
    gemv(w, in.data(), out.data());
  } else {
    if (h_v.size() != static_cast<std::size_t>(w.cols))
      throw std::invalid_argument("update: h_v width does not match W");
    gemv(w, h_v.data(), out.data());
  }
  activation_apply_inplace(spec.activation, out.data(), w.rows, nullptr);
  return out;
}

Vec pool_aggregate(const ModelSpec& spec, const Params& p, int layer,
                   const std::vector<Vec>& z_u_list) {
  if (layer < 0 || layer >= spec.layers) throw std::invalid_argument("pool_aggregate: bad layer");
  if (spec.variant != Variant::sage_pool)
    throw std::invalid_argument("pool_aggregate: only defined for sage_pool");
  if (z_u_list.empty()) throw std::invalid_argument("pool_aggregate: empty neighbor list");
  const Mat& w = p.weights[layer];
  Vec best;
  Vec y(w.rows);
  for (std::size_t k = 0; k < z_u_list.size(); ++k) {
    if (z_u_list[k].size() != static_cast<std::size_t>(w.cols))
      throw std::invalid_argument("pool_aggregate: neighbor state has wrong width");
    gemv(w, z_u_list[k].data(), y.data());
    for (int i = 0; i < w.rows; ++i) y[i] += p.pool_bias[i];
    activation_apply_inplace(spec.activation, y.data(), w.rows, nullptr);
    if (k == 0) {
      best = y;
    } else {
      for (int i = 0; i < w.rows; ++i)
        if (y[i] > best[i]) best[i] = y[i];  // ties keep the earlier candidate
    }
  }
  return best;
}

std::vector<double> gat_attention(const ModelSpec& spec, const Params& p, int layer,
                                  const Vec& z_v, const std::vector<Vec>& z_u_list) {
  if (layer < 0 || layer >= spec.layers) throw std::invalid_argument("gat_attention: bad layer");
  if (spec.variant != Variant::gat)
    throw std::invalid_argument("gat_attention: only defined for gat");
  if (z_u_list.empty()) throw std::invalid_argument("gat_attention: empty neighbor list");
  const Mat& w = p.weights[layer];
  const Vec& a = p.attention[layer];
  const double* a1 = a.data();
  const double* a2 = a.data() + w.rows;

  Vec pv(w.rows);
  gemv(w, z_v.data(), pv.data());
  const double c1 = dot(a1, pv.data(), w.rows);

  std::vector<double> score(z_u_list.size());
  Vec pu(w.rows);
  for (std::size_t k = 0; k < z_u_list.size(); ++k) {
    gemv(w, z_u_list[k].data(), pu.data());
    score[k] = leaky_relu(c1 + dot(a2, pu.data(), w.rows));
  }
  const double mx = *std::max_element(score.begin(), score.end());
  double denom = 0.0;
  for (double& s : score) {
    s = std::exp(s - mx);
    denom += s;
  }
  for (double& s : score) s /= denom;
  return score;
}

}  // namespace ctgnn
