#pragma once

// Model definitions: the aggregate-and-update layer families, their
// activations, parameter containers, initialization and text serialization.
//
// Layer l (0-based here, 1-based in serialized headers) maps width dims[l]
// to dims[l+1]. Weight shapes:
//   sage_gcn / sage_pool / gcn / gat : W[l] is dims[l+1] x dims[l]
//   sage_mean                        : W[l] is dims[l+1] x 2*dims[l]
// gat additionally has an attention vector a[l] of length 2*dims[l+1];
// sage_pool has a single bias vector b shared by every layer, which pins all
// output widths dims[1..L] to a common value.

#include <span>
#include <string>
#include <vector>

#include "ctgnn/linalg.hpp"

namespace ctgnn {

enum class Variant { sage_gcn, sage_mean, sage_pool, gcn, gat };
enum class Activation { sigmoid, tanh, relu, relu_normalize, linear };

std::string to_string(Variant v);
std::string to_string(Activation a);
Variant variant_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

struct ModelSpec {
  Variant variant = Variant::sage_gcn;
  Activation activation = Activation::sigmoid;
  int layers = 1;
  std::vector<int> dims;  // size layers+1, dims[0] = input feature width

  void validate() const;
  // Width of the vector multiplied by W at layer l.
  int update_in_width(int layer) const {
    return variant == Variant::sage_mean ? 2 * dims[layer] : dims[layer];
  }
  bool needs_self_loops() const { return variant == Variant::sage_gcn; }
};

struct Params {
  std::vector<Mat> weights;          // one per layer
  std::vector<Vec> attention;        // gat only, one per layer
  Vec pool_bias;                     // sage_pool only, shared across layers
};

void validate_params(const ModelSpec& spec, const Params& p);

// Independent N(0, scale^2) entries in a fixed fill order (weights by layer,
// then attention vectors, then pool bias). scale <= 0 throws
// std::invalid_argument.
Params init_params(const ModelSpec& spec, std::uint64_t seed, double scale);

// Text round-trip. One header per block: "W <layer> <rows> <cols>",
// "a <layer> <len>", "b <len>", each followed by the entries row-major with
// enough digits to reproduce the exact doubles.
std::string save_params(const Params& p);
Params load_params(const std::string& text);

// ---- pointwise pieces ------------------------------------------------------

// Returns sigma(x); for relu_normalize the result is ReLU followed by
// projection to the unit sphere, with the all-nonpositive input mapped to the
// zero vector.
Vec activation_apply(Activation act, const Vec& x);

// In-place kernel shared by the engines. *norm_out (may be null) receives the
// L2 norm of the post-ReLU vector for relu_normalize (0 when the input was
// all nonpositive) and is untouched for other activations.
void activation_apply_inplace(Activation act, double* x, int d, double* norm_out);

// xbar = (d sigma / d x)^T zbar reconstructed from the *output* z (plus the
// stored norm for relu_normalize). ReLU uses derivative 0 at 0.
void activation_vjp(Activation act, const double* z, double norm, const double* zbar,
                    double* xbar, int d);

double leaky_relu(double x);        // slope 0.2 on the negative side
double leaky_relu_grad(double x);   // 0.2 at x < 0, 1 otherwise; slope at 0

// ---- layer ops -------------------------------------------------------------

// Scale applied to a neighbor state z_u when aggregating into v:
//   sage_* : 1/deg_v          gcn : 1/sqrt(deg_v * deg_u)
// Throws std::domain_error on a zero degree. Not used by gat/sage_pool.
double message_scale(Variant variant, int deg_v, int deg_u);

// Single message term M_l(z_v, z_u, e_vu). Edge features are accepted for
// interface completeness; no implemented variant reads them.
Vec message(const ModelSpec& spec, const Params& p, int layer, const Vec& z_v, const Vec& z_u,
            int deg_v, int deg_u, std::span<const double> e_vu = {});

// U_l(z_v, h_v): sigma(W h) or, for sage_mean, sigma(W [z_v ; h_v]).
Vec update(const ModelSpec& spec, const Params& p, int layer, const Vec& z_v, const Vec& h_v);

// sage_pool layer output: elementwise max over sigma(W z_u + b). Empty input
// throws std::invalid_argument.
Vec pool_aggregate(const ModelSpec& spec, const Params& p, int layer,
                   const std::vector<Vec>& z_u_list);

// Attention weights of v over the given neighbor states; nonnegative, sums
// to 1. Scores are LeakyReLU(a . [W z_v ; W z_u]) put through a max-shifted
// softmax. Empty input throws std::invalid_argument.
std::vector<double> gat_attention(const ModelSpec& spec, const Params& p, int layer,
                                  const Vec& z_v, const std::vector<Vec>& z_u_list);

}  // namespace ctgnn
