#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "drtr/config.hpp"
#include "drtr/graph_store.hpp"
#include "drtr/matrix.hpp"

namespace drtr {

// All learnable weights of the diffusion stack. Hop transforms are stored
// feature_dim x hidden_dim and applied as x * W for row-vector features.
struct DiffusionParams {
    std::vector<Matrix> hop_transforms;   // K matrices
    std::vector<double> attention_vector; // length 2 * hidden_dim, shared across hops
    std::vector<double> hop_logits;       // K logits, softmaxed into hop weights
    Matrix classifier;                    // hidden_dim x class_count
    std::vector<double> classifier_bias;  // class_count

    int hops() const { return static_cast<int>(hop_transforms.size()); }
    std::size_t feature_dim() const { return hop_transforms.empty() ? 0 : hop_transforms[0].rows(); }
    std::size_t hidden_dim() const { return hop_transforms.empty() ? 0 : hop_transforms[0].cols(); }
    std::size_t class_count() const { return classifier_bias.size(); }

    // softmax(hop_logits); always a strictly positive distribution.
    std::vector<double> hop_weights() const;

    void check_finite() const; // throws NumericError naming the tensor
};

// Xavier-uniform weights, zero logits and biases, seeded substreams per tensor.
DiffusionParams init_params(std::size_t feature_dim, std::size_t hidden_dim, int hops,
                            std::size_t class_count, std::uint64_t seed);

// tau_k = tau0 * exp(-eta * k).
double temperature(int k, const ScheduleConfig& cfg);

// Heat attention over the active entries of shell (v, k): softmax of
// LeakyReLU(a^T [W x_v || W x_u]) / tau_k. Returns (u, alpha) pairs in
// ascending u; empty shell yields an empty result.
std::vector<std::pair<NodeId, double>> attention_weights(const GraphStore& g,
                                                         const HopShells& shells,
                                                         const DiffusionParams& params,
                                                         NodeId v, int k,
                                                         const ScheduleConfig& cfg);

// sum_u alpha_vu * W x_u; the zero vector when the shell is empty.
std::vector<double> hop_aggregate(const GraphStore& g, const HopShells& shells,
                                  const DiffusionParams& params, NodeId v, int k,
                                  const ScheduleConfig& cfg);

// (h - mean) / (population std + eps).
std::vector<double> layer_norm(std::span<const double> h, double eps);

// sum_k softmax(hop_logits)_k * h_k. Throws ShapeError on a length mismatch.
std::vector<double> combine_hops(const std::vector<std::vector<double>>& normalized_hops,
                                 const DiffusionParams& params);

namespace detail {

// a^T [p_v || p_u] through the LeakyReLU, before temperature scaling. The
// forward pass, the per-node ops, and the reverse pass all share this one
// path so their numerics agree bitwise.
double attention_score(std::span<const double> a, std::span<const double> p_v,
                       std::span<const double> p_u, double slope);

// Max-subtracted softmax, in place. Input order is preserved.
void softmax_inplace(std::vector<double>& scores);

} // namespace detail

struct ForwardResult {
    Matrix embeddings; // node_count x hidden_dim
    Matrix logits;     // node_count x class_count
};

// Everything the reverse pass needs from the forward pass. alpha[k-1][v]
// lines up with the active entries of shell (v, k) in ascending order.
struct ForwardCache {
    std::vector<Matrix> transformed;                // K of (n x hidden): X * W^k
    std::vector<std::vector<std::vector<double>>> alpha;
    std::vector<Matrix> hop_raw;                    // K of (n x hidden), pre-norm
    std::vector<std::vector<double>> mean, stddev;  // [k-1][v]
};

// Full per-node pipeline: aggregate -> layer norm -> hop combine ->
// classifier. `heat_attention` false swaps the attention for a uniform
// mean (the baseline comparator). Deterministic given its inputs.
ForwardResult forward(const GraphStore& g, const HopShells& shells,
                      const DiffusionParams& params, const ScheduleConfig& cfg,
                      bool heat_attention = true, ForwardCache* cache = nullptr);

} // namespace drtr
