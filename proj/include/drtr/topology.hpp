#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "drtr/config.hpp"
#include "drtr/graph_store.hpp"

namespace drtr {

// Trainable similarity weights, projected back onto omega_i >= 0 after
// every update.
struct SimilarityWeights {
    double alignment_w = 1.0;  // omega_1
    double jaccard_w = 1.0;    // omega_2
    double euclid_w = 1.0;     // omega_3

    void project_nonnegative();
    std::array<double, 3> as_array() const { return {alignment_w, jaccard_w, euclid_w}; }
    static SimilarityWeights from_array(const std::array<double, 3>& a) {
        return {a[0], a[1], a[2]};
    }
};

// A non-adjacent pair under consideration:
//   sim      = w1 * alignment + w2 * jaccard - w3 * euclid_sq
//   add_prob = sigmoid((sim - beta) / tau_TR)
struct CandidatePair {
    NodeId v = 0;
    NodeId u = 0;
    double alignment = 0.0;
    double jaccard = 0.0;
    double euclid_sq = 0.0;
    double sim = 0.0;
    double add_prob = 0.0;
};

// Cosine similarity of raw features; zero vectors map to 0.
double contextual_alignment(std::span<const double> x_v, std::span<const double> x_u);

// Per node, up to knn_k nearest non-adjacent nodes by feature distance,
// capped at cap_R per node, deduplicated to canonical v < u pairs. The
// exact backend brute-forces all pairs (recall 1); the projection backend
// unions sorted-window candidates over random projections (recall >= 0.9
// on desk-scale data, near-linear time).
std::vector<CandidatePair> knn_candidates(const GraphStore& g, int knn_k, int cap_R,
                                          KnnBackend backend, std::uint64_t seed);

// Fills alignment/jaccard/euclid_sq/sim/add_prob for every pair in place.
void score_candidates(const GraphStore& g, std::vector<CandidatePair>& candidates,
                      const SimilarityWeights& weights, const ScheduleConfig& cfg);

struct AddDecision {
    NodeId v;
    NodeId u;
    double sim;
    double prob;
};

// Deterministic rule: add iff add_prob > theta (or a Bernoulli draw when
// cfg.tr_stochastic). Pairs are considered best-first by add_prob and each
// node receives at most cap_R new edges.
std::vector<AddDecision> select_additions(std::span<const CandidatePair> scored,
                                          const ScheduleConfig& cfg, std::uint64_t rng_seed);

// score_candidates + select_additions in one call.
std::vector<AddDecision> score_and_add(const GraphStore& g,
                                       std::vector<CandidatePair>& candidates,
                                       const SimilarityWeights& weights,
                                       const ScheduleConfig& cfg, std::uint64_t rng_seed);

// sum over candidates of max(0, beta - sim) * add_prob.
double tr_loss(std::span<const CandidatePair> scored, const ScheduleConfig& cfg);

// Subgradient of tr_loss w.r.t. (omega_1, omega_2, omega_3) with add_prob
// treated as a fixed weight: the gradient flows through the hinge only.
std::array<double, 3> tr_loss_gradient(std::span<const CandidatePair> scored,
                                       const ScheduleConfig& cfg);

} // namespace drtr
