#pragma once

#include <span>
#include <vector>

#include "drtr/config.hpp"
#include "drtr/graph_store.hpp"

namespace drtr {

// One semantic-distance evaluation: total = euclid_sq + lambda_k * penalty,
// penalty = beta1 * k^2 + beta2 * (1 - cosine(x_v, x_u)).
struct DistanceRecord {
    NodeId v = 0;
    NodeId u = 0;
    int k = 1;
    double euclid_sq = 0.0;
    double penalty = 0.0;
    double lambda_k = 0.0;
    double total = 0.0;
};

// lambda_k = lambda0 * exp(-rho * k) + lambda_min.
double lambda_schedule(int k, const ScheduleConfig& cfg);

// Cosine similarity with the shared zero-vector convention: either vector
// zero -> cosine 0 (divergence 1).
double cosine_similarity(std::span<const double> a, std::span<const double> b);

DistanceRecord semantic_distance(std::span<const double> x_v, std::span<const double> x_u,
                                 int k, const ScheduleConfig& cfg, NodeId v = 0, NodeId u = 0);

// Nearest-rank percentile: the ceil(p*n)-th smallest value. Guarantees at
// least one survivor under a "keep d <= threshold" rule.
double percentile_threshold(std::vector<double> values, double p);

// Everything one pruning pass decided: the entries whose distance exceeded
// their shell's threshold, with the distances and thresholds that decided it.
struct PruneDecision {
    NodeId v;
    int k;
    NodeId u;
    double distance;
    double alpha;
};

struct PruneFragment {
    std::vector<PruneDecision> pruned;
    // sum of (distance - alpha) over the pruned entries == the hinge loss
    // over all active entries, since survivors contribute zero.
    double hinge_sum = 0.0;
};

// Computes distances over every active shell entry, thresholds each (v, k)
// shell at its own percentile, and reports which entries to deactivate.
// Pure: the deactivation itself goes through apply_topology_delta.
PruneFragment prune_shells(const GraphStore& g, const HopShells& shells,
                           const ScheduleConfig& cfg);

} // namespace drtr
