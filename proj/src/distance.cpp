#include "drtr/distance.hpp"

#include <algorithm>
#include <cmath>

#include "drtr/errors.hpp"
#include "drtr/matrix.hpp"

namespace drtr {

double lambda_schedule(int k, const ScheduleConfig& cfg) {
    return cfg.lambda0 * std::exp(-cfg.rho * static_cast<double>(k)) + cfg.lambda_min;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

DistanceRecord semantic_distance(std::span<const double> x_v, std::span<const double> x_u,
                                 int k, const ScheduleConfig& cfg, NodeId v, NodeId u) {
    if (x_v.size() != x_u.size()) {
        throw ShapeError("semantic_distance: feature dimension mismatch");
    }
    DistanceRecord rec;
    rec.v = v;
    rec.u = u;
    rec.k = k;
    rec.euclid_sq = squared_distance(x_v, x_u);
    const double divergence = 1.0 - cosine_similarity(x_v, x_u);
    rec.penalty = cfg.beta1 * static_cast<double>(k) * static_cast<double>(k) +
                  cfg.beta2 * divergence;
    rec.lambda_k = lambda_schedule(k, cfg);
    rec.total = rec.euclid_sq + rec.lambda_k * rec.penalty;
    return rec;
}

double percentile_threshold(std::vector<double> values, double p) {
    if (values.empty()) {
        throw InvalidArgumentError("percentile_threshold: empty sample");
    }
    const double n = static_cast<double>(values.size());
    // The epsilon counters FP noise in p*n for non-dyadic p (0.1 * 10 is
    // slightly above 1 in binary); exact products are unaffected.
    auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    std::nth_element(values.begin(), values.begin() + (rank - 1), values.end());
    return values[rank - 1];
}

PruneFragment prune_shells(const GraphStore& g, const HopShells& shells,
                           const ScheduleConfig& cfg) {
    PruneFragment frag;
    const NodeId n = g.node_count();
    std::vector<DistanceRecord> records;
    std::vector<double> totals;

    // batch_size chunks the distance loop; purely an iteration-shape knob.
    const NodeId chunk = static_cast<NodeId>(std::max(1, cfg.batch_size));
    for (NodeId lo = 0; lo < n; lo += chunk) {
        const NodeId hi = static_cast<NodeId>(std::min<std::uint64_t>(lo + chunk, n));
        for (NodeId v = lo; v < hi; ++v) {
            for (int k = 1; k <= shells.hops(); ++k) {
                records.clear();
                totals.clear();
                for (const auto& e : shells.shell(v, k)) {
                    if (!e.active) continue;
                    records.push_back(semantic_distance(g.feature_row(v), g.feature_row(e.node),
                                                        k, cfg, v, e.node));
                    totals.push_back(records.back().total);
                }
                if (totals.empty()) continue;
                const double alpha = percentile_threshold(totals, cfg.percentile_p);
                for (const auto& rec : records) {
                    if (rec.total > alpha) {
                        frag.pruned.push_back({v, k, rec.u, rec.total, alpha});
                        frag.hinge_sum += rec.total - alpha;
                    }
                }
            }
        }
    }
    return frag;
}

} // namespace drtr
