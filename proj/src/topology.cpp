#include "drtr/topology.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "drtr/distance.hpp"
#include "drtr/errors.hpp"
#include "drtr/matrix.hpp"
#include "drtr/rng.hpp"

namespace drtr {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Keep the knn_k nearest of `dists` (index/dist pairs), ties broken by index.
void keep_k_nearest(std::vector<std::pair<double, NodeId>>& cand, std::size_t k) {
    if (cand.size() > k) {
        std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end());
        cand.resize(k);
    }
    std::sort(cand.begin(), cand.end());
}

std::vector<CandidatePair> dedup_pairs(std::vector<std::vector<NodeId>>& per_node) {
    std::set<std::pair<NodeId, NodeId>> seen;
    for (NodeId v = 0; v < static_cast<NodeId>(per_node.size()); ++v) {
        for (NodeId u : per_node[v]) {
            seen.insert({std::min(v, u), std::max(v, u)});
        }
    }
    std::vector<CandidatePair> out;
    out.reserve(seen.size());
    for (const auto& [v, u] : seen) {
        CandidatePair p;
        p.v = v;
        p.u = u;
        out.push_back(p);
    }
    return out;
}

} // namespace

void SimilarityWeights::project_nonnegative() {
    alignment_w = std::max(0.0, alignment_w);
    jaccard_w = std::max(0.0, jaccard_w);
    euclid_w = std::max(0.0, euclid_w);
}

double contextual_alignment(std::span<const double> x_v, std::span<const double> x_u) {
    if (x_v.size() != x_u.size()) {
        throw ShapeError("contextual_alignment: feature dimension mismatch");
    }
    return cosine_similarity(x_v, x_u);
}

std::vector<CandidatePair> knn_candidates(const GraphStore& g, int knn_k, int cap_R,
                                          KnnBackend backend, std::uint64_t seed) {
    if (knn_k < 1) throw InvalidArgumentError("knn_candidates: knn_k must be >= 1");
    const NodeId n = g.node_count();
    const std::size_t keep = static_cast<std::size_t>(std::min(knn_k, cap_R));
    std::vector<std::vector<NodeId>> per_node(n);

    if (backend == KnnBackend::exact) {
        std::vector<std::pair<double, NodeId>> cand;
        for (NodeId v = 0; v < n; ++v) {
            cand.clear();
            const auto xv = g.feature_row(v);
            for (NodeId u = 0; u < n; ++u) {
                if (u == v || g.has_edge(v, u)) continue;
                cand.emplace_back(squared_distance(xv, g.feature_row(u)), u);
            }
            keep_k_nearest(cand, keep);
            per_node[v].reserve(cand.size());
            for (const auto& [d, u] : cand) per_node[v].push_back(u);
        }
        return dedup_pairs(per_node);
    }

    // Projection backend: candidates are the union, over a few random
    // directions, of a sorted-order window around each node.
    const int projections = 8;
    const std::size_t window = static_cast<std::size_t>(2 * knn_k);
    const std::size_t d = g.feature_dim();
    std::vector<std::unordered_set<NodeId>> pool(n);
    std::vector<double> proj(n);
    std::vector<NodeId> order(n);
    for (int t = 0; t < projections; ++t) {
        Rng rng(mix_seed(seed, 7000 + t));
        std::vector<double> dir(d);
        double nrm = 0.0;
        for (double& x : dir) {
            x = rng.normal();
            nrm += x * x;
        }
        nrm = std::sqrt(std::max(nrm, 1e-300));
        for (double& x : dir) x /= nrm;

        for (NodeId v = 0; v < n; ++v) proj[v] = dot(g.feature_row(v), dir);
        for (NodeId v = 0; v < n; ++v) order[v] = v;
        std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
            return proj[a] < proj[b] || (proj[a] == proj[b] && a < b);
        });
        for (std::size_t i = 0; i < n; ++i) {
            const NodeId v = order[i];
            const std::size_t hi = std::min<std::size_t>(n, i + window + 1);
            for (std::size_t j = i + 1; j < hi; ++j) {
                pool[v].insert(order[j]);
                pool[order[j]].insert(v);
            }
        }
    }
    std::vector<std::pair<double, NodeId>> cand;
    for (NodeId v = 0; v < n; ++v) {
        cand.clear();
        const auto xv = g.feature_row(v);
        for (NodeId u : pool[v]) {
            if (u == v || g.has_edge(v, u)) continue;
            cand.emplace_back(squared_distance(xv, g.feature_row(u)), u);
        }
        keep_k_nearest(cand, keep);
        per_node[v].reserve(cand.size());
        for (const auto& [dist, u] : cand) per_node[v].push_back(u);
    }
    return dedup_pairs(per_node);
}

void score_candidates(const GraphStore& g, std::vector<CandidatePair>& candidates,
                      const SimilarityWeights& weights, const ScheduleConfig& cfg) {
    for (auto& c : candidates) {
        const auto xv = g.feature_row(c.v);
        const auto xu = g.feature_row(c.u);
        c.alignment = contextual_alignment(xv, xu);
        c.jaccard = structural_similarity(g, c.v, c.u);
        c.euclid_sq = squared_distance(xv, xu);
        c.sim = weights.alignment_w * c.alignment + weights.jaccard_w * c.jaccard -
                weights.euclid_w * c.euclid_sq;
        c.add_prob = sigmoid((c.sim - cfg.tr_beta) / cfg.tr_tau);
    }
}

std::vector<AddDecision> select_additions(std::span<const CandidatePair> scored,
                                          const ScheduleConfig& cfg, std::uint64_t rng_seed) {
    std::vector<std::size_t> idx(scored.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (scored[a].add_prob != scored[b].add_prob) {
            return scored[a].add_prob > scored[b].add_prob;
        }
        return std::make_pair(scored[a].v, scored[a].u) <
               std::make_pair(scored[b].v, scored[b].u);
    });

    Rng rng(rng_seed);
    std::vector<AddDecision> out;
    std::unordered_map<NodeId, int> added_per_node;
    for (std::size_t i : idx) {
        const auto& c = scored[i];
        const bool take = cfg.tr_stochastic ? (rng.uniform() < c.add_prob)
                                            : (c.add_prob > cfg.tr_theta);
        if (!take) continue;
        if (added_per_node[c.v] >= cfg.cap_R || added_per_node[c.u] >= cfg.cap_R) continue;
        ++added_per_node[c.v];
        ++added_per_node[c.u];
        out.push_back({c.v, c.u, c.sim, c.add_prob});
    }
    // Canonical order for the delta and the report.
    std::sort(out.begin(), out.end(), [](const AddDecision& a, const AddDecision& b) {
        return std::make_pair(a.v, a.u) < std::make_pair(b.v, b.u);
    });
    return out;
}

std::vector<AddDecision> score_and_add(const GraphStore& g,
                                       std::vector<CandidatePair>& candidates,
                                       const SimilarityWeights& weights,
                                       const ScheduleConfig& cfg, std::uint64_t rng_seed) {
    score_candidates(g, candidates, weights, cfg);
    return select_additions(candidates, cfg, rng_seed);
}

double tr_loss(std::span<const CandidatePair> scored, const ScheduleConfig& cfg) {
    double loss = 0.0;
    for (const auto& c : scored) {
        const double hinge = cfg.tr_beta - c.sim;
        if (hinge > 0.0) loss += hinge * c.add_prob;
    }
    return loss;
}

std::array<double, 3> tr_loss_gradient(std::span<const CandidatePair> scored,
                                       const ScheduleConfig& cfg) {
    // d/domega of max(0, beta - sim) * P with P detached:
    // -1[beta - sim > 0] * P * dsim/domega, dsim/domega = (align, jacc, -euclid).
    std::array<double, 3> grad{0.0, 0.0, 0.0};
    for (const auto& c : scored) {
        if (cfg.tr_beta - c.sim <= 0.0) continue;
        grad[0] += -c.add_prob * c.alignment;
        grad[1] += -c.add_prob * c.jaccard;
        grad[2] += -c.add_prob * (-c.euclid_sq);
    }
    return grad;
}

} // namespace drtr
