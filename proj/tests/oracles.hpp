#pragma once

// Brute-force scalar-loop reference implementations, written independently
// of the library code paths they check. Everything here favors the most
// literal transcription of the formulas over speed; nothing calls into the
// engine's forward/backward internals.

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "drtr/config.hpp"
#include "drtr/graph_store.hpp"

namespace oracle {

using drtr::GraphStore;
using drtr::HopShells;
using drtr::NodeId;
using drtr::ScheduleConfig;

// ---- plain vector helpers -------------------------------------------------

inline std::vector<double> matvec_rowmajor(const std::vector<std::vector<double>>& w,
                                           const std::vector<double>& x) {
    // w is feature x hidden; returns x^T w.
    std::vector<double> y(w.empty() ? 0 : w[0].size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t j = 0; j < y.size(); ++j) y[j] += x[i] * w[i][j];
    }
    return y;
}

inline std::vector<std::vector<double>> to_rows(const drtr::Matrix& m) {
    std::vector<std::vector<double>> rows(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) rows[r][c] = m.at(r, c);
    }
    return rows;
}

inline std::vector<double> row_of(const drtr::Matrix& m, std::size_t r) {
    std::vector<double> out(m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] = m.at(r, c);
    return out;
}

// ---- attention and forward -------------------------------------------------

// Attention row for (v, k): plain exp softmax, no max subtraction.
inline std::map<NodeId, double> attention_row(const GraphStore& g, const HopShells& shells,
                                              const std::vector<std::vector<double>>& w,
                                              const std::vector<double>& a, NodeId v, int k,
                                              const ScheduleConfig& cfg) {
    const double tau = cfg.tau0 * std::exp(-cfg.eta_decay * k);
    const auto pv = matvec_rowmajor(w, row_of(g.features(), v));
    std::map<NodeId, double> weights;
    double denom = 0.0;
    for (const auto& e : shells.shell(v, k)) {
        if (!e.active) continue;
        const auto pu = matvec_rowmajor(w, row_of(g.features(), e.node));
        double t = 0.0;
        for (std::size_t i = 0; i < pv.size(); ++i) t += a[i] * pv[i];
        for (std::size_t i = 0; i < pu.size(); ++i) t += a[pv.size() + i] * pu[i];
        if (t < 0.0) t *= cfg.leaky_slope;
        const double num = std::exp(t / tau);
        weights[e.node] = num;
        denom += num;
    }
    for (auto& [u, x] : weights) x /= denom;
    return weights;
}

// Full forward pass: aggregate -> layer norm -> softmax-combined hops ->
// affine head, node by node, hop by hop.
struct ForwardOut {
    std::vector<std::vector<double>> z;
    std::vector<std::vector<double>> logits;
};

inline ForwardOut forward(const GraphStore& g, const HopShells& shells,
                          const std::vector<std::vector<std::vector<double>>>& w_hops,
                          const std::vector<double>& a, const std::vector<double>& phi,
                          const std::vector<std::vector<double>>& cls,
                          const std::vector<double>& bias, const ScheduleConfig& cfg,
                          bool heat) {
    const NodeId n = g.node_count();
    const int hops = static_cast<int>(w_hops.size());
    const std::size_t hid = w_hops[0][0].size();

    std::vector<double> gamma(hops);
    {
        double denom = 0.0;
        for (int k = 0; k < hops; ++k) denom += std::exp(phi[k]);
        for (int k = 0; k < hops; ++k) gamma[k] = std::exp(phi[k]) / denom;
    }

    ForwardOut out;
    out.z.assign(n, std::vector<double>(hid, 0.0));
    out.logits.assign(n, std::vector<double>(bias.size(), 0.0));
    for (NodeId v = 0; v < n; ++v) {
        for (int k = 1; k <= hops; ++k) {
            std::vector<double> h(hid, 0.0);
            std::map<NodeId, double> alphas;
            if (heat) {
                alphas = attention_row(g, shells, w_hops[k - 1], a, v, k, cfg);
            } else {
                std::size_t m = 0;
                for (const auto& e : shells.shell(v, k)) m += e.active ? 1 : 0;
                for (const auto& e : shells.shell(v, k)) {
                    if (e.active) alphas[e.node] = 1.0 / static_cast<double>(m);
                }
            }
            for (const auto& [u, alpha] : alphas) {
                const auto pu = matvec_rowmajor(w_hops[k - 1], row_of(g.features(), u));
                for (std::size_t i = 0; i < hid; ++i) h[i] += alpha * pu[i];
            }
            double mean = 0.0;
            for (double x : h) mean += x;
            mean /= static_cast<double>(hid);
            double var = 0.0;
            for (double x : h) var += (x - mean) * (x - mean);
            var /= static_cast<double>(hid);
            const double sd = std::sqrt(var);
            for (std::size_t i = 0; i < hid; ++i) {
                out.z[v][i] += gamma[k - 1] * (h[i] - mean) / (sd + cfg.layer_norm_eps);
            }
        }
        for (std::size_t c = 0; c < bias.size(); ++c) {
            double s = bias[c];
            for (std::size_t i = 0; i < hid; ++i) s += out.z[v][i] * cls[i][c];
            out.logits[v][c] = s;
        }
    }
    return out;
}

// ---- distances, similarities, losses ----------------------------------------

inline double euclid_sq(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) return 0.0;
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

inline double distance_total(const std::vector<double>& xv, const std::vector<double>& xu,
                             int k, const ScheduleConfig& cfg) {
    const double lambda = cfg.lambda0 * std::exp(-cfg.rho * k) + cfg.lambda_min;
    const double penalty =
        cfg.beta1 * static_cast<double>(k) * static_cast<double>(k) +
        cfg.beta2 * (1.0 - cosine(xv, xu));
    return euclid_sq(xv, xu) + lambda * penalty;
}

inline double jaccard(const GraphStore& g, NodeId v, NodeId u) {
    std::set<NodeId> nv(g.neighbors(v).begin(), g.neighbors(v).end());
    std::set<NodeId> nu(g.neighbors(u).begin(), g.neighbors(u).end());
    std::size_t inter = 0;
    for (NodeId x : nv) inter += nu.count(x);
    const std::size_t uni = nv.size() + nu.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Candidate pair scoring and the margin loss, from raw pieces.
struct ScoredPair {
    NodeId v, u;
    double sim, prob;
};

inline std::vector<ScoredPair> score_pairs(const GraphStore& g,
                                           const std::vector<std::pair<NodeId, NodeId>>& pairs,
                                           double w1, double w2, double w3,
                                           const ScheduleConfig& cfg) {
    std::vector<ScoredPair> out;
    for (const auto& [v, u] : pairs) {
        const auto xv = row_of(g.features(), v);
        const auto xu = row_of(g.features(), u);
        const double sim = w1 * cosine(xv, xu) + w2 * jaccard(g, v, u) - w3 * euclid_sq(xv, xu);
        const double prob = 1.0 / (1.0 + std::exp(-(sim - cfg.tr_beta) / cfg.tr_tau));
        out.push_back({v, u, sim, prob});
    }
    return out;
}

inline double tr_loss(const std::vector<ScoredPair>& scored, const ScheduleConfig& cfg) {
    double loss = 0.0;
    for (const auto& p : scored) {
        const double hinge = cfg.tr_beta - p.sim;
        if (hinge > 0.0) loss += hinge * p.prob;
    }
    return loss;
}

inline double cross_entropy(const std::vector<std::vector<double>>& logits,
                            const std::vector<int>& labels,
                            const std::vector<NodeId>& nodes) {
    double loss = 0.0;
    for (NodeId v : nodes) {
        double denom = 0.0;
        for (double x : logits[v]) denom += std::exp(x);
        const double p = std::exp(logits[v][labels[v]]) / denom;
        loss += -std::log(p);
    }
    return loss / static_cast<double>(nodes.size());
}

// ---- graph helpers -----------------------------------------------------------

// Queue BFS over an adjacency-set view; kept separate from the engine's
// stamped-frontier version.
inline std::vector<int> bfs_distances(const GraphStore& g, NodeId src) {
    std::vector<int> dist(g.node_count(), -1);
    std::queue<NodeId> q;
    dist[src] = 0;
    q.push(src);
    while (!q.empty()) {
        const NodeId x = q.front();
        q.pop();
        for (NodeId u : g.neighbors(x)) {
            if (dist[u] < 0) {
                dist[u] = dist[x] + 1;
                q.push(u);
            }
        }
    }
    return dist;
}

// Exact kNN by full sort, excluding self and existing neighbors.
inline std::vector<std::set<NodeId>> knn_exact(const GraphStore& g, int k) {
    const NodeId n = g.node_count();
    std::vector<std::set<NodeId>> out(n);
    for (NodeId v = 0; v < n; ++v) {
        std::vector<std::pair<double, NodeId>> cand;
        const auto xv = row_of(g.features(), v);
        for (NodeId u = 0; u < n; ++u) {
            if (u == v || g.has_edge(v, u)) continue;
            cand.emplace_back(euclid_sq(xv, row_of(g.features(), u)), u);
        }
        std::sort(cand.begin(), cand.end());
        for (int i = 0; i < k && i < static_cast<int>(cand.size()); ++i) {
            out[v].insert(cand[i].second);
        }
    }
    return out;
}

} // namespace oracle
