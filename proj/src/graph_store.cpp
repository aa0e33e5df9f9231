#include "drtr/graph_store.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <tuple>

#include "drtr/errors.hpp"
#include "drtr/rng.hpp"

namespace drtr {

bool GraphStore::has_edge(NodeId v, NodeId u) const {
    const auto row = neighbors(v);
    return std::binary_search(row.begin(), row.end(), u);
}

void GraphStore::set_labeled_set(std::vector<NodeId> nodes) {
    for (NodeId v : nodes) {
        if (v >= node_count()) {
            throw InvalidArgumentError("labeled set index " + std::to_string(v) +
                                       " out of range");
        }
        if (labels_[v] == kUnlabeled) {
            throw InvalidArgumentError("labeled set includes unlabeled node " +
                                       std::to_string(v));
        }
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    labeled_set_ = std::move(nodes);
}

EdgeList GraphStore::edge_list() const {
    EdgeList out;
    out.reserve(edge_count());
    for (NodeId v = 0; v < node_count(); ++v) {
        for (NodeId u : neighbors(v)) {
            if (v < u) out.emplace_back(v, u);
        }
    }
    return out;
}

void GraphStore::rebuild_csr(const EdgeList& canonical_edges) {
    const NodeId n = static_cast<NodeId>(features_.rows());
    std::vector<std::size_t> counts(n, 0);
    for (const auto& [v, u] : canonical_edges) {
        ++counts[v];
        ++counts[u];
    }
    offsets_.assign(n + 1, 0);
    for (NodeId v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + counts[v];
    adjacency_.assign(offsets_[n], 0);
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const auto& [v, u] : canonical_edges) {
        adjacency_[cursor[v]++] = u;
        adjacency_[cursor[u]++] = v;
    }
    for (NodeId v = 0; v < n; ++v) {
        std::sort(adjacency_.begin() + offsets_[v], adjacency_.begin() + offsets_[v + 1]);
    }
}

void GraphStore::check_invariants() const {
    const NodeId n = node_count();
    if (features_.rows() != n || labels_.size() != n) {
        throw MalformedInputError("graph store: feature/label row count mismatch");
    }
    for (NodeId v = 0; v < n; ++v) {
        if (offsets_[v + 1] < offsets_[v]) {
            throw MalformedInputError("graph store: decreasing CSR offsets");
        }
        const auto row = neighbors(v);
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (row[i] == v) throw MalformedInputError("graph store: self-loop");
            if (i > 0 && row[i] <= row[i - 1]) {
                throw MalformedInputError("graph store: unsorted or duplicate row");
            }
            if (!has_edge(row[i], v)) {
                throw MalformedInputError("graph store: asymmetric edge");
            }
        }
    }
}

GraphStore build_graph(const EdgeList& edges, Matrix features,
                       const std::vector<std::pair<NodeId, int>>& labels) {
    const NodeId n = static_cast<NodeId>(features.rows());
    if (features.rows() == 0 || features.cols() == 0) {
        throw MalformedInputError("build_graph: empty feature matrix");
    }

    EdgeList canonical;
    canonical.reserve(edges.size());
    for (const auto& [a, b] : edges) {
        if (a >= n || b >= n) {
            throw MalformedInputError("build_graph: edge index " +
                                      std::to_string(std::max(a, b)) +
                                      " out of range for " + std::to_string(n) + " nodes");
        }
        if (a == b) continue; // self-loops dropped
        canonical.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(canonical.begin(), canonical.end());
    canonical.erase(std::unique(canonical.begin(), canonical.end()), canonical.end());

    GraphStore g;
    g.features_ = std::move(features);
    g.labels_.assign(n, GraphStore::kUnlabeled);
    int max_class = -1;
    for (const auto& [v, c] : labels) {
        if (v >= n) {
            throw MalformedInputError("build_graph: label index " + std::to_string(v) +
                                      " out of range");
        }
        if (c < 0) throw MalformedInputError("build_graph: negative class index");
        g.labels_[v] = c;
        max_class = std::max(max_class, c);
    }
    g.class_count_ = max_class + 1;
    for (NodeId v = 0; v < n; ++v) {
        if (g.labels_[v] != GraphStore::kUnlabeled) g.labeled_set_.push_back(v);
    }
    g.rebuild_csr(canonical);
    return g;
}

std::size_t HopShells::active_count(NodeId v, int k) const {
    std::size_t c = 0;
    for (const auto& e : shell(v, k)) c += e.active ? 1 : 0;
    return c;
}

std::size_t HopShells::total_active() const {
    std::size_t c = 0;
    for (const auto& cell : cells_) {
        for (const auto& e : cell) c += e.active ? 1 : 0;
    }
    return c;
}

std::size_t HopShells::total_entries() const {
    std::size_t c = 0;
    for (const auto& cell : cells_) c += cell.size();
    return c;
}

bool HopShells::contains_active(NodeId v, int k, NodeId u) const {
    for (const auto& e : shell(v, k)) {
        if (e.node == u) return e.active;
    }
    return false;
}

void HopShells::deactivate(NodeId v, int k, NodeId u) {
    for (auto& e : cells_[cell_index(v, k)]) {
        if (e.node == u) {
            if (!e.active) {
                throw MissingEntryError("shell entry (" + std::to_string(v) + "," +
                                        std::to_string(k) + "," + std::to_string(u) +
                                        ") already inactive");
            }
            e.active = false;
            return;
        }
    }
    throw MissingEntryError("shell entry (" + std::to_string(v) + "," + std::to_string(k) +
                            "," + std::to_string(u) + ") not present");
}

HopShells build_hop_shells(const GraphStore& g, int hops, int cap, std::uint64_t seed) {
    if (hops < 1) throw InvalidArgumentError("build_hop_shells: hops must be >= 1");
    if (cap < 1) throw InvalidArgumentError("build_hop_shells: cap must be >= 1");

    const NodeId n = g.node_count();
    HopShells shells(n, hops);

    // Epoch-stamped visited marks avoid an O(n) reset per source node.
    std::vector<NodeId> visited_stamp(n, UINT32_MAX);
    std::vector<NodeId> frontier, next;

    for (NodeId v = 0; v < n; ++v) {
        visited_stamp[v] = v;
        frontier.assign(1, v);
        for (int k = 1; k <= hops && !frontier.empty(); ++k) {
            next.clear();
            for (NodeId x : frontier) {
                for (NodeId u : g.neighbors(x)) {
                    if (visited_stamp[u] != v) {
                        visited_stamp[u] = v;
                        next.push_back(u);
                    }
                }
            }
            auto& cell = shells.shell_mut(v, k);
            if (static_cast<int>(next.size()) > cap) {
                // Partial Fisher-Yates keyed on (seed, v, k): the sample is
                // independent of BFS traversal order once entries are sorted.
                std::vector<NodeId> pool(next);
                std::sort(pool.begin(), pool.end());
                Rng rng(mix_seed(seed, (static_cast<std::uint64_t>(v) << 8) | k));
                for (int i = 0; i < cap; ++i) {
                    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
                    std::swap(pool[i], pool[j]);
                }
                pool.resize(cap);
                std::sort(pool.begin(), pool.end());
                cell.reserve(cap);
                for (NodeId u : pool) cell.push_back({u, true});
            } else {
                std::vector<NodeId> sorted(next);
                std::sort(sorted.begin(), sorted.end());
                cell.reserve(sorted.size());
                for (NodeId u : sorted) cell.push_back({u, true});
            }
            frontier.swap(next);
        }
    }
    return shells;
}

double structural_similarity(const GraphStore& g, NodeId v, NodeId u) {
    if (v == u) throw InvalidArgumentError("structural_similarity: v == u");
    const auto nv = g.neighbors(v);
    const auto nu = g.neighbors(u);
    // Both rows are sorted; merge-count the intersection.
    std::size_t inter = 0, i = 0, j = 0;
    while (i < nv.size() && j < nu.size()) {
        if (nv[i] == nu[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (nv[i] < nu[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    const std::size_t uni = nv.size() + nu.size() - inter;
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

void apply_topology_delta(GraphStore& g, HopShells& shells, const TopologyDelta& delta) {
    // Validate everything up front so a failed delta leaves no trace.
    std::set<std::pair<NodeId, NodeId>> pending;
    for (const auto& [a, b] : delta.added_edges) {
        if (a >= g.node_count() || b >= g.node_count()) {
            throw InvalidArgumentError("topology delta: node index out of range");
        }
        if (a == b) throw InvalidArgumentError("topology delta: self-loop");
        const auto e = std::minmax(a, b);
        if (g.has_edge(e.first, e.second) || !pending.insert({e.first, e.second}).second) {
            throw DuplicateEdgeError("topology delta: edge (" + std::to_string(e.first) +
                                     "," + std::to_string(e.second) + ") already present");
        }
    }
    std::set<std::tuple<NodeId, int, NodeId>> pending_prunes;
    for (const auto& p : delta.pruned) {
        if (p.v >= shells.node_count() || p.k < 1 || p.k > shells.hops()) {
            throw InvalidArgumentError("topology delta: shell reference out of range");
        }
        if (!shells.contains_active(p.v, p.k, p.u) ||
            !pending_prunes.insert({p.v, p.k, p.u}).second) {
            throw MissingEntryError("topology delta: shell entry (" + std::to_string(p.v) +
                                    "," + std::to_string(p.k) + "," + std::to_string(p.u) +
                                    ") absent, inactive, or pruned twice");
        }
    }

    if (!delta.added_edges.empty()) {
        EdgeList merged = g.edge_list();
        merged.insert(merged.end(), pending.begin(), pending.end());
        std::sort(merged.begin(), merged.end());
        g.rebuild_csr(merged);
    }
    for (const auto& p : delta.pruned) shells.deactivate(p.v, p.k, p.u);
}

} // namespace drtr
