#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "drtr/matrix.hpp"

namespace drtr {

using NodeId = std::uint32_t;
using EdgeList = std::vector<std::pair<NodeId, NodeId>>;

// Undirected simple graph in CSR form plus node features and (partial)
// labels. Edges are stored symmetrically; rows are sorted ascending with
// no self-loops and no duplicates. The labeled set (the nodes the trainer
// may read labels from) can be a strict subset of the nodes that carry a
// ground-truth label, so benchmarks can hold labels back for evaluation.
class GraphStore {
public:
    GraphStore() = default;

    NodeId node_count() const { return static_cast<NodeId>(offsets_.size() - 1); }
    std::size_t edge_count() const { return adjacency_.size() / 2; } // undirected

    std::span<const NodeId> neighbors(NodeId v) const {
        return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
    }
    std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
    bool has_edge(NodeId v, NodeId u) const;

    const Matrix& features() const { return features_; }
    std::span<const double> feature_row(NodeId v) const { return features_.row(v); }
    std::size_t feature_dim() const { return features_.cols(); }

    static constexpr int kUnlabeled = -1;
    int label(NodeId v) const { return labels_[v]; }
    const std::vector<int>& labels() const { return labels_; }
    int class_count() const { return class_count_; }

    const std::vector<NodeId>& labeled_set() const { return labeled_set_; }
    void set_labeled_set(std::vector<NodeId> nodes);

    // Canonical (v < u) undirected edge list, ascending. Also the
    // serialization order, so equal graphs serialize byte-identically.
    EdgeList edge_list() const;

    void check_invariants() const; // throws on a broken CSR; used by tests

private:
    friend GraphStore build_graph(const EdgeList&, Matrix, const std::vector<std::pair<NodeId, int>>&);
    friend void apply_topology_delta(GraphStore&, class HopShells&, const struct TopologyDelta&);

    void rebuild_csr(const EdgeList& canonical_edges);

    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> adjacency_;
    Matrix features_;
    std::vector<int> labels_;
    std::vector<NodeId> labeled_set_;
    int class_count_ = 0;
};

// Canonicalizes an edge list into a GraphStore. Node count is inferred from
// the feature row count; self-loops and duplicate edges are dropped,
// symmetry is enforced. Labels map node -> class index.
GraphStore build_graph(const EdgeList& edges, Matrix features,
                       const std::vector<std::pair<NodeId, int>>& labels);

struct ShellEntry {
    NodeId node;
    bool active;
};

// Reference to one shell entry: node u in shell k of node v. Hops are
// 1-based throughout.
struct ShellRef {
    NodeId v;
    int k;
    NodeId u;
};

// Exact-distance-k neighborhoods for every node and hop. Pruning flips the
// active flag rather than deleting, so refinement decisions stay auditable.
class HopShells {
public:
    HopShells() = default;
    HopShells(NodeId node_count, int hops)
        : hops_(hops), cells_(static_cast<std::size_t>(node_count) * hops) {}

    int hops() const { return hops_; }
    NodeId node_count() const {
        return hops_ == 0 ? 0 : static_cast<NodeId>(cells_.size() / hops_);
    }

    std::span<const ShellEntry> shell(NodeId v, int k) const {
        return cells_[cell_index(v, k)];
    }
    std::vector<ShellEntry>& shell_mut(NodeId v, int k) { return cells_[cell_index(v, k)]; }

    std::size_t active_count(NodeId v, int k) const;
    std::size_t total_active() const;
    std::size_t total_entries() const;

    bool contains_active(NodeId v, int k, NodeId u) const;
    // Throws MissingEntryError if the entry is absent or already inactive.
    void deactivate(NodeId v, int k, NodeId u);

private:
    std::size_t cell_index(NodeId v, int k) const {
        return static_cast<std::size_t>(v) * hops_ + (k - 1);
    }

    int hops_ = 0;
    std::vector<std::vector<ShellEntry>> cells_;
};

// BFS from every node to depth K; shell k holds the nodes at shortest-path
// distance exactly k. Shells larger than `cap` keep a uniform sample of
// size cap, drawn deterministically from (seed, v, k). Entries are sorted
// ascending so downstream summation order is fixed.
HopShells build_hop_shells(const GraphStore& g, int hops, int cap, std::uint64_t seed);

// Jaccard overlap of the 1-hop structural neighborhoods. 0 when the union
// is empty; v == u is an error.
double structural_similarity(const GraphStore& g, NodeId v, NodeId u);

struct TopologyDelta {
    EdgeList added_edges;          // must be absent from the graph
    std::vector<ShellRef> pruned;  // must be present and active
};

// Validates the whole delta first, then applies it: added edges go into the
// CSR symmetrically, pruned shell entries are flagged inactive. Either the
// whole delta lands or none of it does.
void apply_topology_delta(GraphStore& g, HopShells& shells, const TopologyDelta& delta);

} // namespace drtr
