#pragma once

// Small deterministic instance builders shared across test files.

#include <cstdint>
#include <vector>

#include "drtr/graph_store.hpp"
#include "drtr/rng.hpp"

namespace testutil {

using drtr::EdgeList;
using drtr::GraphStore;
using drtr::Matrix;
using drtr::NodeId;
using drtr::Rng;

// Erdos-Renyi graph with random features and labels; labels cover
// `classes` values round-robin so every class appears.
inline GraphStore random_graph(NodeId n, double edge_prob, std::size_t feature_dim,
                               int classes, std::uint64_t seed) {
    Rng rng(seed);
    EdgeList edges;
    for (NodeId v = 0; v < n; ++v) {
        for (NodeId u = v + 1; u < n; ++u) {
            if (rng.uniform() < edge_prob) edges.emplace_back(v, u);
        }
    }
    Matrix features(n, feature_dim);
    for (double& x : features.data()) x = rng.uniform(-1.0, 1.0);
    std::vector<std::pair<NodeId, int>> labels;
    for (NodeId v = 0; v < n; ++v) labels.emplace_back(v, static_cast<int>(v) % classes);
    return drtr::build_graph(edges, std::move(features), labels);
}

inline GraphStore path_graph(NodeId n, std::size_t feature_dim = 2) {
    EdgeList edges;
    for (NodeId v = 0; v + 1 < n; ++v) edges.emplace_back(v, v + 1);
    Matrix features(n, feature_dim);
    for (std::size_t i = 0; i < features.data().size(); ++i) {
        features.data()[i] = static_cast<double>(i % 7) - 3.0;
    }
    return drtr::build_graph(edges, std::move(features), {});
}

} // namespace testutil
