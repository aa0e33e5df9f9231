#pragma once

#include <cstdint>
#include <string>

#include "drtr/graph_store.hpp"

namespace drtr {

// Planted-partition generator: `blocks` communities of equal size, edge
// probability p_in within and p_out across blocks, plus an extra
// noise_fraction * |clean| inter-block "noisy" edges drawn uniformly from
// the remaining inter-block non-edges. Features are the node's block mean
// plus isotropic Gaussian noise; labels are block ids.
struct SbmSpec {
    int blocks = 2;
    int nodes_per_block = 100;
    double p_in = 0.1;
    double p_out = 0.01;
    double noise_fraction = 0.0;
    int feature_dim = 8;
    double feature_noise_sigma = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

SbmSpec sbm_spec_from_json_text(const std::string& text);
std::string sbm_spec_to_json_text(const SbmSpec& spec);
SbmSpec load_sbm_spec_file(const std::string& path);

struct SbmGraph {
    GraphStore graph;       // labeled_set initially = every node
    EdgeList noisy_edges;   // canonical v < u; evaluation-only ground truth
};

SbmGraph gen_sbm(const SbmSpec& spec);

// Picks round(fraction * nodes_per_block) labeled nodes per block, seeded.
std::vector<NodeId> stratified_labeled_set(const SbmSpec& spec, double fraction,
                                           std::uint64_t seed);

} // namespace drtr
