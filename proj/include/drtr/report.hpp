#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "drtr/distance.hpp"
#include "drtr/topology.hpp"

namespace drtr {

// Per-epoch audit of the refinement phase: what was pruned (with the
// distances and thresholds that decided it), what was added (with scores),
// and the effective degree before/after.
struct RefinementReport {
    int epoch = 0;
    std::vector<PruneDecision> pruned;
    std::vector<AddDecision> added;
    double d_eff_pre = 0.0;   // mean active shell entries per node, pre-prune
    double d_eff_post = 0.0;  // same, after the epoch's delta
    std::size_t visits_recorded = 0;

    // One JSON object per line:
    //   {"epoch":..,"v":..,"k":..,"u":..,"d":..,"alpha":..,"action":"prune"}
    //   {"epoch":..,"v":..,"u":..,"sim":..,"prob":..,"action":"add"}
    void append_jsonl(std::ostream& out) const;
};

} // namespace drtr
