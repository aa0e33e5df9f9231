#pragma once

#include <array>
#include <string>

#include "drtr/diffusion.hpp"

namespace drtr {

// Parameter checkpoint: magic "DRTRPARM", version u32, K, feature/hidden/
// class dims, then each tensor as a name-length-prefixed label followed by
// little-endian f32 values. Files round-trip bit-exactly.
void save_checkpoint(const std::string& path, const DiffusionParams& params,
                     const std::array<double, 3>& omega);

struct Checkpoint {
    DiffusionParams params;
    std::array<double, 3> omega;
};

Checkpoint load_checkpoint(const std::string& path);

} // namespace drtr
