// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "fnx/grid.hpp"

namespace fnx {

/// One member of the standard test family: a closed-form compactly supported
/// function on the working box.
struct FamilyMember {
    std::string name;
    PointFn fn;
};

/// The fixed 20-function family used by every equivalence/extension study:
/// truncated Gaussians, modulated Gaussians, shifted bumps and smoothed ramps,
/// centers within +-0.08 and length scales in [0.12, 0.35] box units (kept
/// inside the band the 256-cell grid resolves), all windowed to vanish outside
/// |x| < 0.5. Deterministic in the seed.
std::vector<FamilyMember> standard_family(int dim, int count = 20, uint64_t seed = 20240601);

GridFunction sample_member(const FamilyMember& m, const GridGeometry& geom);

}  // namespace fnx
