#pragma once

#include <string>

#include "bfnet/bsde.hpp"
#include "bfnet/forward.hpp"

namespace bfnet {

/// Binary columnar ensemble file, little-endian:
///   magic "BFNET1" | u32 d | u64 n_paths | u64 knot_count | u64 seed | u32 flags
/// followed by f64 blocks: grid knots, states (knot-major), increments
/// (interval-major), and, when flags bit 0 is set, flow matrices (knot-major).
void save_ensemble(const PathEnsemble& ensemble, const std::string& path);
PathEnsemble load_ensemble(const std::string& path);

/// Solution persistence: `prefix.sol.bin` holds the solving grid plus Y and Z
/// in the same knot-major little-endian layout (magic "BFSOL1"), and
/// `prefix.diag.json` carries the per-step regression diagnostics.
void save_solution(const BsdeSolution& solution, const std::string& prefix);

struct LoadedSolution {
    TimeNet grid{{0.0, 1.0}, {}};
    std::size_t n_paths = 0;
    std::size_t z_dimension = 1;
    std::vector<double> y; // (knots, paths)
    std::vector<double> z; // (intervals, paths, d)
};
LoadedSolution load_solution(const std::string& prefix);

} // namespace bfnet
