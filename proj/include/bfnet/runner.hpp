#pragma once

#include <string>
#include <vector>

#include "bfnet/analysis.hpp"
#include "bfnet/scenario.hpp"

namespace bfnet {

inline constexpr const char* kVersionString = "bfnet/0.1.0";
inline constexpr const char* kCsvSchemaVersion = "1";

struct CellKey {
    NetKind kind = NetKind::Theta;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::string id() const;
};

struct RunOutputs {
    std::string out_dir;
    std::string report_csv;
    std::string smoothness_csv;
    std::string slopes_csv;
    std::string manifest_json;
};

/// Executes the scenario's (net kind, n, seed) grid: simulate -> solve ->
/// variation + spline per cell, smoothness probes per seed, and rate slopes
/// per (net, seed). Outputs are bitwise reproducible for a fixed scenario and
/// seed list regardless of BFNET_THREADS. With `resume`, cells whose shard
/// files already exist are not recomputed.
RunOutputs run_scenario(const Scenario& scenario, const std::string& out_dir,
                        bool resume = false);

/// Re-executes the config embedded in a manifest file (same out_dir), for
/// bitwise reproduction of a previous run.
RunOutputs run_from_manifest(const std::string& manifest_path, bool resume = false);

} // namespace bfnet
