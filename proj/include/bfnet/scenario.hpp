#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bfnet/bsde.hpp"
#include "bfnet/config.hpp"
#include "bfnet/forward.hpp"
#include "bfnet/timenet.hpp"

namespace bfnet {

enum class NetKind { Theta, Uniform };

/// One experiment description: the simulate -> solve -> analyze pipeline runs
/// over its (net kind, n, seed) grid.
struct Scenario {
    std::string name = "scenario";
    double p = 2.0;
    std::size_t paths = 1u << 12;
    std::vector<std::uint64_t> seeds = {1};
    std::vector<std::size_t> n_grid = {4, 8};
    std::vector<NetKind> net_kinds = {NetKind::Theta};
    std::size_t refine_factor = 4;
    /// Net-construction override theta' < theta for rate-restoration runs.
    std::optional<std::vector<double>> theta_prime;
    /// "estimate" in the config asks the harness to fit theta before building nets.
    bool estimate_theta = false;

    SmoothnessSpec smoothness{{0.0, 1.0}, {1.0}};
    ForwardModel model = ForwardModel::brownian(1);
    Generator generator = Generator::zero();
    TerminalCondition terminal =
        TerminalCondition::terminal_1d(TerminalFunction1D::linear(), 1.0);
    /// 1D tags per breakpoint, kept for oracle cross-checks where available.
    std::vector<TerminalFunction1D> terminal_parts;
    RegressionConfig regression;

    std::string scenario_hash;

    static Scenario from_config(const Config& config);
    Config to_config() const;

    /// Net the smoothness spec (or its theta' override) induces for a given n.
    TimeNet coarse_net(NetKind kind, std::size_t n) const;

    void validate() const;
};

/// Parses tags like "indicator:0", "power:0.25", "hermite:2", "linear".
TerminalFunction1D parse_terminal_tag(const std::string& tag);

/// Embedded preset configs replicating the named standard experiments.
std::string preset_config(const std::string& name);
std::vector<std::string> preset_names();

} // namespace bfnet
