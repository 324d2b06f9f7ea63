#pragma once

#include <cstddef>
#include <vector>

#include "bfnet/errors.hpp"

namespace bfnet {

/// Fractional smoothness description of a path-dependent terminal condition:
/// breakpoints 0 = r_0 < r_1 < ... < r_L and one exponent theta_l in (0,1]
/// per interval (r_{l-1}, r_l]. theta_l close to 0 is legal but produces
/// extreme knot clustering near r_l.
struct SmoothnessSpec {
    std::vector<double> breakpoints; // r_0 .. r_L, r_0 == 0
    std::vector<double> theta;       // theta_1 .. theta_L, each in (0,1]

    SmoothnessSpec(std::vector<double> breakpoints_, std::vector<double> theta_);

    std::size_t num_intervals() const { return theta.size(); }
    double horizon() const { return breakpoints.back(); }

    /// Index l in [1, L] with t in [r_{l-1}, r_l); throws domain_error outside [0, r_L).
    std::size_t interval_of(double t) const;

    void validate() const;
};

/// Deterministic time-net 0 = t_0 < ... < t_N. Knot spacing feeds interval
/// integrals downstream, so near-duplicate knots are rejected at construction
/// (tolerance 1e-12 * t_N) instead of being merged.
struct TimeNet {
    std::vector<double> knots;
    std::vector<std::size_t> breakpoint_indices; // knots that realize r_1..r_L

    TimeNet(std::vector<double> knots_, std::vector<std::size_t> breakpoint_indices_);

    std::size_t num_knots() const { return knots.size(); }
    std::size_t num_intervals() const { return knots.size() - 1; }
    double horizon() const { return knots.back(); }
    double dt(std::size_t i) const { return knots[i + 1] - knots[i]; }

    /// Index of a knot equal to t within tolerance; throws argument_error if absent.
    std::size_t index_of(double t) const;
    bool contains(double t) const;

    /// True when every knot of `coarse` appears in this net.
    bool refines(const TimeNet& coarse) const;

    void validate() const;
};

/// Knots t_k = r_{l-1} + (r_l - r_{l-1}) * (1 - (1 - (k-(l-1)n)/n)^(1/theta_l))
/// for (l-1)n < k <= ln; Ln+1 knots total, r_l hit exactly at k = ln.
TimeNet build_theta_net(const SmoothnessSpec& spec, std::size_t n);

/// n equidistant subintervals inside each [r_{l-1}, r_l]; baseline comparator.
TimeNet build_uniform_net(const SmoothnessSpec& spec, std::size_t n);

/// Singularity weight phi(t) = (r_l - t)^((theta_l - 1)/2) on [r_{l-1}, r_l).
double phi(double t, const SmoothnessSpec& spec);

/// Split every interval into `factor` equal parts, keeping the original knots.
TimeNet refine_net(const TimeNet& net, std::size_t factor);

/// Sorted union of two nets over the same horizon (duplicates collapsed).
TimeNet merge_nets(const TimeNet& a, const TimeNet& b);

/// Net from explicit knots; breakpoint indices located against `spec` when given.
TimeNet net_from_knots(std::vector<double> knots, const SmoothnessSpec* spec = nullptr);

} // namespace bfnet
