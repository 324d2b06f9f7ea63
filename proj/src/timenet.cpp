#include "bfnet/timenet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bfnet {

namespace {

double knot_tolerance(double horizon) { return 1e-12 * horizon; }

} // namespace

SmoothnessSpec::SmoothnessSpec(std::vector<double> breakpoints_, std::vector<double> theta_)
    : breakpoints(std::move(breakpoints_)), theta(std::move(theta_)) {
    validate();
}

void SmoothnessSpec::validate() const {
    if (breakpoints.size() < 2)
        throw validation_error("SmoothnessSpec: need at least r_0 and r_1");
    if (breakpoints.front() != 0.0)
        throw validation_error("SmoothnessSpec: r_0 must be 0");
    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
        if (!(breakpoints[i] > breakpoints[i - 1]))
            throw validation_error("SmoothnessSpec: breakpoints must be strictly increasing");
    }
    if (theta.size() != breakpoints.size() - 1) {
        std::ostringstream msg;
        msg << "SmoothnessSpec: got " << theta.size() << " thetas for "
            << breakpoints.size() - 1 << " breakpoint intervals";
        throw validation_error(msg.str());
    }
    for (double th : theta) {
        if (!(th > 0.0) || !(th <= 1.0) || !std::isfinite(th))
            throw validation_error("SmoothnessSpec: every theta_l must lie in (0, 1]");
    }
}

std::size_t SmoothnessSpec::interval_of(double t) const {
    if (!(t >= 0.0) || !(t < breakpoints.back()))
        throw domain_error("SmoothnessSpec: t outside [0, r_L)");
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    return static_cast<std::size_t>(it - breakpoints.begin());
}

TimeNet::TimeNet(std::vector<double> knots_, std::vector<std::size_t> breakpoint_indices_)
    : knots(std::move(knots_)), breakpoint_indices(std::move(breakpoint_indices_)) {
    validate();
}

void TimeNet::validate() const {
    if (knots.size() < 2)
        throw validation_error("TimeNet: need at least two knots");
    if (knots.front() != 0.0)
        throw validation_error("TimeNet: t_0 must be 0");
    const double tol = knot_tolerance(knots.back());
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (!(knots[i] > knots[i - 1]))
            throw validation_error("TimeNet: knots must be strictly increasing");
        if (knots[i] - knots[i - 1] <= tol) {
            std::ostringstream msg;
            msg << "TimeNet: knots " << i - 1 << " and " << i
                << " coincide within tolerance " << tol;
            throw validation_error(msg.str());
        }
    }
    for (std::size_t idx : breakpoint_indices) {
        if (idx >= knots.size())
            throw validation_error("TimeNet: breakpoint index out of range");
    }
}

std::size_t TimeNet::index_of(double t) const {
    const double tol = knot_tolerance(knots.back());
    auto it = std::lower_bound(knots.begin(), knots.end(), t - tol);
    if (it != knots.end() && std::abs(*it - t) <= tol)
        return static_cast<std::size_t>(it - knots.begin());
    std::ostringstream msg;
    msg << "TimeNet: no knot at t = " << t;
    throw argument_error(msg.str());
}

bool TimeNet::contains(double t) const {
    const double tol = knot_tolerance(knots.back());
    auto it = std::lower_bound(knots.begin(), knots.end(), t - tol);
    return it != knots.end() && std::abs(*it - t) <= tol;
}

bool TimeNet::refines(const TimeNet& coarse) const {
    for (double t : coarse.knots)
        if (!contains(t)) return false;
    return true;
}

TimeNet build_theta_net(const SmoothnessSpec& spec, std::size_t n) {
    spec.validate();
    if (n == 0) throw argument_error("build_theta_net: n must be >= 1");

    const std::size_t L = spec.num_intervals();
    std::vector<double> knots;
    std::vector<std::size_t> marks;
    knots.reserve(L * n + 1);
    knots.push_back(0.0);
    for (std::size_t l = 1; l <= L; ++l) {
        const double a = spec.breakpoints[l - 1];
        const double b = spec.breakpoints[l];
        const double th = spec.theta[l - 1];
        for (std::size_t k = 1; k <= n; ++k) {
            if (k == n) {
                knots.push_back(b); // exact breakpoint, no rounding through the formula
            } else if (th == 1.0) {
                knots.push_back(a + (b - a) * (static_cast<double>(k) / static_cast<double>(n)));
            } else {
                const double u = static_cast<double>(k) / static_cast<double>(n);
                knots.push_back(a + (b - a) * (1.0 - std::pow(1.0 - u, 1.0 / th)));
            }
        }
        marks.push_back(l * n);
    }
    return TimeNet(std::move(knots), std::move(marks));
}

TimeNet build_uniform_net(const SmoothnessSpec& spec, std::size_t n) {
    spec.validate();
    if (n == 0) throw argument_error("build_uniform_net: n must be >= 1");

    const std::size_t L = spec.num_intervals();
    std::vector<double> knots;
    std::vector<std::size_t> marks;
    knots.reserve(L * n + 1);
    knots.push_back(0.0);
    for (std::size_t l = 1; l <= L; ++l) {
        const double a = spec.breakpoints[l - 1];
        const double b = spec.breakpoints[l];
        for (std::size_t k = 1; k < n; ++k)
            knots.push_back(a + (b - a) * (static_cast<double>(k) / static_cast<double>(n)));
        knots.push_back(b);
        marks.push_back(l * n);
    }
    return TimeNet(std::move(knots), std::move(marks));
}

double phi(double t, const SmoothnessSpec& spec) {
    const std::size_t l = spec.interval_of(t); // throws outside [0, r_L)
    const double rl = spec.breakpoints[l];
    const double th = spec.theta[l - 1];
    return std::pow(rl - t, 0.5 * (th - 1.0));
}

TimeNet refine_net(const TimeNet& net, std::size_t factor) {
    if (factor == 0) throw argument_error("refine_net: factor must be >= 1");
    if (factor == 1) return net;

    std::vector<double> knots;
    knots.reserve(net.num_intervals() * factor + 1);
    std::vector<std::size_t> marks;
    for (std::size_t i = 0; i + 1 < net.knots.size(); ++i) {
        const double a = net.knots[i];
        const double b = net.knots[i + 1];
        knots.push_back(a);
        for (std::size_t j = 1; j < factor; ++j)
            knots.push_back(a + (b - a) * (static_cast<double>(j) / static_cast<double>(factor)));
    }
    knots.push_back(net.knots.back());
    for (std::size_t idx : net.breakpoint_indices)
        marks.push_back(idx * factor);
    return TimeNet(std::move(knots), std::move(marks));
}

TimeNet merge_nets(const TimeNet& a, const TimeNet& b) {
    const double tol = 1e-12 * std::max(a.horizon(), b.horizon());
    if (std::abs(a.horizon() - b.horizon()) > tol)
        throw argument_error("merge_nets: horizons differ");

    std::vector<double> merged;
    merged.reserve(a.knots.size() + b.knots.size());
    std::merge(a.knots.begin(), a.knots.end(), b.knots.begin(), b.knots.end(),
               std::back_inserter(merged));
    std::vector<double> knots;
    knots.reserve(merged.size());
    for (double t : merged) {
        if (knots.empty() || t - knots.back() > tol) knots.push_back(t);
    }
    // Re-locate the first net's breakpoint marks in the merged knot list.
    std::vector<std::size_t> marks;
    for (std::size_t idx : a.breakpoint_indices) {
        auto it = std::lower_bound(knots.begin(), knots.end(), a.knots[idx] - tol);
        marks.push_back(static_cast<std::size_t>(it - knots.begin()));
    }
    return TimeNet(std::move(knots), std::move(marks));
}

TimeNet net_from_knots(std::vector<double> knots, const SmoothnessSpec* spec) {
    std::vector<std::size_t> marks;
    if (spec != nullptr) {
        const double tol = 1e-12 * spec->horizon();
        for (std::size_t l = 1; l < spec->breakpoints.size(); ++l) {
            const double r = spec->breakpoints[l];
            auto it = std::lower_bound(knots.begin(), knots.end(), r - tol);
            if (it == knots.end() || std::abs(*it - r) > tol)
                throw validation_error("net_from_knots: breakpoint r_l missing from knots");
            marks.push_back(static_cast<std::size_t>(it - knots.begin()));
        }
    }
    return TimeNet(std::move(knots), std::move(marks));
}

} // namespace bfnet
