#include "bfnet/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include "bfnet/errors.hpp"

namespace bfnet {

namespace {

struct GLRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Newton iteration on the Legendre recurrence; standard construction.
GLRule make_gauss_legendre(std::size_t n) {
    GLRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * static_cast<double>(j) + 1.0) * z * p1 -
                      static_cast<double>(j) * p2) /
                     (static_cast<double>(j) + 1.0);
            }
            pp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

const GLRule& cached_rule(std::size_t order) {
    static std::mutex mutex;
    static std::map<std::size_t, GLRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, make_gauss_legendre(order)).first;
    return it->second;
}

} // namespace

const std::vector<double>& gauss_legendre_nodes(std::size_t order) {
    return cached_rule(order).nodes;
}
const std::vector<double>& gauss_legendre_weights(std::size_t order) {
    return cached_rule(order).weights;
}

PanelMesh::PanelMesh(double a, double b, std::span<const double> features, const Options& opt) {
    if (!(b > a)) throw argument_error("PanelMesh: empty interval");
    if (!(opt.max_width > 0.0) || !(opt.floor_width > 0.0))
        throw argument_error("PanelMesh: widths must be positive");

    // Segment cuts: interval ends plus every feature inside.
    std::vector<double> cuts{a, b};
    for (double f : features)
        if (f > a && f < b) cuts.push_back(f);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    auto nearest_feature_distance = [&](double x) {
        double dist = std::numeric_limits<double>::infinity();
        for (double f : features) dist = std::min(dist, std::abs(x - f));
        return dist;
    };

    std::vector<double> bounds;
    bounds.push_back(a);
    for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
        const double lo = cuts[seg];
        const double hi = cuts[seg + 1];
        double pos = lo;
        // March left to right; width grows with distance to the nearest
        // feature and shrinks again when approaching one, floored so the
        // march always terminates.
        for (;;) {
            const double remaining = hi - pos;
            double w = std::min(opt.max_width,
                                std::max(opt.floor_width, nearest_feature_distance(pos) / 3.0));
            w = std::min(w, std::max(opt.floor_width, remaining / 3.0));
            if (remaining <= std::max(opt.floor_width, w) * 1.5) {
                bounds.push_back(hi);
                break;
            }
            pos += w;
            bounds.push_back(pos);
        }
    }

    const auto& gl_nodes = gauss_legendre_nodes(opt.points_per_panel);
    const auto& gl_weights = gauss_legendre_weights(opt.points_per_panel);
    nodes_.reserve((bounds.size() - 1) * opt.points_per_panel);
    weights_.reserve((bounds.size() - 1) * opt.points_per_panel);
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        const double lo = bounds[i];
        const double hi = bounds[i + 1];
        if (!(hi > lo)) continue;
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        for (std::size_t j = 0; j < gl_nodes.size(); ++j) {
            nodes_.push_back(mid + half * gl_nodes[j]);
            weights_.push_back(half * gl_weights[j]);
        }
    }
}

double normal_pdf(double x, double mean, double var) {
    const double z = x - mean;
    return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double gaussian_weighted_integral(const std::function<double(double)>& f, double mean, double var,
                                  std::span<const double> features, double feature_scale,
                                  bool grade_into, int refinement) {
    if (var < 0.0) throw argument_error("gaussian_weighted_integral: negative variance");
    if (var == 0.0) return f(mean);
    const double sigma = std::sqrt(var);
    const double lo = mean - 10.0 * sigma;
    const double hi = mean + 10.0 * sigma;

    PanelMesh::Options opt;
    opt.max_width = sigma / (2.0 * refinement);
    const double resolved = feature_scale > 0.0 ? feature_scale : sigma;
    opt.floor_width = grade_into ? std::max(1e-12 * sigma, 1e-10 * resolved)
                                 : resolved / (2.0 * refinement);
    opt.floor_width = std::min(opt.floor_width, opt.max_width);
    PanelMesh mesh(lo, hi, features, opt);

    double acc = 0.0;
    auto nodes = mesh.nodes();
    auto weights = mesh.weights();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double fx = f(nodes[i]);
        acc += weights[i] * fx * normal_pdf(nodes[i], mean, var);
    }
    if (!std::isfinite(acc))
        throw numeric_error("gaussian_weighted_integral: integrand overflowed");
    return acc;
}

} // namespace bfnet
