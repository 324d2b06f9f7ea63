#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bfnet {

/// Gauss-Legendre nodes/weights on [-1, 1], cached per order.
const std::vector<double>& gauss_legendre_nodes(std::size_t order);
const std::vector<double>& gauss_legendre_weights(std::size_t order);

/// Fixed, deterministic composite Gauss-Legendre rule. Panel boundaries are
/// snapped to declared feature points and panel widths grow with the distance
/// to the nearest feature (floored at `floor_width`), which grades the mesh
/// geometrically both into and away from each feature.
class PanelMesh {
public:
    struct Options {
        double max_width;            // baseline panel width away from features
        double floor_width;          // smallest panel width next to a feature
        std::size_t points_per_panel = 10;
    };

    PanelMesh(double a, double b, std::span<const double> features, const Options& opt);

    std::span<const double> nodes() const { return nodes_; }
    std::span<const double> weights() const { return weights_; }

    template <typename F>
    double integrate(F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) acc += weights_[i] * f(nodes_[i]);
        return acc;
    }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// Integral of f against the N(mean, var) density over mean +- 10 sigma.
/// `features` mark where f has structure at scale `feature_scale`; with
/// `grade_into` the mesh additionally refines all the way into each feature
/// (for algebraic endpoint singularities). `refinement` halves all panel
/// widths, for error estimation by comparison. var == 0 collapses to f(mean).
double gaussian_weighted_integral(const std::function<double(double)>& f, double mean, double var,
                                  std::span<const double> features, double feature_scale,
                                  bool grade_into, int refinement = 1);

double normal_pdf(double x, double mean = 0.0, double var = 1.0);
double normal_cdf(double x);

} // namespace bfnet
