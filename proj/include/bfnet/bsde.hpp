#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "bfnet/forward.hpp"
#include "bfnet/gaussian_oracle.hpp"
#include "bfnet/regression.hpp"
#include "bfnet/timenet.hpp"

namespace bfnet {

/// BSDE driver f(t, x, y, z) with declared Lipschitz metadata.
struct Generator {
    enum class Tag { Zero, Linear, Custom };
    using Fn = std::function<double(double t, std::span<const double> x, double y,
                                    std::span<const double> z)>;
    Tag tag = Tag::Zero;
    double K_f = 0.0;
    double L_f = 0.0;
    Fn f;

    static Generator zero();
    /// f(y) = c * y.
    static Generator linear(double c);
    static Generator custom(Fn f, double K_f, double L_f);

    bool is_zero() const { return tag == Tag::Zero; }
};

/// Path-dependent terminal condition xi = g(X_{r_1}, ..., X_{r_L}).
/// States arrive concatenated ((r_1 block first), d components each).
struct TerminalCondition {
    std::vector<double> observation_times; // r_1 < ... < r_L
    std::function<double(std::span<const double>)> g;
    double growth_degree = 1.0;

    /// L = 1 wrapper around a scalar terminal function of X_T (d = 1).
    static TerminalCondition terminal_1d(const TerminalFunction1D& g, double horizon);
    /// Theorem-style composite Phi(g_1(x_1), ..., g_L(x_L)) with Phi = mean.
    static TerminalCondition mean_composite(std::vector<TerminalFunction1D> parts,
                                            std::vector<double> times);

    std::size_t num_observations() const { return observation_times.size(); }
    void validate(const TimeNet& grid) const;
};

enum class SchemeTag { Explicit, Implicit };

struct SolveDiagnostics {
    std::vector<double> z_residual_norm;  // per backward step
    std::vector<double> y_residual_norm;
    std::vector<double> condition_number;
    std::size_t max_implicit_iterations = 0;
};

/// Regression Monte Carlo solution on a solving grid: per-path Y at every
/// knot, per-interval Z estimates (identified with the left knot as the
/// pointwise value). Holds the ensemble it was built from so projections can
/// be reproduced on coarser nets.
class BsdeSolution {
public:
    BsdeSolution(TimeNet grid, std::shared_ptr<const PathEnsemble> ensemble,
                 RegressionConfig config, SchemeTag scheme);

    const TimeNet& grid() const { return grid_; }
    std::size_t n_paths() const { return ensemble_->n_paths(); }
    const PathEnsemble& ensemble() const { return *ensemble_; }
    std::shared_ptr<const PathEnsemble> ensemble_ptr() const { return ensemble_; }
    const RegressionConfig& regression_config() const { return config_; }
    SchemeTag scheme() const { return scheme_; }
    const SolveDiagnostics& diagnostics() const { return diagnostics_; }

    double y(std::size_t path, std::size_t knot) const {
        return y_[knot * n_paths() + path];
    }
    /// Z estimate over interval [t_i, t_{i+1}) (component c), also the
    /// pointwise Z at knot i.
    double z(std::size_t path, std::size_t interval, std::size_t c = 0) const {
        return z_[(interval * n_paths() + path) * dim_ + c];
    }
    std::size_t z_dimension() const { return dim_; }

    std::span<const double> y_at_knot(std::size_t knot) const {
        return {&y_[knot * n_paths()], n_paths()};
    }

    /// Index of the ensemble-grid knot matching solution-grid knot i.
    std::size_t ensemble_knot(std::size_t i) const { return knot_map_[i]; }

    /// Observation times of the terminal condition the solution was built
    /// for; coarse projections condition on the same information.
    const std::vector<double>& observation_times() const { return observation_times_; }

    std::vector<double>& mutable_y() { return y_; }
    std::vector<double>& mutable_z() { return z_; }
    SolveDiagnostics& mutable_diagnostics() { return diagnostics_; }
    void set_knot_map(std::vector<std::size_t> map) { knot_map_ = std::move(map); }
    void set_observation_times(std::vector<double> times) {
        observation_times_ = std::move(times);
    }

private:
    TimeNet grid_;
    std::shared_ptr<const PathEnsemble> ensemble_;
    RegressionConfig config_;
    SchemeTag scheme_;
    std::size_t dim_;
    std::vector<double> y_; // (knots, paths)
    std::vector<double> z_; // (intervals, paths, d)
    std::vector<std::size_t> knot_map_;
    std::vector<double> observation_times_;
    SolveDiagnostics diagnostics_;
};

/// Backward regression recursion. The ensemble must be simulated on `grid`
/// or on a refinement of it. Explicit scheme: Y_{i-1} = Proj[Y_i + f(...) dt].
/// Implicit scheme: Y_{i-1} = Proj[Y_i] + f(t, X, Y_{i-1}, Z) dt, iterated to
/// 1e-12 (requires L_f * dt < 1, enforced up front).
BsdeSolution solve(const ForwardModel& model, const Generator& gen,
                   const TerminalCondition& term, const TimeNet& grid,
                   std::shared_ptr<const PathEnsemble> ensemble, const RegressionConfig& reg,
                   SchemeTag scheme);

/// Conditional time-average of Z over each coarse interval: the fine-grid Z
/// is time-averaged per path and projected on the basis conditioned at the
/// coarse left endpoint. Result layout: (coarse_intervals, paths).
std::vector<double> zbar(const BsdeSolution& solution, const TimeNet& coarse);

/// Per-path gradient estimates via first-order Malliavin weights:
/// regression of g(X_R) N^{r,1} on the basis at X_r.
std::vector<double> gradient_via_weights(const PathEnsemble& ensemble,
                                         const ForwardModel& model,
                                         const TerminalFunction1D& g, std::size_t r_index,
                                         std::size_t R_index, const RegressionConfig& reg);

} // namespace bfnet
