#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bfnet/rng.hpp"
#include "bfnet/timenet.hpp"

namespace bfnet {

using DriftFn = std::function<void(double t, std::span<const double> x, std::span<double> out)>;
/// Writes the d x d diffusion matrix in row-major order.
using DiffusionFn =
    std::function<void(double t, std::span<const double> x, std::span<double> out)>;

enum class ModelKind { Brownian, Arithmetic, Geometric, OrnsteinUhlenbeck, Generic };

/// Forward diffusion dX = b dt + sigma dW. Built-in kinds carry the
/// parameters needed for exact transition sampling; Generic falls back to
/// Euler-Maruyama. The callables are always populated so downstream code
/// (weights, diagnostics) can evaluate b and sigma uniformly.
struct ForwardModel {
    std::size_t dimension = 1;
    ModelKind kind = ModelKind::Brownian;
    std::vector<double> x0;
    DriftFn drift;
    DiffusionFn diffusion;

    // Exact-kind parameters (componentwise for Geometric / OrnsteinUhlenbeck).
    std::vector<double> arithmetic_drift;
    std::vector<double> arithmetic_sigma; // row-major d x d
    std::vector<double> gbm_mu, gbm_vol;
    std::vector<double> ou_kappa, ou_mean, ou_vol;

    static ForwardModel brownian(std::size_t d = 1, std::vector<double> x0 = {});
    static ForwardModel arithmetic(std::vector<double> b, std::vector<double> sigma_rowmajor,
                                   std::vector<double> x0);
    static ForwardModel geometric(std::vector<double> mu, std::vector<double> vol,
                                  std::vector<double> x0);
    static ForwardModel ornstein_uhlenbeck(std::vector<double> kappa, std::vector<double> mean,
                                           std::vector<double> vol, std::vector<double> x0);
    static ForwardModel generic(std::size_t d, DriftFn b, DiffusionFn sigma,
                                std::vector<double> x0);

    void validate() const;
};

/// Mixing schedule eta: [0,T] -> [-1,1]. The indicator form chi_{(t,r]}
/// replaces the driving noise on (t, r] wholesale.
struct MixingSchedule {
    enum class Kind { Zero, Indicator, Custom };
    Kind kind = Kind::Zero;
    double from = 0.0; // indicator (from, to]
    double to = 0.0;
    std::function<double(double)> eta; // Custom only

    static MixingSchedule zero() { return {}; }
    static MixingSchedule indicator(double t, double r);
    static MixingSchedule custom(std::function<double(double)> eta);

    double value(double s) const;
};

/// Simulated paths on a time-net, knot-major storage. Immutable after
/// construction; shared freely across threads.
class PathEnsemble {
public:
    PathEnsemble(TimeNet grid, std::size_t n_paths, std::size_t dimension,
                 std::uint64_t master_seed, bool with_flow);

    const TimeNet& grid() const { return grid_; }
    std::size_t n_paths() const { return n_paths_; }
    std::size_t dimension() const { return dim_; }
    std::uint64_t master_seed() const { return seed_; }
    bool has_flow() const { return !flow_.empty(); }
    const std::vector<std::uint64_t>& path_stream_ids() const { return stream_ids_; }

    std::span<const double> state(std::size_t path, std::size_t knot) const {
        return {&states_[(knot * n_paths_ + path) * dim_], dim_};
    }
    std::span<const double> increment(std::size_t path, std::size_t interval) const {
        return {&dw_[(interval * n_paths_ + path) * dim_], dim_};
    }
    /// Flow matrix (row-major d x d) at a knot; precondition: has_flow().
    std::span<const double> flow(std::size_t path, std::size_t knot) const {
        return {&flow_[(knot * n_paths_ + path) * dim_ * dim_], dim_ * dim_};
    }

    /// First component of the state across all paths at one knot (the common
    /// d = 1 access pattern for regressions).
    std::vector<double> component_at_knot(std::size_t knot, std::size_t c = 0) const;

    std::span<double> mutable_state(std::size_t path, std::size_t knot) {
        return {&states_[(knot * n_paths_ + path) * dim_], dim_};
    }
    std::span<double> mutable_increment(std::size_t path, std::size_t interval) {
        return {&dw_[(interval * n_paths_ + path) * dim_], dim_};
    }
    std::span<double> mutable_flow(std::size_t path, std::size_t knot) {
        return {&flow_[(knot * n_paths_ + path) * dim_ * dim_], dim_ * dim_};
    }

private:
    TimeNet grid_;
    std::size_t n_paths_;
    std::size_t dim_;
    std::uint64_t seed_;
    std::vector<std::uint64_t> stream_ids_;
    std::vector<double> states_; // (knots, paths, d)
    std::vector<double> dw_;     // (intervals, paths, d)
    std::vector<double> flow_;   // (knots, paths, d, d), empty unless requested

    friend PathEnsemble simulate(const ForwardModel&, const TimeNet&, std::size_t, std::uint64_t,
                                 bool);
    friend struct EnsembleCodec;
};

struct MixedPathPair {
    PathEnsemble base;
    PathEnsemble mixed;
    MixingSchedule schedule;
};

/// Exact transition sampling for the built-in kinds, Euler-Maruyama for
/// Generic. Identical (model, grid, n_paths, seed) inputs give bitwise
/// identical ensembles regardless of thread count.
PathEnsemble simulate(const ForwardModel& model, const TimeNet& grid, std::size_t n_paths,
                      std::uint64_t seed, bool with_flow = false);

/// Couples X and X^eta on the same W stream plus an independent B stream.
/// Indicator jump points are inserted into the grid so the identity
/// dW^eta = dB on (t, r] holds exactly.
MixedPathPair simulate_mixed(const ForwardModel& model, const TimeNet& grid,
                             const MixingSchedule& schedule, std::size_t n_paths,
                             std::uint64_t seed, bool with_flow = false);

/// First-order Malliavin weight over [t_r, t_R], discretized left-endpoint:
/// N = (W_R - W_r) / (R - r) exactly for the Brownian kind. Returns one
/// d-vector per path, flattened. The model supplies sigma along the path.
std::vector<double> malliavin_weight_order1(const PathEnsemble& ensemble,
                                            const ForwardModel& model, std::size_t r_index,
                                            std::size_t R_index);

} // namespace bfnet
