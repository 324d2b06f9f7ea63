#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bfnet/bsde.hpp"
#include "bfnet/forward.hpp"
#include "bfnet/stats.hpp"
#include "bfnet/timenet.hpp"

namespace bfnet {

/// L_p-variation of a solution against a coarse net: the worst within-interval
/// Y increment norm plus the root-integrated deviation of Z from its
/// interval-averaged conditional projection.
struct VariationReport {
    double p = 2.0;
    double y_component = 0.0;
    double z_component = 0.0;
    double total = 0.0;
    std::vector<double> y_per_interval; // sup_s ||Y_s - Y_{t_{i-1}}||_p
    std::vector<double> z_per_interval; // integral contributions (squared)
    double y_std_error = 0.0;
    double z_std_error = 0.0;
};

/// Fine solution measured against `coarse`; the fine grid supplies both the
/// sup over s (fine knots only) and the left-endpoint rule for the Z integral.
VariationReport variation(const BsdeSolution& fine_solution, const TimeNet& coarse, double p);

struct ResidualSample {
    double s = 0.0;
    double value = 0.0;
    double std_error = 0.0;
};

enum class SmoothnessProbe { C2, C3, C4, Mixing };

struct SmoothnessEstimate {
    double theta_hat = 0.0;
    double theta_se = 0.0;
    SmoothnessProbe probe = SmoothnessProbe::C4;
    std::vector<double> window; // abscissae (s or t values) used in the fit
    bool reliable = true;       // false when any point's relative SE exceeds 20%
    /// Diagnostic only: max over the window of value / (r_l - s)^(theta_hat/2).
    double constant_estimate = 0.0;
};

/// theta_hat = 2 x slope of log value against log(r_l - s).
SmoothnessEstimate smoothness_from_residuals(std::span<const ResidualSample> samples,
                                             double r_l);

/// theta_hat = 1 + 2 x slope of log ||Z_t||_p against log(r_l - t), fitted on
/// solution knots with r_l - t inside [window_lo, window_hi].
SmoothnessEstimate z_blowup_exponent(const BsdeSolution& solution, double r_l,
                                     double window_lo, double window_hi, double p);

/// Same fit from precomputed (t, ||Z_t||) samples (oracle series route).
SmoothnessEstimate z_blowup_from_samples(std::span<const ResidualSample> samples, double r_l);

/// (C3) probe: theta_hat = 2 x slope of log ||Y_{r_l} - Y_s||_p vs log(r_l - s).
SmoothnessEstimate y_increment_exponent(const BsdeSolution& solution, double r_l,
                                        std::span<const double> s_values, double p);

/// (C4) residual samples || Y_{r_l} - E_hat(Y_{r_l}|F_s) ||_p: the conditional
/// expectation is a fresh regression of the solver's Y at r_l on the basis at
/// each s (same configuration and conditioning as the solver).
std::vector<ResidualSample> c4_residual_probe(const BsdeSolution& solution, double r_l,
                                              std::span<const double> s_values, double p);

struct SplineReport {
    double sup_error = 0.0;
    double sup_error_se = 0.0;
    std::vector<double> per_time; // ||Y_t - S_t||_p on each fine knot
};

/// Adapted spline with knot values equal to the solver's Y; linear
/// interpolation between knots, sup of ||Y_t - S_t||_p over the fine grid.
SplineReport spline_error(const BsdeSolution& solution, const TimeNet& knots, double p);

/// || xi - xi^{t,r_l} ||_p for the indicator schedules eta_{t, r_l}.
struct MixingDistance {
    double t = 0.0;
    double value = 0.0;
    double std_error = 0.0;
};
std::vector<MixingDistance> mixing_distance(const ForwardModel& model,
                                            const TerminalCondition& term, const TimeNet& grid,
                                            std::span<const double> t_values, double r_l,
                                            std::size_t n_paths, std::uint64_t seed, double p);

/// Theorem-style stability gaps between a coupled pair of solutions plus the
/// right-hand-side ingredients, so the harness can track the fitted constant.
struct StabilityGap {
    double x_sup_gap = 0.0;
    double y_sup_gap = 0.0;
    double z_integral_gap = 0.0;
    double x_terminal_gap = 0.0; // || X^eta_T - X_T ||_p
    double xi_gap = 0.0;         // || xi^eta - xi ||_p
    double xi_norm = 0.0;
    double eta_l2 = 0.0;         // sqrt(int eta^2 dt)
    double fitted_constant = 0.0;
};
StabilityGap stability_gap(const MixedPathPair& pair, const BsdeSolution& base_solution,
                           const BsdeSolution& mixed_solution, double p);

/// Least-squares slope of log value vs log n. Values must be positive.
SlopeFit rate_slope(std::span<const double> ns, std::span<const double> values);

} // namespace bfnet
