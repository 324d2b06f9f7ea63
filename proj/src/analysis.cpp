#include "bfnet/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "bfnet/parallel.hpp"

namespace bfnet {

VariationReport variation(const BsdeSolution& fine, const TimeNet& coarse, double p) {
    if (p < 2.0) throw argument_error("variation: p must be >= 2");
    const TimeNet& grid = fine.grid();
    if (!grid.refines(coarse)) throw argument_error("variation: grids not nested");

    const std::size_t n_paths = fine.n_paths();
    const std::size_t n_coarse = coarse.num_intervals();
    const std::vector<double> zb = zbar(fine, coarse);

    VariationReport report;
    report.p = p;
    report.y_per_interval.assign(n_coarse, 0.0);
    report.z_per_interval.assign(n_coarse, 0.0);

    std::vector<double> diff(n_paths);
    double y_sup = 0.0, y_sup_se = 0.0;
    double z_sq = 0.0, z_var = 0.0;
    for (std::size_t ci = 0; ci < n_coarse; ++ci) {
        const std::size_t fa = grid.index_of(coarse.knots[ci]);
        const std::size_t fb = grid.index_of(coarse.knots[ci + 1]);
        const double* zbar_ci = &zb[ci * n_paths];

        // Y component: sup over fine knots strictly inside (t_{i-1}, t_i].
        double interval_sup = 0.0, interval_sup_se = 0.0;
        for (std::size_t k = fa + 1; k <= fb; ++k) {
            for (std::size_t p_i = 0; p_i < n_paths; ++p_i)
                diff[p_i] = fine.y(p_i, k) - fine.y(p_i, fa);
            const auto est = p_norm_jackknife(diff, p);
            if (est.value > interval_sup) {
                interval_sup = est.value;
                interval_sup_se = est.std_error;
            }
        }
        report.y_per_interval[ci] = interval_sup;
        if (interval_sup > y_sup) {
            y_sup = interval_sup;
            y_sup_se = interval_sup_se;
        }

        // Z component: left-endpoint rule over fine intervals.
        double acc = 0.0;
        for (std::size_t k = fa; k < fb; ++k) {
            for (std::size_t p_i = 0; p_i < n_paths; ++p_i)
                diff[p_i] = fine.z(p_i, k) - zbar_ci[p_i];
            const auto est = p_norm_jackknife(diff, p);
            acc += est.value * est.value * grid.dt(k);
            z_var += std::pow(2.0 * est.value * est.std_error * grid.dt(k), 2);
        }
        report.z_per_interval[ci] = acc;
        z_sq += acc;
    }
    report.y_component = y_sup;
    report.y_std_error = y_sup_se;
    report.z_component = std::sqrt(z_sq);
    report.z_std_error = z_sq > 0.0 ? 0.5 * std::sqrt(z_var) / report.z_component : 0.0;
    report.total = report.y_component + report.z_component;
    return report;
}

namespace {

SmoothnessEstimate fit_exponent(std::span<const ResidualSample> samples, double r_l,
                                double slope_to_theta_scale, double slope_to_theta_offset,
                                SmoothnessProbe probe) {
    if (samples.size() < 4)
        throw argument_error("smoothness fit: need at least 4 sample points");
    std::vector<double> lx, ly;
    bool reliable = true;
    for (const auto& s : samples) {
        if (!(s.s < r_l)) throw argument_error("smoothness fit: s must lie left of r_l");
        if (!(s.value > 0.0))
            throw numeric_error("smoothness fit: zero residual (deterministic input?)");
        lx.push_back(std::log(r_l - s.s));
        ly.push_back(std::log(s.value));
        if (s.std_error > 0.2 * s.value) reliable = false;
    }
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (!(samples[i].s > samples[i - 1].s))
            throw argument_error("smoothness fit: s values must be strictly increasing");

    const SlopeFit fit = fit_line(lx, ly);
    SmoothnessEstimate est;
    est.theta_hat = slope_to_theta_offset + slope_to_theta_scale * fit.slope;
    est.theta_se = slope_to_theta_scale * fit.slope_se;
    est.probe = probe;
    est.reliable = reliable;
    for (const auto& s : samples) est.window.push_back(s.s);
    double c = 0.0;
    for (const auto& s : samples)
        c = std::max(c, s.value / std::pow(r_l - s.s, 0.5 * est.theta_hat));
    est.constant_estimate = c;
    return est;
}

} // namespace

SmoothnessEstimate smoothness_from_residuals(std::span<const ResidualSample> samples,
                                             double r_l) {
    return fit_exponent(samples, r_l, 2.0, 0.0, SmoothnessProbe::C4);
}

SmoothnessEstimate z_blowup_from_samples(std::span<const ResidualSample> samples, double r_l) {
    return fit_exponent(samples, r_l, 2.0, 1.0, SmoothnessProbe::C2);
}

SmoothnessEstimate z_blowup_exponent(const BsdeSolution& solution, double r_l,
                                     double window_lo, double window_hi, double p) {
    if (!(window_lo > 0.0) || !(window_hi > window_lo))
        throw argument_error("z_blowup_exponent: bad window");
    const TimeNet& grid = solution.grid();
    std::vector<ResidualSample> samples;
    std::vector<double> z(solution.n_paths());
    for (std::size_t i = 0; i < grid.num_intervals(); ++i) {
        const double gap = r_l - grid.knots[i];
        if (gap < window_lo - 1e-15 || gap > window_hi + 1e-15) continue;
        for (std::size_t p_i = 0; p_i < solution.n_paths(); ++p_i) z[p_i] = solution.z(p_i, i);
        const auto est = p_norm_jackknife(z, p);
        samples.push_back({grid.knots[i], est.value, est.std_error});
    }
    return z_blowup_from_samples(samples, r_l);
}

SmoothnessEstimate y_increment_exponent(const BsdeSolution& solution, double r_l,
                                        std::span<const double> s_values, double p) {
    const TimeNet& grid = solution.grid();
    const std::size_t k_rl = grid.index_of(r_l);
    std::vector<ResidualSample> samples;
    std::vector<double> diff(solution.n_paths());
    for (double s : s_values) {
        const std::size_t k = grid.index_of(s);
        for (std::size_t p_i = 0; p_i < solution.n_paths(); ++p_i)
            diff[p_i] = solution.y(p_i, k_rl) - solution.y(p_i, k);
        const auto est = p_norm_jackknife(diff, p);
        samples.push_back({s, est.value, est.std_error});
    }
    auto est = fit_exponent(samples, r_l, 2.0, 0.0, SmoothnessProbe::C3);
    return est;
}

std::vector<ResidualSample> c4_residual_probe(const BsdeSolution& solution, double r_l,
                                              std::span<const double> s_values, double p) {
    const PathEnsemble& ens = solution.ensemble();
    const std::size_t n_paths = solution.n_paths();
    const std::size_t k_rl = solution.grid().index_of(r_l);
    std::vector<double> y_rl(n_paths);
    for (std::size_t p_i = 0; p_i < n_paths; ++p_i) y_rl[p_i] = solution.y(p_i, k_rl);

    TerminalCondition cond;
    cond.observation_times = solution.observation_times();
    std::vector<ResidualSample> out;
    std::vector<double> diff(n_paths);
    for (double s : s_values) {
        const std::size_t e_knot = ens.grid().index_of(s);
        // features: current state plus breakpoints observed before s
        std::vector<std::size_t> observed;
        const double tol = 1e-12 * ens.grid().horizon();
        for (double r : cond.observation_times)
            if (r < s - tol) observed.push_back(ens.grid().index_of(r));
        const std::size_t nf = 1 + observed.size();
        std::vector<double> features(n_paths * nf);
        for (std::size_t p_i = 0; p_i < n_paths; ++p_i) {
            features[p_i * nf] = ens.state(p_i, e_knot)[0];
            for (std::size_t j = 0; j < observed.size(); ++j)
                features[p_i * nf + 1 + j] = ens.state(p_i, observed[j])[0];
        }
        const StepRegression regressor(solution.regression_config(), features, n_paths, nf, 1);
        const std::vector<double> fitted = regressor.project(y_rl);
        for (std::size_t p_i = 0; p_i < n_paths; ++p_i) diff[p_i] = y_rl[p_i] - fitted[p_i];
        const auto est = p_norm_jackknife(diff, p);
        out.push_back({s, est.value, est.std_error});
    }
    return out;
}

SplineReport spline_error(const BsdeSolution& solution, const TimeNet& knots, double p) {
    const TimeNet& fine = solution.grid();
    if (!fine.refines(knots)) throw argument_error("spline_error: knots not a grid subset");

    const std::size_t n_paths = solution.n_paths();
    std::vector<std::size_t> knot_idx(knots.num_knots());
    for (std::size_t k = 0; k < knots.num_knots(); ++k)
        knot_idx[k] = fine.index_of(knots.knots[k]);

    SplineReport report;
    report.per_time.assign(fine.num_knots(), 0.0);
    std::vector<double> diff(n_paths);
    std::size_t segment = 0;
    for (std::size_t k = 0; k < fine.num_knots(); ++k) {
        while (segment + 1 < knot_idx.size() && knot_idx[segment + 1] < k) ++segment;
        const std::size_t ka = knot_idx[segment];
        const std::size_t kb = knot_idx[segment + 1];
        const double ta = fine.knots[ka], tb = fine.knots[kb];
        const double t = fine.knots[k];
        const double w = (t - ta) / (tb - ta);
        for (std::size_t p_i = 0; p_i < n_paths; ++p_i) {
            const double s_val =
                (1.0 - w) * solution.y(p_i, ka) + w * solution.y(p_i, kb);
            diff[p_i] = solution.y(p_i, k) - s_val;
        }
        const auto est = p_norm_jackknife(diff, p);
        report.per_time[k] = est.value;
        if (est.value > report.sup_error) {
            report.sup_error = est.value;
            report.sup_error_se = est.std_error;
        }
    }
    return report;
}

std::vector<MixingDistance> mixing_distance(const ForwardModel& model,
                                            const TerminalCondition& term, const TimeNet& grid,
                                            std::span<const double> t_values, double r_l,
                                            std::size_t n_paths, std::uint64_t seed, double p) {
    std::vector<MixingDistance> out;
    std::vector<double> diff(n_paths);
    for (double t : t_values) {
        const auto pair =
            simulate_mixed(model, grid, MixingSchedule::indicator(t, r_l), n_paths, seed);
        const auto& g = pair.base.grid();
        const std::size_t L = term.num_observations();
        std::vector<std::size_t> obs(L);
        for (std::size_t l = 0; l < L; ++l) obs[l] = g.index_of(term.observation_times[l]);
        const std::size_t d = pair.base.dimension();
        parallel_for(n_paths, [&](std::size_t lo, std::size_t hi) {
            std::vector<double> sa(L * d), sb(L * d);
            for (std::size_t p_i = lo; p_i < hi; ++p_i) {
                for (std::size_t l = 0; l < L; ++l) {
                    const auto xa = pair.base.state(p_i, obs[l]);
                    const auto xb = pair.mixed.state(p_i, obs[l]);
                    std::copy(xa.begin(), xa.end(), sa.begin() + static_cast<std::ptrdiff_t>(l * d));
                    std::copy(xb.begin(), xb.end(), sb.begin() + static_cast<std::ptrdiff_t>(l * d));
                }
                diff[p_i] = term.g(sb) - term.g(sa);
            }
        });
        const auto est = p_norm_jackknife(diff, p);
        out.push_back({t, est.value, est.std_error});
    }
    return out;
}

StabilityGap stability_gap(const MixedPathPair& pair, const BsdeSolution& base_solution,
                           const BsdeSolution& mixed_solution, double p) {
    if (base_solution.grid().knots != mixed_solution.grid().knots)
        throw argument_error("stability_gap: solutions on different grids");
    if (base_solution.n_paths() != mixed_solution.n_paths() ||
        base_solution.n_paths() != pair.base.n_paths())
        throw argument_error("stability_gap: uncoupled inputs (path counts differ)");
    if (pair.base.master_seed() != pair.mixed.master_seed())
        throw argument_error("stability_gap: uncoupled inputs (seeds differ)");

    const std::size_t n_paths = pair.base.n_paths();
    const TimeNet& sgrid = base_solution.grid();
    const TimeNet& egrid = pair.base.grid();
    const std::size_t d = pair.base.dimension();

    std::vector<double> x_sup(n_paths), y_sup(n_paths), z_int(n_paths), x_term(n_paths),
        xi_gap(n_paths), xi(n_paths);
    parallel_for(n_paths, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p_i = lo; p_i < hi; ++p_i) {
            double xs = 0.0;
            for (std::size_t k = 0; k < egrid.num_knots(); ++k) {
                double norm_sq = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    const double dx =
                        pair.mixed.state(p_i, k)[c] - pair.base.state(p_i, k)[c];
                    norm_sq += dx * dx;
                }
                xs = std::max(xs, std::sqrt(norm_sq));
            }
            x_sup[p_i] = xs;
            double xt = 0.0;
            const std::size_t last = egrid.num_knots() - 1;
            for (std::size_t c = 0; c < d; ++c) {
                const double dx =
                    pair.mixed.state(p_i, last)[c] - pair.base.state(p_i, last)[c];
                xt += dx * dx;
            }
            x_term[p_i] = std::sqrt(xt);

            double ys = 0.0, zi = 0.0;
            for (std::size_t k = 0; k < sgrid.num_knots(); ++k)
                ys = std::max(ys,
                              std::abs(mixed_solution.y(p_i, k) - base_solution.y(p_i, k)));
            for (std::size_t k = 0; k < sgrid.num_intervals(); ++k) {
                const double dz = mixed_solution.z(p_i, k) - base_solution.z(p_i, k);
                zi += dz * dz * sgrid.dt(k);
            }
            y_sup[p_i] = ys;
            z_int[p_i] = std::sqrt(zi);
            const std::size_t s_last = sgrid.num_knots() - 1;
            xi[p_i] = base_solution.y(p_i, s_last);
            xi_gap[p_i] = mixed_solution.y(p_i, s_last) - base_solution.y(p_i, s_last);
        }
    });

    StabilityGap gap;
    gap.x_sup_gap = p_norm(x_sup, p);
    gap.y_sup_gap = p_norm(y_sup, p);
    gap.z_integral_gap = p_norm(z_int, p);
    gap.x_terminal_gap = p_norm(x_term, p);
    gap.xi_gap = p_norm(xi_gap, p);
    gap.xi_norm = p_norm(xi, p);
    switch (pair.schedule.kind) {
        case MixingSchedule::Kind::Zero:
            gap.eta_l2 = 0.0;
            break;
        case MixingSchedule::Kind::Indicator:
            gap.eta_l2 = std::sqrt(pair.schedule.to - pair.schedule.from);
            break;
        case MixingSchedule::Kind::Custom: {
            // midpoint rule on the ensemble grid
            double acc = 0.0;
            for (std::size_t k = 0; k < egrid.num_intervals(); ++k) {
                const double mid = 0.5 * (egrid.knots[k] + egrid.knots[k + 1]);
                const double e = pair.schedule.value(mid);
                acc += e * e * egrid.dt(k);
            }
            gap.eta_l2 = std::sqrt(acc);
            break;
        }
    }
    const double rhs = gap.xi_gap + (1.0 + gap.xi_norm) * gap.eta_l2;
    gap.fitted_constant =
        rhs > 0.0 ? (gap.x_sup_gap + gap.y_sup_gap + gap.z_integral_gap) / rhs : 0.0;
    return gap;
}

SlopeFit rate_slope(std::span<const double> ns, std::span<const double> values) {
    if (ns.size() != values.size() || ns.size() < 3)
        throw argument_error("rate_slope: need >= 3 matched rows");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (i > 0 && !(ns[i] > ns[i - 1]))
            throw argument_error("rate_slope: n must be strictly increasing");
        if (!(values[i] > 0.0)) throw domain_error("rate_slope: values must be positive");
        lx.push_back(std::log(ns[i]));
        ly.push_back(std::log(values[i]));
    }
    return fit_line(lx, ly);
}

} // namespace bfnet
