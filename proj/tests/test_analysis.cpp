#include <doctest.h>

#include <cmath>
#include <memory>

#include "bfnet/analysis.hpp"
#include "bfnet/gaussian_oracle.hpp"

using namespace bfnet;

namespace {

std::shared_ptr<const PathEnsemble> brownian_paths(const TimeNet& grid, std::size_t n_paths,
                                                   std::uint64_t seed) {
    return std::make_shared<PathEnsemble>(
        simulate(ForwardModel::brownian(1), grid, n_paths, seed));
}

BsdeSolution solve_brownian(const TerminalFunction1D& g, const TimeNet& grid,
                            std::size_t n_paths, std::uint64_t seed,
                            RegressionConfig reg = {}) {
    const auto model = ForwardModel::brownian(1);
    return solve(model, Generator::zero(), TerminalCondition::terminal_1d(g, 1.0), grid,
                 brownian_paths(grid, n_paths, seed), reg, SchemeTag::Explicit);
}

} // namespace

TEST_CASE("variation: linear terminal condition") {
    const auto coarse = build_uniform_net(SmoothnessSpec({0.0, 1.0}, {1.0}), 4);
    const auto fine = refine_net(coarse, 4);
    const auto sol = solve_brownian(TerminalFunction1D::linear(), fine, 1u << 14, 11u);
    const auto report = variation(sol, coarse, 2.0);

    // Z is constant, so the Z component sits at the regression noise floor:
    // fitted-value noise is about resid * sqrt(cols / n) per knot, twice for
    // the difference of two fitted estimates.
    double floor_sq = 0.0;
    const double cols = 4.0;
    for (std::size_t i = 0; i < fine.num_intervals(); ++i) {
        const double resid = sol.diagnostics().z_residual_norm[i];
        floor_sq += 2.0 * resid * resid * cols / static_cast<double>(sol.n_paths()) *
                    fine.dt(i);
    }
    CHECK(report.z_component <= 2.0 * std::sqrt(floor_sq));
    // Y component: max over intervals of sqrt(s - t_{i-1}) = sqrt(max dt).
    CHECK(report.y_component == doctest::Approx(0.5).epsilon(0.05));
    CHECK(report.total == report.y_component + report.z_component);
    for (double v : report.y_per_interval) CHECK(v == doctest::Approx(0.5).epsilon(0.08));
}

TEST_CASE("variation: theta = 1 net equals the uniform net bitwise") {
    SmoothnessSpec spec({0.0, 1.0}, {1.0});
    const auto uniform = refine_net(build_uniform_net(spec, 4), 4);
    const auto theta = refine_net(build_theta_net(spec, 4), 4);
    REQUIRE(uniform.knots == theta.knots);
    const auto sol_u = solve_brownian(TerminalFunction1D::hermite(2), uniform, 4096, 13u);
    const auto sol_t = solve_brownian(TerminalFunction1D::hermite(2), theta, 4096, 13u);
    const auto ru = variation(sol_u, build_uniform_net(spec, 4), 2.0);
    const auto rt = variation(sol_t, build_theta_net(spec, 4), 2.0);
    CHECK(ru.y_component == rt.y_component);
    CHECK(ru.z_component == rt.z_component);
    CHECK(ru.total == rt.total);
}

TEST_CASE("variation: halving the fine grid moves the report by less than 5%") {
    const auto coarse = build_uniform_net(SmoothnessSpec({0.0, 1.0}, {1.0}), 4);
    const auto sol4 =
        solve_brownian(TerminalFunction1D::hermite(2), refine_net(coarse, 4), 1u << 14, 17u);
    const auto sol8 =
        solve_brownian(TerminalFunction1D::hermite(2), refine_net(coarse, 8), 1u << 14, 17u);
    const auto r4 = variation(sol4, coarse, 2.0);
    const auto r8 = variation(sol8, coarse, 2.0);
    CHECK(std::abs(r8.total - r4.total) / r4.total < 0.05);
}

TEST_CASE("variation rejects non-nested grids and small p") {
    const auto coarse = build_uniform_net(SmoothnessSpec({0.0, 1.0}, {1.0}), 4);
    const auto sol = solve_brownian(TerminalFunction1D::linear(), refine_net(coarse, 2), 1024, 1u);
    CHECK_THROWS_AS(variation(sol, net_from_knots({0.0, 0.33, 1.0}), 2.0), argument_error);
    CHECK_THROWS_AS(variation(sol, coarse, 1.0), argument_error);
}

TEST_CASE("smoothness fits on deterministic oracle residuals") {
    auto window_samples = [](const TerminalFunction1D& g, double p) {
        std::vector<ResidualSample> samples;
        for (int j = 2; j <= 10; ++j) {
            const double s = 1.0 - std::pow(2.0, -j);
            const auto r = cond_residual_norm(g, s, p);
            samples.push_back({s, r.value, 0.0});
        }
        return samples;
    };
    SUBCASE("linear: theta = 1.000 +- 0.001") {
        const auto est = smoothness_from_residuals(window_samples(TerminalFunction1D::linear(), 2.0), 1.0);
        CHECK(est.theta_hat == doctest::Approx(1.0).epsilon(0.001));
        CHECK(est.reliable);
    }
    SUBCASE("indicator at p = 2: theta = 0.50 +- 0.03") {
        const auto est = smoothness_from_residuals(
            window_samples(TerminalFunction1D::indicator(0.0), 2.0), 1.0);
        CHECK(std::abs(est.theta_hat - 0.5) < 0.03);
    }
    SUBCASE("power(0.25) at p = 2: theta = 0.75 +- 0.03") {
        const auto est = smoothness_from_residuals(
            window_samples(TerminalFunction1D::power(0.25), 2.0), 1.0);
        CHECK(std::abs(est.theta_hat - 0.75) < 0.03);
    }
    SUBCASE("degenerate inputs") {
        std::vector<ResidualSample> zero = {{0.1, 0.0}, {0.2, 0.0}, {0.3, 0.0}, {0.4, 0.0}};
        CHECK_THROWS_AS(smoothness_from_residuals(zero, 1.0), numeric_error);
        std::vector<ResidualSample> few = {{0.1, 1.0}, {0.2, 0.5}};
        CHECK_THROWS_AS(smoothness_from_residuals(few, 1.0), argument_error);
    }
}

TEST_CASE("z blow-up exponents from the oracle series") {
    auto samples_from_series = [](const HermiteExpansion& exp) {
        std::vector<ResidualSample> samples;
        for (int j = 10; j >= 4; --j) {
            const double t = 1.0 - std::pow(2.0, -j);
            samples.push_back({t, z_norm_l2(exp, t), 0.0});
        }
        std::sort(samples.begin(), samples.end(),
                  [](const ResidualSample& a, const ResidualSample& b) { return a.s < b.s; });
        return samples;
    };
    SUBCASE("linear: Z constant, theta = 1") {
        std::vector<ResidualSample> flat;
        for (int j = 2; j <= 8; ++j) flat.push_back({1.0 - std::pow(2.0, -j), 1.0, 0.0});
        const auto est = z_blowup_from_samples(flat, 1.0);
        CHECK(est.theta_hat == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("indicator: theta = 0.5 +- 0.05") {
        const auto est = z_blowup_from_samples(
            samples_from_series(indicator_expansion(0.0, 200000)), 1.0);
        CHECK(std::abs(est.theta_hat - 0.5) < 0.05);
    }
    SUBCASE("h_2: bounded Z, theta = 1 +- 0.05") {
        const auto est =
            z_blowup_from_samples(samples_from_series(expand(TerminalFunction1D::hermite(2), 8, 64)), 1.0);
        CHECK(std::abs(est.theta_hat - 1.0) < 0.05);
    }
}

TEST_CASE("spline errors") {
    SUBCASE("pathwise-linear Y interpolates exactly") {
        const auto grid = refine_net(net_from_knots({0.0, 0.5, 1.0}), 4);
        auto ens = brownian_paths(grid, 128, 7u);
        BsdeSolution sol(grid, ens, RegressionConfig{}, SchemeTag::Explicit);
        for (std::size_t p = 0; p < 128; ++p)
            for (std::size_t k = 0; k < grid.num_knots(); ++k)
                sol.mutable_y()[k * 128 + p] =
                    0.3 * static_cast<double>(p) + 1.7 * grid.knots[k];
        const auto report = spline_error(sol, net_from_knots({0.0, 0.5, 1.0}), 2.0);
        CHECK(report.sup_error < 1e-12);
    }
    SUBCASE("Brownian midpoint bridge value at theta = 1, n = 4") {
        SmoothnessSpec spec({0.0, 1.0}, {1.0});
        const auto knots = build_theta_net(spec, 4);
        const auto fine = refine_net(knots, 8);
        const auto sol = solve_brownian(TerminalFunction1D::linear(), fine, 1u << 14, 19u);
        const auto report = spline_error(sol, knots, 2.0);
        CHECK(report.sup_error == doctest::Approx(0.25).epsilon(0.10));
    }
    SUBCASE("error vanishes at knot times") {
        SmoothnessSpec spec({0.0, 1.0}, {1.0});
        const auto knots = build_theta_net(spec, 4);
        const auto fine = refine_net(knots, 4);
        const auto sol = solve_brownian(TerminalFunction1D::linear(), fine, 2048, 23u);
        const auto report = spline_error(sol, knots, 2.0);
        for (std::size_t k = 0; k < knots.num_knots(); ++k)
            CHECK(report.per_time[fine.index_of(knots.knots[k])] == 0.0);
    }
    SUBCASE("knots must be grid knots") {
        const auto grid = refine_net(net_from_knots({0.0, 0.5, 1.0}), 2);
        const auto sol = solve_brownian(TerminalFunction1D::linear(), grid, 512, 29u);
        CHECK_THROWS_AS(spline_error(sol, net_from_knots({0.0, 0.4, 1.0}), 2.0),
                        argument_error);
    }
}

TEST_CASE("mixing distances") {
    const auto model = ForwardModel::brownian(1);
    const auto grid = build_uniform_net(SmoothnessSpec({0.0, 1.0}, {1.0}), 8);
    SUBCASE("linear xi: || xi - xi^{t,1} ||_2 = sqrt(2 (1 - t))") {
        const auto term = TerminalCondition::terminal_1d(TerminalFunction1D::linear(), 1.0);
        const double ts[] = {0.25, 0.5, 0.75};
        const auto rows = mixing_distance(model, term, grid, ts, 1.0, 1u << 16, 31u, 2.0);
        for (const auto& row : rows) {
            const double expect = std::sqrt(2.0 * (1.0 - row.t));
            CHECK(std::abs(row.value - expect) < 3.0 * std::max(row.std_error, 1e-8));
        }
    }
    SUBCASE("indicator xi: fitted exponent 0.5 +- 0.05, consistent with C4") {
        const auto term =
            TerminalCondition::terminal_1d(TerminalFunction1D::indicator(0.0), 1.0);
        std::vector<double> ts;
        for (int j = 2; j <= 6; ++j) ts.push_back(1.0 - std::pow(2.0, -j));
        const auto rows = mixing_distance(model, term, grid, ts, 1.0, 1u << 16, 37u, 2.0);
        std::vector<ResidualSample> samples;
        for (const auto& row : rows) samples.push_back({row.t, row.value, row.std_error});
        auto est = smoothness_from_residuals(samples, 1.0);
        est.probe = SmoothnessProbe::Mixing;
        CHECK(std::abs(est.theta_hat - 0.5) < 0.05);
        CHECK(est.reliable);

        std::vector<ResidualSample> oracle_samples;
        for (double t : ts)
            oracle_samples.push_back(
                {t, cond_residual_norm(TerminalFunction1D::indicator(0.0), t, 2.0).value, 0.0});
        const auto c4 = smoothness_from_residuals(oracle_samples, 1.0);
        CHECK(std::abs(est.theta_hat - c4.theta_hat) < 0.1);
    }
}

TEST_CASE("stability gaps") {
    const auto model = ForwardModel::brownian(1);
    // The sup over grid knots approximates a continuous-time sup; a coarse
    // grid would distort the window-size scaling through the discrete-max
    // constant, so the observation grid is kept fine.
    const auto grid = build_uniform_net(SmoothnessSpec({0.0, 1.0}, {1.0}), 64);
    RegressionConfig reg;
    const auto term = TerminalCondition::terminal_1d(TerminalFunction1D::linear(), 1.0);

    SUBCASE("eta = 0: every gap is exactly zero") {
        const auto pair = simulate_mixed(model, grid, MixingSchedule::zero(), 2048, 41u);
        auto base = std::make_shared<PathEnsemble>(pair.base);
        auto mixed = std::make_shared<PathEnsemble>(pair.mixed);
        const auto sa = solve(model, Generator::zero(), term, pair.base.grid(), base, reg,
                              SchemeTag::Explicit);
        const auto sb = solve(model, Generator::zero(), term, pair.mixed.grid(), mixed, reg,
                              SchemeTag::Explicit);
        const auto gap = stability_gap(pair, sa, sb, 2.0);
        CHECK(gap.x_sup_gap == 0.0);
        CHECK(gap.y_sup_gap == 0.0);
        CHECK(gap.z_integral_gap == 0.0);
        CHECK(gap.xi_gap == 0.0);
    }
    SUBCASE("brownian indicator(t, 1): X gap^2 slope vs (1-t) is 1 +- 0.1") {
        std::vector<double> one_minus_t, gap_sq;
        for (double t : {0.25, 0.5, 0.75}) {
            const auto pair =
                simulate_mixed(model, grid, MixingSchedule::indicator(t, 1.0), 1u << 14, 43u);
            auto base = std::make_shared<PathEnsemble>(pair.base);
            auto mixed = std::make_shared<PathEnsemble>(pair.mixed);
            const auto sa = solve(model, Generator::zero(), term, pair.base.grid(), base, reg,
                                  SchemeTag::Explicit);
            const auto sb = solve(model, Generator::zero(), term, pair.mixed.grid(), mixed,
                                  reg, SchemeTag::Explicit);
            const auto gap = stability_gap(pair, sa, sb, 2.0);
            one_minus_t.push_back(1.0 - t);
            gap_sq.push_back(gap.x_sup_gap * gap.x_sup_gap);
            // terminal X gap is exactly sqrt(2 (1-t)) in the mean-square sense
            CHECK(gap.x_terminal_gap ==
                  doctest::Approx(std::sqrt(2.0 * (1.0 - t))).epsilon(0.03));
        }
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < 3; ++i) {
            lx.push_back(std::log(one_minus_t[i]));
            ly.push_back(std::log(gap_sq[i]));
        }
        const auto fit = fit_line(lx, ly);
        CHECK(std::abs(fit.slope - 1.0) < 0.1);
    }
    SUBCASE("GBM: fitted constant stable within a factor 3 across t") {
        const auto gbm = ForwardModel::geometric({0.05}, {0.2}, {1.0});
        const auto gterm = TerminalCondition::terminal_1d(TerminalFunction1D::linear(), 1.0);
        std::vector<double> constants;
        for (double t : {0.25, 0.5, 0.75}) {
            const auto pair =
                simulate_mixed(gbm, grid, MixingSchedule::indicator(t, 1.0), 1u << 14, 47u);
            auto base = std::make_shared<PathEnsemble>(pair.base);
            auto mixed = std::make_shared<PathEnsemble>(pair.mixed);
            const auto sa = solve(gbm, Generator::zero(), gterm, pair.base.grid(), base, reg,
                                  SchemeTag::Explicit);
            const auto sb = solve(gbm, Generator::zero(), gterm, pair.mixed.grid(), mixed,
                                  reg, SchemeTag::Explicit);
            constants.push_back(stability_gap(pair, sa, sb, 2.0).fitted_constant);
        }
        const double lo = *std::min_element(constants.begin(), constants.end());
        const double hi = *std::max_element(constants.begin(), constants.end());
        CHECK(hi / lo < 3.0);
    }
}

TEST_CASE("rate slopes") {
    SUBCASE("exact power laws") {
        std::vector<double> ns{4, 8, 16, 32};
        std::vector<double> v1, v2;
        for (double n : ns) {
            v1.push_back(3.0 * std::pow(n, -0.5));
            v2.push_back(0.7 * std::pow(n, -0.25));
        }
        CHECK(rate_slope(ns, v1).slope == doctest::Approx(-0.5).epsilon(1e-12));
        CHECK(rate_slope(ns, v2).slope == doctest::Approx(-0.25).epsilon(1e-12));
    }
    SUBCASE("errors") {
        std::vector<double> ns{4, 8, 16};
        std::vector<double> bad{1.0, -1.0, 0.5};
        CHECK_THROWS_AS(rate_slope(ns, bad), domain_error);
        std::vector<double> two_n{4, 8};
        std::vector<double> two_v{1.0, 0.5};
        CHECK_THROWS_AS(rate_slope(two_n, two_v), argument_error);
    }
}
