#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "bfnet/forward.hpp"
#include "bfnet/stats.hpp"

using namespace bfnet;

namespace {

TimeNet unit_grid(std::size_t steps) {
    std::vector<double> knots;
    for (std::size_t i = 0; i <= steps; ++i)
        knots.push_back(static_cast<double>(i) / static_cast<double>(steps));
    knots.back() = 1.0;
    return net_from_knots(knots);
}

} // namespace

TEST_CASE("brownian kind is the identity map of increments") {
    const auto model = ForwardModel::brownian(1);
    const auto ens = simulate(model, net_from_knots({0.0, 1.0}), 1, 7u);
    CHECK(ens.state(0, 1)[0] == ens.increment(0, 0)[0]);
}

TEST_CASE("geometric kind samples the exact lognormal law") {
    const auto model = ForwardModel::geometric({0.05}, {0.2}, {1.0});
    const std::size_t n = 1u << 16;
    const auto ens = simulate(model, unit_grid(4), n, 11u);
    std::vector<double> x1(n);
    for (std::size_t p = 0; p < n; ++p) x1[p] = ens.state(p, 4)[0];
    const auto m = mean_with_se(x1);
    CHECK(std::abs(m.value - std::exp(0.05)) < 3.0 * m.std_error);
    // per-step exact map: X_{t+h} = X_t exp((mu - vol^2/2) h + vol dW)
    const double h = 0.25;
    const double expect =
        ens.state(5, 0)[0] *
        std::exp((0.05 - 0.02) * h + 0.2 * ens.increment(5, 0)[0]);
    CHECK(ens.state(5, 1)[0] == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("ornstein-uhlenbeck exact transition moments") {
    const double kappa = 1.3, mean = 0.4, vol = 0.7, x0 = -0.2;
    const auto model = ForwardModel::ornstein_uhlenbeck({kappa}, {mean}, {vol}, {x0});
    const std::size_t n = 1u << 14;
    const auto ens = simulate(model, unit_grid(8), n, 3u);
    std::vector<double> xT(n);
    for (std::size_t p = 0; p < n; ++p) xT[p] = ens.state(p, 8)[0];
    const auto m = mean_with_se(xT);
    const double exact_mean = mean + (x0 - mean) * std::exp(-kappa);
    CHECK(std::abs(m.value - exact_mean) < 4.0 * m.std_error);
    double var = 0.0;
    for (double v : xT) var += (v - m.value) * (v - m.value);
    var /= static_cast<double>(n - 1);
    const double exact_var = vol * vol * (1.0 - std::exp(-2.0 * kappa)) / (2.0 * kappa);
    CHECK(std::abs(var - exact_var) < 4.0 * exact_var * std::sqrt(2.0 / n));
}

TEST_CASE("increment law at 2^16 paths") {
    const auto model = ForwardModel::brownian(1);
    const std::size_t n = 1u << 16;
    const auto ens = simulate(model, net_from_knots({0.0, 0.3, 1.0}), n, 5u);
    for (std::size_t interval : {0u, 1u}) {
        const double dt = ens.grid().dt(interval);
        std::vector<double> dw(n);
        for (std::size_t p = 0; p < n; ++p) dw[p] = ens.increment(p, interval)[0];
        const auto m = mean_with_se(dw);
        CHECK(std::abs(m.value) < 4.0 * m.std_error);
        double var = 0.0;
        for (double v : dw) var += v * v;
        var /= static_cast<double>(n);
        CHECK(std::abs(var - dt) < 4.0 * dt * std::sqrt(2.0 / n));
    }
}

TEST_CASE("bitwise reproducibility across seeds and thread counts") {
    const auto model = ForwardModel::geometric({0.05}, {0.2}, {1.0});
    const auto grid = unit_grid(16);
    setenv("BFNET_THREADS", "1", 1);
    const auto a = simulate(model, grid, 4096, 99u, true);
    setenv("BFNET_THREADS", "8", 1);
    const auto b = simulate(model, grid, 4096, 99u, true);
    unsetenv("BFNET_THREADS");
    for (std::size_t p = 0; p < 4096; p += 97)
        for (std::size_t k = 0; k <= 16; ++k) {
            CHECK(a.state(p, k)[0] == b.state(p, k)[0]);
            CHECK(a.flow(p, k)[0] == b.flow(p, k)[0]);
        }
    const auto c = simulate(model, grid, 4096, 100u);
    CHECK(a.state(0, 16)[0] != c.state(0, 16)[0]);
}

TEST_CASE("flow values") {
    SUBCASE("brownian flow is identically one") {
        const auto ens = simulate(ForwardModel::brownian(1), unit_grid(4), 8, 2u, true);
        for (std::size_t p = 0; p < 8; ++p)
            for (std::size_t k = 0; k <= 4; ++k) CHECK(ens.flow(p, k)[0] == 1.0);
    }
    SUBCASE("generic flow matches a finite-difference flow within 1e-2") {
        // Smooth scalar model dX = sin(X) dt + (1 + 0.1 cos(X)) dW.
        auto drift = [](double, std::span<const double> x, std::span<double> out) {
            out[0] = std::sin(x[0]);
        };
        auto diff = [](double, std::span<const double> x, std::span<double> out) {
            out[0] = 1.0 + 0.1 * std::cos(x[0]);
        };
        const double h = 1e-4;
        const auto base = ForwardModel::generic(1, drift, diff, {0.3});
        const auto bumped = ForwardModel::generic(1, drift, diff, {0.3 + h});
        const auto grid = unit_grid(64);
        const auto e0 = simulate(base, grid, 256, 21u, true);
        const auto e1 = simulate(bumped, grid, 256, 21u);
        for (std::size_t p = 0; p < 256; p += 13) {
            const double fd = (e1.state(p, 64)[0] - e0.state(p, 64)[0]) / h;
            const double fl = e0.flow(p, 64)[0];
            CHECK(fl == doctest::Approx(fd).epsilon(1e-2));
        }
    }
}

TEST_CASE("mixing") {
    const auto model = ForwardModel::brownian(1);
    const auto grid = unit_grid(8);
    SUBCASE("eta = 0 gives a bitwise-identical pair") {
        const auto pair = simulate_mixed(model, grid, MixingSchedule::zero(), 512, 17u);
        for (std::size_t p = 0; p < 512; ++p)
            for (std::size_t k = 0; k <= 8; ++k)
                CHECK(pair.base.state(p, k)[0] == pair.mixed.state(p, k)[0]);
    }
    SUBCASE("indicator window: terminal gap second moment = 2 (1 - t)") {
        const std::size_t n = 1u << 16;
        for (double t : {0.25, 0.5, 0.75}) {
            const auto pair =
                simulate_mixed(model, grid, MixingSchedule::indicator(t, 1.0), n, 23u);
            const std::size_t last = pair.base.grid().num_knots() - 1;
            std::vector<double> gap_sq(n);
            for (std::size_t p = 0; p < n; ++p) {
                const double d = pair.mixed.state(p, last)[0] - pair.base.state(p, last)[0];
                gap_sq[p] = d * d;
            }
            const auto m = mean_with_se(gap_sq);
            CHECK(std::abs(m.value - 2.0 * (1.0 - t)) < 3.0 * m.std_error);
        }
    }
    SUBCASE("increments couple exactly outside and independently inside") {
        const std::size_t n = 1u << 14;
        const auto pair =
            simulate_mixed(model, grid, MixingSchedule::indicator(0.5, 1.0), n, 29u);
        const auto& g = pair.base.grid();
        for (std::size_t i = 0; i + 1 < g.num_knots(); ++i) {
            const bool inside = g.knots[i] >= 0.5;
            double num = 0.0, da = 0.0, db = 0.0;
            for (std::size_t p = 0; p < n; ++p) {
                const double a = pair.base.increment(p, i)[0];
                const double b = pair.mixed.increment(p, i)[0];
                num += a * b;
                da += a * a;
                db += b * b;
            }
            const double rho = num / std::sqrt(da * db);
            if (inside)
                CHECK(std::abs(rho) < 4.0 / std::sqrt(static_cast<double>(n)));
            else
                CHECK(rho == doctest::Approx(1.0).epsilon(1e-15));
        }
    }
    SUBCASE("jump points are inserted into the grid") {
        const auto pair =
            simulate_mixed(model, unit_grid(3), MixingSchedule::indicator(0.5, 0.9), 4, 31u);
        CHECK(pair.base.grid().contains(0.5));
        CHECK(pair.base.grid().contains(0.9));
    }
    SUBCASE("indicator endpoints outside the horizon fail") {
        CHECK_THROWS_AS(
            simulate_mixed(model, grid, MixingSchedule::indicator(0.5, 1.5), 4, 1u),
            domain_error);
    }
}

TEST_CASE("malliavin weight, order one") {
    const auto model = ForwardModel::brownian(1);
    const std::size_t n = 1u << 16;
    const auto grid = unit_grid(4);
    const auto ens = simulate(model, grid, n, 41u, true);
    const auto w = malliavin_weight_order1(ens, model, 0, 4);
    SUBCASE("equals W_1 bitwise for the unit interval") {
        for (std::size_t p = 0; p < n; p += 1013) {
            double w1 = 0.0;
            for (std::size_t i = 0; i < 4; ++i) w1 += ens.increment(p, i)[0];
            CHECK(w[p] == w1 / 1.0);
        }
    }
    SUBCASE("zero conditional mean and exact L2 norm") {
        const auto m = mean_with_se(w);
        CHECK(std::abs(m.value) < 3.0 * m.std_error);
        double l2 = 0.0;
        for (double v : w) l2 += v * v;
        l2 = std::sqrt(l2 / static_cast<double>(n));
        CHECK(std::abs(l2 - 1.0) < 0.01); // 1/sqrt(R - r) with R - r = 1
    }
    SUBCASE("sub-interval norm 1/sqrt(R-r)") {
        const auto w2 = malliavin_weight_order1(ens, model, 2, 4);
        double l2 = 0.0;
        for (double v : w2) l2 += v * v;
        l2 = std::sqrt(l2 / static_cast<double>(n));
        CHECK(std::abs(l2 - std::sqrt(2.0)) < 0.01 * std::sqrt(2.0));
    }
    SUBCASE("missing flow is a precondition error") {
        const auto bare = simulate(model, grid, 8, 1u, false);
        CHECK_THROWS_AS(malliavin_weight_order1(bare, model, 0, 4), argument_error);
    }
}

TEST_CASE("geometric weight reduces to W-average over sigma-scaled flow") {
    // For GBM: sigma(t, X) = vol * X and flow_t = X_t / x0, so
    // sigma^{-1} flow_s flow_r^{-1} = X_r / (vol X_s X_s / ... ) -- exercised
    // against an independent direct computation per path.
    const auto model = ForwardModel::geometric({0.0}, {0.5}, {2.0});
    const auto grid = unit_grid(8);
    const auto ens = simulate(model, grid, 64, 43u, true);
    const auto w = malliavin_weight_order1(ens, model, 2, 6);
    const double span = grid.knots[6] - grid.knots[2];
    for (std::size_t p = 0; p < 64; ++p) {
        double acc = 0.0;
        for (std::size_t i = 2; i < 6; ++i) {
            const double sigma = 0.5 * ens.state(p, i)[0];
            const double ratio = ens.flow(p, i)[0] / ens.flow(p, 2)[0];
            acc += ratio / sigma * ens.increment(p, i)[0];
        }
        CHECK(w[p] == doctest::Approx(acc / span).epsilon(1e-12));
    }
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(ForwardModel::geometric({0.05}, {0.2}, {0.0}), validation_error);
    CHECK_THROWS_AS(ForwardModel::ornstein_uhlenbeck({-1.0}, {0.0}, {1.0}, {0.0}),
                    validation_error);
    CHECK_THROWS_AS(ForwardModel::arithmetic({0.0}, {0.0}, {0.0}), validation_error);
    auto singular = ForwardModel::generic(
        1, [](double, std::span<const double>, std::span<double> o) { o[0] = 0.0; },
        [](double, std::span<const double>, std::span<double> o) { o[0] = 1.0; }, {0.0});
    CHECK_NOTHROW(simulate(singular, unit_grid(2), 4, 1u));
}
