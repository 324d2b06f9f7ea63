#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "bfnet/rng.hpp"
#include "bfnet/timenet.hpp"

using namespace bfnet;

namespace {

// Independent evaluation of the clustered-knot formula, written directly from
// its closed form so the builder is checked against a second code path.
double knot_formula(double a, double b, double theta, std::size_t k, std::size_t n) {
    const double u = static_cast<double>(k) / static_cast<double>(n);
    return a + (b - a) * (1.0 - std::pow(1.0 - u, 1.0 / theta));
}

} // namespace

TEST_CASE("theta net: frozen examples") {
    SUBCASE("theta = 1 reduces to the uniform net") {
        SmoothnessSpec spec({0.0, 1.0}, {1.0});
        const TimeNet net = build_theta_net(spec, 4);
        REQUIRE(net.knots.size() == 5);
        const double expect[5] = {0.0, 0.25, 0.5, 0.75, 1.0};
        for (int i = 0; i < 5; ++i) CHECK(net.knots[i] == expect[i]);
    }
    SUBCASE("theta = 0.5, n = 2") {
        SmoothnessSpec spec({0.0, 1.0}, {0.5});
        const TimeNet net = build_theta_net(spec, 2);
        REQUIRE(net.knots.size() == 3);
        CHECK(net.knots[0] == 0.0);
        CHECK(net.knots[1] == doctest::Approx(0.75).epsilon(1e-15));
        CHECK(net.knots[2] == 1.0);
    }
    SUBCASE("two intervals, mixed exponents") {
        SmoothnessSpec spec({0.0, 1.0, 2.0}, {1.0, 0.5});
        const TimeNet net = build_theta_net(spec, 2);
        REQUIRE(net.knots.size() == 5);
        CHECK(net.knots[1] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(net.knots[2] == 1.0);
        CHECK(net.knots[3] == doctest::Approx(1.75).epsilon(1e-15));
        CHECK(net.knots[4] == 2.0);
        CHECK(net.breakpoint_indices == std::vector<std::size_t>{2, 4});
    }
}

TEST_CASE("theta net: randomized property suite against the closed form") {
    // L <= 3, n <= 64, theta drawn from {0.1, ..., 1.0}. Extreme clustering
    // (theta near 0 with large n) drives the last knot gap below the dedupe
    // tolerance; the contract there is a validation error, not a merge, so
    // both branches are asserted.
    const CounterRng rng(20240317u, NoiseStream::Auxiliary);
    std::size_t formula_checked = 0, degenerate_checked = 0;
    for (std::uint64_t trial = 0; trial < 300; ++trial) {
        double u0, u1, u2, u3;
        rng.uniform_pair(trial, 0, 0, u0, u1);
        rng.uniform_pair(trial, 1, 0, u2, u3);
        const std::size_t L = 1 + static_cast<std::size_t>(u0 * 3.0);
        const std::size_t n = 1 + static_cast<std::size_t>(u1 * 64.0);
        std::vector<double> breaks{0.0};
        std::vector<double> theta;
        for (std::size_t l = 0; l < L; ++l) {
            double a, b;
            rng.uniform_pair(trial, static_cast<std::uint32_t>(2 + l), 0, a, b);
            breaks.push_back(breaks.back() + 0.25 + 2.0 * a);
            theta.push_back(0.1 * (1.0 + std::floor(b * 9.9999)));
        }
        SmoothnessSpec spec(breaks, theta);
        // Smallest gap the formula produces: (r_l - r_{l-1}) * n^{-1/theta_l}.
        double min_gap = 1e300;
        for (std::size_t l = 0; l < L; ++l)
            min_gap = std::min(min_gap, (breaks[l + 1] - breaks[l]) *
                                            std::pow(static_cast<double>(n), -1.0 / theta[l]));
        const double tol = 1e-12 * breaks.back();

        if (min_gap <= 0.3 * tol) {
            CHECK_THROWS_AS(build_theta_net(spec, n), validation_error);
            ++degenerate_checked;
            continue;
        }
        if (min_gap <= 30.0 * tol) continue; // rounding decides; either branch is fine
        const TimeNet net = build_theta_net(spec, n);
        ++formula_checked;
        REQUIRE(net.knots.size() == L * n + 1);
        for (std::size_t i = 1; i < net.knots.size(); ++i)
            REQUIRE(net.knots[i] > net.knots[i - 1]);
        for (std::size_t l = 1; l <= L; ++l) {
            for (std::size_t k = (l - 1) * n + 1; k <= l * n; ++k) {
                const double expected =
                    knot_formula(breaks[l - 1], breaks[l], theta[l - 1], k - (l - 1) * n, n);
                REQUIRE(std::abs(net.knots[k] - expected) <= 1e-12);
            }
            REQUIRE(net.knots[l * n] == breaks[l]);
        }
    }
    CHECK(formula_checked > 150);
    CHECK(degenerate_checked > 10);
}

TEST_CASE("theta = 1 everywhere matches the uniform net exactly") {
    SmoothnessSpec spec({0.0, 0.7, 1.9}, {1.0, 1.0});
    for (std::size_t n : {1u, 3u, 17u, 64u}) {
        const TimeNet a = build_theta_net(spec, n);
        const TimeNet b = build_uniform_net(spec, n);
        REQUIRE(a.knots.size() == b.knots.size());
        for (std::size_t i = 0; i < a.knots.size(); ++i) CHECK(a.knots[i] == b.knots[i]);
    }
}

TEST_CASE("uniform net examples") {
    CHECK(build_uniform_net(SmoothnessSpec({0.0, 1.0}, {1.0}), 2).knots ==
          std::vector<double>{0.0, 0.5, 1.0});
    CHECK(build_uniform_net(SmoothnessSpec({0.0, 2.0}, {1.0}), 4).knots ==
          std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
    CHECK(build_uniform_net(SmoothnessSpec({0.0, 1.0, 3.0}, {1.0, 1.0}), 2).knots ==
          std::vector<double>{0.0, 0.5, 1.0, 2.0, 3.0});
}

TEST_CASE("phi evaluation and domain") {
    SmoothnessSpec smooth({0.0, 1.0}, {1.0});
    CHECK(phi(0.5, smooth) == doctest::Approx(1.0));
    SmoothnessSpec rough({0.0, 1.0}, {0.5});
    CHECK(phi(0.75, rough) == doctest::Approx(std::pow(0.25, -0.25)).epsilon(1e-12));
    CHECK(phi(0.99, rough) == doctest::Approx(std::pow(0.01, -0.25)).epsilon(1e-12));
    CHECK_THROWS_AS(phi(1.0, rough), domain_error);
    CHECK_THROWS_AS(phi(-0.1, rough), domain_error);
}

TEST_CASE("phi^2 integral identity on a graded 1e4-point grid") {
    // int_{r_{l-1}}^{r_l} phi^2 = (r_l - r_{l-1})^theta / theta. Midpoint rule
    // on a raw grid graded like t = r_l - D (1-u)^{2/theta}, which tames the
    // endpoint singularity (cells collapsing to zero width carry ~1e-8 of the
    // mass and are skipped).
    for (double theta : {0.3, 0.5, 0.8, 1.0}) {
        SmoothnessSpec spec({0.0, 1.5}, {theta});
        const std::size_t cells = 10000;
        std::vector<double> grid(cells + 1);
        for (std::size_t k = 0; k <= cells; ++k) {
            const double u = static_cast<double>(k) / static_cast<double>(cells);
            grid[k] = 1.5 * (1.0 - std::pow(1.0 - u, 2.0 / theta));
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < cells; ++i) {
            const double width = grid[i + 1] - grid[i];
            const double mid = 0.5 * (grid[i] + grid[i + 1]);
            if (width <= 0.0 || mid >= 1.5) continue;
            const double value = phi(mid, spec);
            acc += value * value * width;
        }
        const double exact = std::pow(1.5, theta) / theta;
        CHECK(std::abs(acc - exact) / exact < 1e-3);
    }
}

TEST_CASE("knot value depends only on the fraction k/n") {
    SmoothnessSpec spec({0.0, 1.0}, {0.4});
    const TimeNet n4 = build_theta_net(spec, 4);
    const TimeNet n8 = build_theta_net(spec, 8);
    CHECK(n4.knots[2] == doctest::Approx(n8.knots[4]).epsilon(1e-15));
}

TEST_CASE("refine and merge") {
    SUBCASE("refine splits intervals and keeps knots") {
        const TimeNet base = net_from_knots({0.0, 0.75, 1.0});
        const TimeNet fine = refine_net(base, 2);
        CHECK(fine.knots == std::vector<double>{0.0, 0.375, 0.75, 0.875, 1.0});
        CHECK(fine.refines(base));
    }
    SUBCASE("factor 1 is the identity") {
        const TimeNet base = net_from_knots({0.0, 0.5, 1.0});
        CHECK(refine_net(base, 1).knots == base.knots);
    }
    SUBCASE("two-point net") {
        CHECK(refine_net(net_from_knots({0.0, 1.0}), 2).knots ==
              std::vector<double>{0.0, 0.5, 1.0});
    }
    SUBCASE("merge dedupes") {
        const TimeNet a = net_from_knots({0.0, 0.5, 1.0});
        const TimeNet b = net_from_knots({0.0, 0.25, 0.5, 1.0});
        CHECK(merge_nets(a, b).knots == std::vector<double>{0.0, 0.25, 0.5, 1.0});
    }
}

TEST_CASE("validation failures") {
    CHECK_THROWS_AS(SmoothnessSpec({0.1, 1.0}, {0.5}), validation_error);
    CHECK_THROWS_AS(SmoothnessSpec({0.0, 1.0}, {1.5}), validation_error);
    CHECK_THROWS_AS(SmoothnessSpec({0.0, 1.0}, {0.0}), validation_error);
    CHECK_THROWS_AS(SmoothnessSpec({0.0, 1.0, 0.5}, {0.5, 0.5}), validation_error);
    CHECK_THROWS_AS(SmoothnessSpec({0.0, 1.0}, {0.5, 0.5}), validation_error);
    SmoothnessSpec ok({0.0, 1.0}, {0.5});
    CHECK_THROWS_AS(build_theta_net(ok, 0), argument_error);
    CHECK_THROWS_AS(build_uniform_net(ok, 0), argument_error);
    // Near-duplicate knots are rejected, not merged.
    CHECK_THROWS_AS(net_from_knots({0.0, 0.5, 0.5 + 1e-16, 1.0}), validation_error);
}
