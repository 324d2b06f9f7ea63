#include <doctest.h>

#include <cmath>
#include <vector>

#include "bfnet/parallel.hpp"
#include "bfnet/rng.hpp"
#include "bfnet/stats.hpp"

using namespace bfnet;

TEST_CASE("philox4x32-10 known-answer vectors") {
    // Reference vectors from the Random123 distribution (kat_vectors).
    using namespace bfnet::philox;
    SUBCASE("zero counter, zero key") {
        Block out = philox4x32_10(Block{{0u, 0u, 0u, 0u}}, 0u, 0u);
        CHECK(out.x[0] == 0x6627e8d5u);
        CHECK(out.x[1] == 0xe169c58du);
        CHECK(out.x[2] == 0xbc57ac4cu);
        CHECK(out.x[3] == 0x9b00dbd8u);
    }
    SUBCASE("all-ones counter and key") {
        Block out = philox4x32_10(
            Block{{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}}, 0xffffffffu,
            0xffffffffu);
        CHECK(out.x[0] == 0x408f276du);
        CHECK(out.x[1] == 0x41c83b0eu);
        CHECK(out.x[2] == 0xa20bc7c6u);
        CHECK(out.x[3] == 0x6d5451fdu);
    }
    SUBCASE("pi digits vector") {
        Block out = philox4x32_10(
            Block{{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}}, 0xa4093822u,
            0x299f31d0u);
        CHECK(out.x[0] == 0xd16cfe09u);
        CHECK(out.x[1] == 0x94fdccebu);
        CHECK(out.x[2] == 0x5001e420u);
        CHECK(out.x[3] == 0x24126ea1u);
    }
}

TEST_CASE("normals are a pure function of the index tuple") {
    const CounterRng a(42u), b(42u);
    CHECK(a.normal(7, 3, 0) == b.normal(7, 3, 0));
    CHECK(a.normal(7, 3, 0) != a.normal(7, 3, 1));
    CHECK(a.normal(7, 3, 0) != a.normal(7, 4, 0));
    CHECK(a.normal(7, 3, 0) != a.normal(8, 3, 0));
    const CounterRng w(42u, NoiseStream::W), bb(42u, NoiseStream::B);
    CHECK(w.normal(7, 3, 0) != bb.normal(7, 3, 0));
}

TEST_CASE("moment sanity at 2^16 draws") {
    const CounterRng rng(20240401u);
    const std::size_t n = 1u << 16;
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = rng.normal(i, 0, 0);
    const auto mean = mean_with_se(z);
    CHECK(std::abs(mean.value) < 4.0 * mean.std_error);
    double m2 = 0.0, m4 = 0.0;
    for (double v : z) {
        m2 += v * v;
        m4 += v * v * v * v;
    }
    m2 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    // Var(z^2) = 2 for a standard normal.
    const double se_var = std::sqrt(2.0 / static_cast<double>(n));
    CHECK(std::abs(m2 - 1.0) < 4.0 * se_var);
    CHECK(std::abs(m4 - 3.0) < 5.0 * std::sqrt(96.0 / static_cast<double>(n)));
}

TEST_CASE("parallel_for chunking is independent of thread count") {
    const std::size_t n = 100000;
    std::vector<double> serial(n), pooled(n);
    setenv("BFNET_THREADS", "1", 1);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) serial[i] = std::sin(static_cast<double>(i));
    });
    setenv("BFNET_THREADS", "7", 1);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) pooled[i] = std::sin(static_cast<double>(i));
    });
    unsetenv("BFNET_THREADS");
    CHECK(serial == pooled);
}

TEST_CASE("parallel_reduce combines partials in fixed order") {
    const std::size_t n = 54321;
    auto run = [&](const char* threads) {
        setenv("BFNET_THREADS", threads, 1);
        const double out = parallel_reduce<double>(
            n, 0.0,
            [&](std::size_t lo, std::size_t hi) {
                double acc = 0.0;
                for (std::size_t i = lo; i < hi; ++i)
                    acc += 1.0 / (1.0 + static_cast<double>(i));
                return acc;
            },
            [](double a, double b) { return a + b; });
        unsetenv("BFNET_THREADS");
        return out;
    };
    const double t1 = run("1");
    const double t8 = run("8");
    CHECK(t1 == t8);
}
