#include <doctest.h>

#include <cstdio>

#include "bfnet/forward.hpp"
#include "bfnet/path_io.hpp"

using namespace bfnet;

TEST_CASE("ensemble round-trips through the binary columnar format") {
    const auto model = ForwardModel::geometric({0.05}, {0.2}, {1.0});
    const auto grid = refine_net(net_from_knots({0.0, 0.4, 1.0}), 2);
    const auto ens = simulate(model, grid, 257, 4242u, true);
    const std::string path = "bfnet_io_test.bin";
    save_ensemble(ens, path);
    const auto back = load_ensemble(path);
    std::remove(path.c_str());

    CHECK(back.n_paths() == ens.n_paths());
    CHECK(back.dimension() == ens.dimension());
    CHECK(back.master_seed() == ens.master_seed());
    CHECK(back.grid().knots == ens.grid().knots);
    REQUIRE(back.has_flow());
    for (std::size_t p = 0; p < ens.n_paths(); p += 31) {
        for (std::size_t k = 0; k < grid.num_knots(); ++k) {
            CHECK(back.state(p, k)[0] == ens.state(p, k)[0]);
            CHECK(back.flow(p, k)[0] == ens.flow(p, k)[0]);
        }
        for (std::size_t i = 0; i + 1 < grid.num_knots(); ++i)
            CHECK(back.increment(p, i)[0] == ens.increment(p, i)[0]);
    }
}

TEST_CASE("loader rejects foreign files") {
    const std::string path = "bfnet_io_garbage.bin";
    {
        FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("not a path file", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(load_ensemble(path), io_error);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_ensemble("does_not_exist.bin"), io_error);
}
