#include "bfnet/path_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "path files are little-endian; byte swapping is not implemented");

namespace bfnet {

namespace {

constexpr char kMagic[6] = {'B', 'F', 'N', 'E', 'T', '1'};
constexpr std::uint32_t kFlagFlow = 1u;

template <typename T>
void write_pod(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
}

void write_block(std::ofstream& out, const std::vector<double>& block) {
    out.write(reinterpret_cast<const char*>(block.data()),
              static_cast<std::streamsize>(block.size() * sizeof(double)));
}

void read_block(std::ifstream& in, std::vector<double>& block) {
    in.read(reinterpret_cast<char*>(block.data()),
            static_cast<std::streamsize>(block.size() * sizeof(double)));
}

} // namespace

void save_ensemble(const PathEnsemble& ens, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("save_ensemble: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ens.dimension()));
    write_pod<std::uint64_t>(out, ens.n_paths());
    write_pod<std::uint64_t>(out, ens.grid().num_knots());
    write_pod<std::uint64_t>(out, ens.master_seed());
    write_pod<std::uint32_t>(out, ens.has_flow() ? kFlagFlow : 0u);
    write_block(out, ens.grid().knots);

    const std::size_t knots = ens.grid().num_knots();
    const std::size_t d = ens.dimension();
    std::vector<double> row(ens.n_paths() * d);
    for (std::size_t k = 0; k < knots; ++k) {
        for (std::size_t p = 0; p < ens.n_paths(); ++p) {
            auto s = ens.state(p, k);
            std::copy(s.begin(), s.end(), row.begin() + static_cast<std::ptrdiff_t>(p * d));
        }
        write_block(out, row);
    }
    for (std::size_t i = 0; i + 1 < knots; ++i) {
        for (std::size_t p = 0; p < ens.n_paths(); ++p) {
            auto s = ens.increment(p, i);
            std::copy(s.begin(), s.end(), row.begin() + static_cast<std::ptrdiff_t>(p * d));
        }
        write_block(out, row);
    }
    if (ens.has_flow()) {
        std::vector<double> frow(ens.n_paths() * d * d);
        for (std::size_t k = 0; k < knots; ++k) {
            for (std::size_t p = 0; p < ens.n_paths(); ++p) {
                auto f = ens.flow(p, k);
                std::copy(f.begin(), f.end(),
                          frow.begin() + static_cast<std::ptrdiff_t>(p * d * d));
            }
            write_block(out, frow);
        }
    }
    if (!out) throw io_error("save_ensemble: short write to " + path);
}

PathEnsemble load_ensemble(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("load_ensemble: cannot open " + path);
    char magic[6];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw io_error("load_ensemble: bad magic in " + path);
    const auto d = read_pod<std::uint32_t>(in);
    const auto n_paths = read_pod<std::uint64_t>(in);
    const auto knots = read_pod<std::uint64_t>(in);
    const auto seed = read_pod<std::uint64_t>(in);
    const auto flags = read_pod<std::uint32_t>(in);
    std::vector<double> grid_knots(knots);
    read_block(in, grid_knots);
    if (!in) throw io_error("load_ensemble: truncated header in " + path);

    PathEnsemble ens(net_from_knots(std::move(grid_knots)), n_paths, d, seed,
                     (flags & kFlagFlow) != 0);
    std::vector<double> row(n_paths * d);
    for (std::size_t k = 0; k < knots; ++k) {
        read_block(in, row);
        for (std::size_t p = 0; p < n_paths; ++p) {
            auto s = ens.mutable_state(p, k);
            std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(p * d), d, s.begin());
        }
    }
    for (std::size_t i = 0; i + 1 < knots; ++i) {
        read_block(in, row);
        for (std::size_t p = 0; p < n_paths; ++p) {
            auto s = ens.mutable_increment(p, i);
            std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(p * d), d, s.begin());
        }
    }
    if ((flags & kFlagFlow) != 0) {
        std::vector<double> frow(n_paths * d * d);
        for (std::size_t k = 0; k < knots; ++k) {
            read_block(in, frow);
            for (std::size_t p = 0; p < n_paths; ++p) {
                auto f = ens.mutable_flow(p, k);
                std::copy_n(frow.begin() + static_cast<std::ptrdiff_t>(p * d * d), d * d,
                            f.begin());
            }
        }
    }
    if (!in) throw io_error("load_ensemble: truncated body in " + path);
    return ens;
}

namespace {
constexpr char kSolMagic[6] = {'B', 'F', 'S', 'O', 'L', '1'};
}

void save_solution(const BsdeSolution& sol, const std::string& prefix) {
    const std::string bin = prefix + ".sol.bin";
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw io_error("save_solution: cannot open " + bin);
    out.write(kSolMagic, sizeof(kSolMagic));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(sol.z_dimension()));
    write_pod<std::uint64_t>(out, sol.n_paths());
    write_pod<std::uint64_t>(out, sol.grid().num_knots());
    write_pod<std::uint64_t>(out, sol.ensemble().master_seed());
    write_pod<std::uint32_t>(out, sol.scheme() == SchemeTag::Implicit ? 1u : 0u);
    write_block(out, sol.grid().knots);
    std::vector<double> row(sol.n_paths());
    for (std::size_t k = 0; k < sol.grid().num_knots(); ++k) {
        for (std::size_t p = 0; p < sol.n_paths(); ++p) row[p] = sol.y(p, k);
        write_block(out, row);
    }
    std::vector<double> zrow(sol.n_paths() * sol.z_dimension());
    for (std::size_t i = 0; i < sol.grid().num_intervals(); ++i) {
        for (std::size_t p = 0; p < sol.n_paths(); ++p)
            for (std::size_t c = 0; c < sol.z_dimension(); ++c)
                zrow[p * sol.z_dimension() + c] = sol.z(p, i, c);
        write_block(out, zrow);
    }
    if (!out) throw io_error("save_solution: short write to " + bin);

    // JSON diagnostics sidecar, written by hand to keep this module light.
    std::ofstream diag(prefix + ".diag.json");
    if (!diag) throw io_error("save_solution: cannot open " + prefix + ".diag.json");
    auto dump_array = [&diag](const char* name, const std::vector<double>& values,
                              bool last = false) {
        diag << "  \"" << name << "\": [";
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) diag << ", ";
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
            diag << buf;
        }
        diag << "]" << (last ? "\n" : ",\n");
    };
    diag << "{\n";
    diag << "  \"scheme\": \"" << (sol.scheme() == SchemeTag::Implicit ? "implicit" : "explicit")
         << "\",\n";
    diag << "  \"paths\": " << sol.n_paths() << ",\n";
    diag << "  \"max_implicit_iterations\": " << sol.diagnostics().max_implicit_iterations
         << ",\n";
    dump_array("z_residual_norm", sol.diagnostics().z_residual_norm);
    dump_array("y_residual_norm", sol.diagnostics().y_residual_norm);
    dump_array("condition_number", sol.diagnostics().condition_number, true);
    diag << "}\n";
}

LoadedSolution load_solution(const std::string& prefix) {
    const std::string bin = prefix + ".sol.bin";
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw io_error("load_solution: cannot open " + bin);
    char magic[6];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kSolMagic, sizeof(kSolMagic)) != 0)
        throw io_error("load_solution: bad magic in " + bin);
    LoadedSolution sol;
    sol.z_dimension = read_pod<std::uint32_t>(in);
    sol.n_paths = read_pod<std::uint64_t>(in);
    const auto knots = read_pod<std::uint64_t>(in);
    read_pod<std::uint64_t>(in); // seed, informational
    read_pod<std::uint32_t>(in); // scheme flag
    std::vector<double> grid_knots(knots);
    read_block(in, grid_knots);
    sol.grid = net_from_knots(std::move(grid_knots));
    sol.y.resize(knots * sol.n_paths);
    in.read(reinterpret_cast<char*>(sol.y.data()),
            static_cast<std::streamsize>(sol.y.size() * sizeof(double)));
    sol.z.resize((knots - 1) * sol.n_paths * sol.z_dimension);
    in.read(reinterpret_cast<char*>(sol.z.data()),
            static_cast<std::streamsize>(sol.z.size() * sizeof(double)));
    if (!in) throw io_error("load_solution: truncated body in " + bin);
    return sol;
}

} // namespace bfnet
