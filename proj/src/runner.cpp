#include "bfnet/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace bfnet {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string net_name(NetKind kind) { return kind == NetKind::Theta ? "theta" : "uniform"; }

std::string probe_name(SmoothnessProbe probe) {
    switch (probe) {
        case SmoothnessProbe::C2:
            return "C2";
        case SmoothnessProbe::C3:
            return "C3";
        case SmoothnessProbe::C4:
            return "C4";
        case SmoothnessProbe::Mixing:
            return "mixing";
    }
    return "?";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("runner: cannot write " + path);
    out << content;
    if (!out) throw io_error("runner: short write to " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("runner: cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Probe window: s = r_l - (r_l - r_{l-1}) 2^{-j}. MC probes use j = 2..6;
// the deeper oracle window j = 2..10 is quadrature-only.
std::vector<double> probe_s_values(const SmoothnessSpec& spec, std::size_t l, int j_lo,
                                   int j_hi) {
    std::vector<double> out;
    const double a = spec.breakpoints[l - 1];
    const double b = spec.breakpoints[l];
    for (int j = j_lo; j <= j_hi; ++j) out.push_back(b - (b - a) * std::pow(2.0, -j));
    std::sort(out.begin(), out.end());
    return out;
}

struct CellRow {
    CellKey key;
    VariationReport report;
    SplineReport spline;
};

std::string cell_csv_row(const Scenario& s, const CellRow& row) {
    std::ostringstream out;
    out << kCsvSchemaVersion << "," << s.name << "," << s.scenario_hash << ","
        << kVersionString << "," << net_name(row.key.kind) << "," << row.key.n << ","
        << row.key.seed << "," << fmt(s.p) << "," << s.paths << ","
        << fmt(row.report.y_component) << "," << fmt(row.report.y_std_error) << ","
        << fmt(row.report.z_component) << "," << fmt(row.report.z_std_error) << ","
        << fmt(row.report.total) << ","
        << fmt(std::sqrt(static_cast<double>(row.key.n)) * row.report.total) << ","
        << fmt(row.spline.sup_error) << "," << fmt(row.spline.sup_error_se) << "\n";
    return out.str();
}

constexpr const char* kReportHeader =
    "schema,scenario,hash,version,net,n,seed,p,paths,y_component,y_se,z_component,z_se,"
    "total,sqrt_n_total,spline_sup,spline_se\n";
constexpr const char* kSmoothnessHeader =
    "schema,scenario,hash,version,seed,breakpoint,probe,theta_hat,theta_se,reliable,"
    "constant\n";
constexpr const char* kSlopesHeader =
    "schema,scenario,hash,version,net,metric,seed,slope,slope_se\n";

CellRow run_cell(const Scenario& s, const CellKey& key) {
    const TimeNet coarse = s.coarse_net(key.kind, key.n);
    const TimeNet fine = refine_net(coarse, s.refine_factor);
    auto ensemble =
        std::make_shared<const PathEnsemble>(simulate(s.model, fine, s.paths, key.seed));
    const BsdeSolution solution = solve(s.model, s.generator, s.terminal, fine, ensemble,
                                        s.regression, SchemeTag::Explicit);
    CellRow row;
    row.key = key;
    row.report = variation(solution, coarse, s.p);
    row.spline = spline_error(solution, coarse, s.p);
    return row;
}

struct ProbeRow {
    std::uint64_t seed = 0;
    std::size_t breakpoint = 1;
    SmoothnessEstimate estimate;
};

// One dedicated probe solve per seed: theta-net at the largest n, refined,
// with the probe times merged in so every s value is a knot.
std::vector<ProbeRow> run_probes(const Scenario& s, std::uint64_t seed) {
    std::vector<ProbeRow> rows;
    const std::size_t n_max = s.n_grid.back();
    const TimeNet coarse = s.coarse_net(NetKind::Theta, n_max);
    TimeNet fine = refine_net(coarse, s.refine_factor);
    const std::size_t L = s.smoothness.num_intervals();
    for (std::size_t l = 1; l <= L; ++l) {
        std::vector<double> knots{0.0};
        for (double v : probe_s_values(s.smoothness, l, 2, 6)) knots.push_back(v);
        knots.push_back(s.smoothness.horizon());
        fine = merge_nets(fine, net_from_knots(knots));
    }
    auto ensemble =
        std::make_shared<const PathEnsemble>(simulate(s.model, fine, s.paths, seed));
    const BsdeSolution solution = solve(s.model, s.generator, s.terminal, fine, ensemble,
                                        s.regression, SchemeTag::Explicit);

    for (std::size_t l = 1; l <= L; ++l) {
        const double r_l = s.smoothness.breakpoints[l];
        const double span = r_l - s.smoothness.breakpoints[l - 1];
        const auto s_values = probe_s_values(s.smoothness, l, 2, 6);

        const auto c4_samples = c4_residual_probe(solution, r_l, s_values, s.p);
        rows.push_back({seed, l, smoothness_from_residuals(c4_samples, r_l)});

        auto c3 = y_increment_exponent(solution, r_l, s_values, s.p);
        rows.push_back({seed, l, c3});

        rows.push_back(
            {seed, l,
             z_blowup_exponent(solution, r_l, span * std::pow(2.0, -6), span * 0.25, s.p)});

        const auto mix =
            mixing_distance(s.model, s.terminal, fine, s_values, r_l, s.paths, seed, s.p);
        std::vector<ResidualSample> mix_samples;
        for (const auto& m : mix) mix_samples.push_back({m.t, m.value, m.std_error});
        auto mix_est = smoothness_from_residuals(mix_samples, r_l);
        mix_est.probe = SmoothnessProbe::Mixing;
        rows.push_back({seed, l, mix_est});
    }
    return rows;
}

} // namespace

std::string CellKey::id() const {
    std::ostringstream out;
    out << net_name(kind) << "_n" << n << "_s" << seed;
    return out.str();
}

RunOutputs run_scenario(const Scenario& scenario_in, const std::string& out_dir, bool resume) {
    const auto start = std::chrono::steady_clock::now();
    Scenario scenario = scenario_in;

    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/cells");

    // "estimate" smoothness: fit theta from the mixing probe on the first
    // seed before building any nets.
    if (scenario.estimate_theta) {
        const std::size_t L = scenario.smoothness.num_intervals();
        std::vector<double> theta(L);
        const TimeNet grid =
            refine_net(build_uniform_net(scenario.smoothness, 16), 1);
        for (std::size_t l = 1; l <= L; ++l) {
            const double r_l = scenario.smoothness.breakpoints[l];
            const auto s_values = probe_s_values(scenario.smoothness, l, 2, 6);
            TimeNet probe_grid = grid;
            std::vector<double> knots{0.0};
            for (double v : s_values) knots.push_back(v);
            knots.push_back(scenario.smoothness.horizon());
            probe_grid = merge_nets(probe_grid, net_from_knots(knots));
            const auto mix = mixing_distance(scenario.model, scenario.terminal, probe_grid,
                                             s_values, r_l, scenario.paths,
                                             scenario.seeds.front(), scenario.p);
            std::vector<ResidualSample> samples;
            for (const auto& m : mix) samples.push_back({m.t, m.value, m.std_error});
            const auto est = smoothness_from_residuals(samples, r_l);
            theta[l - 1] = std::min(1.0, std::max(0.05, est.theta_hat));
        }
        scenario.smoothness = SmoothnessSpec(scenario.smoothness.breakpoints, theta);
        scenario.estimate_theta = false;
    }

    // Cells in deterministic order.
    std::vector<CellKey> cells;
    for (NetKind kind : scenario.net_kinds)
        for (std::size_t n : scenario.n_grid)
            for (std::uint64_t seed : scenario.seeds) cells.push_back({kind, n, seed});

    nlohmann::json manifest;
    manifest["schema"] = kCsvSchemaVersion;
    manifest["version"] = kVersionString;
    manifest["scenario"] = scenario.name;
    manifest["hash"] = scenario.scenario_hash;
    manifest["config"] = scenario_in.to_config().serialize();
    manifest["out_dir"] = out_dir;
    manifest["cells"] = nlohmann::json::array();

    std::map<std::string, std::string> shard_rows;
    for (const CellKey& key : cells) {
        const std::string shard = out_dir + "/cells/" + key.id() + ".csv";
        if (!(resume && fs::exists(shard))) {
            const CellRow row = run_cell(scenario, key);
            write_file(shard, cell_csv_row(scenario, row));
            std::fprintf(stderr, "[cell] %s done\n", key.id().c_str());
        } else {
            std::fprintf(stderr, "[cell] %s reused\n", key.id().c_str());
        }
        shard_rows[key.id()] = read_file(shard);
        manifest["cells"].push_back({{"net", net_name(key.kind)},
                                     {"n", key.n},
                                     {"seed", key.seed},
                                     {"shard", shard}});
    }

    // report.csv: header plus shards in cell order.
    std::ostringstream report;
    report << kReportHeader;
    for (const CellKey& key : cells) report << shard_rows[key.id()];

    // Smoothness probes per seed.
    std::ostringstream smoothness;
    smoothness << kSmoothnessHeader;
    for (std::uint64_t seed : scenario.seeds) {
        for (const ProbeRow& row : run_probes(scenario, seed)) {
            smoothness << kCsvSchemaVersion << "," << scenario.name << ","
                       << scenario.scenario_hash << "," << kVersionString << "," << seed << ","
                       << row.breakpoint << "," << probe_name(row.estimate.probe) << ","
                       << fmt(row.estimate.theta_hat) << "," << fmt(row.estimate.theta_se)
                       << "," << (row.estimate.reliable ? "1" : "0") << ","
                       << fmt(row.estimate.constant_estimate) << "\n";
        }
        std::fprintf(stderr, "[probes] seed %llu done\n",
                     static_cast<unsigned long long>(seed));
    }

    // Rate slopes per (net, seed, metric) when the n grid is large enough.
    std::ostringstream slopes;
    slopes << kSlopesHeader;
    if (scenario.n_grid.size() >= 3) {
        for (NetKind kind : scenario.net_kinds) {
            for (std::uint64_t seed : scenario.seeds) {
                std::vector<double> ns, totals, splines;
                for (std::size_t n : scenario.n_grid) {
                    const CellKey key{kind, n, seed};
                    // shard fields: ...,total(13),sqrt_n_total(14),spline_sup(15),...
                    const auto fields = split_list(shard_rows[key.id()]);
                    ns.push_back(static_cast<double>(n));
                    totals.push_back(std::stod(fields[13]));
                    splines.push_back(std::stod(fields[15]));
                }
                const auto fit_total = rate_slope(ns, totals);
                const auto fit_spline = rate_slope(ns, splines);
                slopes << kCsvSchemaVersion << "," << scenario.name << ","
                       << scenario.scenario_hash << "," << kVersionString << ","
                       << net_name(kind) << ",total_variation," << seed << ","
                       << fmt(fit_total.slope) << "," << fmt(fit_total.slope_se) << "\n";
                slopes << kCsvSchemaVersion << "," << scenario.name << ","
                       << scenario.scenario_hash << "," << kVersionString << ","
                       << net_name(kind) << ",spline_sup," << seed << ","
                       << fmt(fit_spline.slope) << "," << fmt(fit_spline.slope_se) << "\n";
            }
        }
    }

    RunOutputs outputs;
    outputs.out_dir = out_dir;
    outputs.report_csv = out_dir + "/report.csv";
    outputs.smoothness_csv = out_dir + "/smoothness.csv";
    outputs.slopes_csv = out_dir + "/slopes.csv";
    outputs.manifest_json = out_dir + "/manifest.json";
    write_file(outputs.report_csv, report.str());
    write_file(outputs.smoothness_csv, smoothness.str());
    write_file(outputs.slopes_csv, slopes.str());

    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    manifest["wall_clock_sec"] = elapsed.count();
    manifest["outputs"] = {{"report", outputs.report_csv},
                           {"smoothness", outputs.smoothness_csv},
                           {"slopes", outputs.slopes_csv}};
    write_file(outputs.manifest_json, manifest.dump(2) + "\n");
    return outputs;
}

RunOutputs run_from_manifest(const std::string& manifest_path, bool resume) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("runner: bad manifest: ") + e.what());
    }
    if (!manifest.contains("config") || !manifest.contains("out_dir"))
        throw validation_error("runner: manifest lacks config/out_dir");
    const Scenario scenario =
        Scenario::from_config(Config::parse(manifest["config"].get<std::string>()));
    return run_scenario(scenario, manifest["out_dir"].get<std::string>(), resume);
}

} // namespace bfnet
