// Command-line harness: nets | oracle | simulate | solve | analyze | run.
// Exit codes: 0 success, 2 validation/argument, 3 numeric failure, 4 I/O.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "bfnet/analysis.hpp"
#include "bfnet/gaussian_oracle.hpp"
#include "bfnet/path_io.hpp"
#include "bfnet/runner.hpp"

using namespace bfnet;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw io_error("cannot write " + out_path);
    out << text;
}

std::string knots_csv(const TimeNet& net) {
    std::ostringstream text;
    text << "knots\n";
    for (double t : net.knots) text << fmt(t) << "\n";
    return text.str();
}

std::string knots_json(const TimeNet& net) {
    std::ostringstream text;
    text << "[";
    for (std::size_t i = 0; i < net.knots.size(); ++i) {
        if (i) text << ", ";
        text << "\"" << fmt(net.knots[i]) << "\"";
    }
    text << "]\n";
    return text.str();
}

struct CommonFlags {
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--seed", flags.seed, "random seed");
    cmd->add_option("--out", flags.out, "output file (stdout when omitted)");
    cmd->add_option("--format", flags.format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
}

TimeNet grid_from_flags(const std::vector<double>& breakpoints,
                        const std::vector<double>& theta, std::size_t n, bool uniform,
                        std::size_t refine) {
    const SmoothnessSpec spec(breakpoints, theta);
    const TimeNet coarse = uniform ? build_uniform_net(spec, n) : build_theta_net(spec, n);
    return refine_net(coarse, refine);
}

int dispatch(int argc, char** argv) {
    CLI::App app{"fractional-smoothness BSDE experiment harness"};
    app.require_subcommand(1);

    // ---- nets ----------------------------------------------------------
    auto* nets = app.add_subcommand("nets", "print a theta-adapted or uniform time-net");
    std::vector<double> net_breaks{0.0, 1.0};
    std::vector<double> net_theta{1.0};
    std::size_t net_n = 4;
    std::size_t net_refine = 1;
    bool net_uniform = false;
    CommonFlags net_flags;
    nets->add_option("--breakpoints", net_breaks, "r_0,...,r_L")->delimiter(',');
    nets->add_option("--theta", net_theta, "theta_1,...,theta_L")->delimiter(',');
    nets->add_option("--n", net_n, "subintervals per breakpoint interval");
    nets->add_option("--refine", net_refine, "refinement factor");
    nets->add_flag("--uniform", net_uniform, "equidistant comparator net");
    add_common(nets, net_flags);
    nets->callback([&]() {
        const TimeNet net =
            grid_from_flags(net_breaks, net_theta, net_n, net_uniform, net_refine);
        emit(net_flags.format == "json" ? knots_json(net) : knots_csv(net), net_flags.out);
    });

    // ---- oracle ---------------------------------------------------------
    auto* oracle = app.add_subcommand("oracle", "exact Gaussian oracle (X = W, f = 0, d = 1)");
    oracle->require_subcommand(1);
    std::string oracle_g = "indicator:0";
    CommonFlags oracle_flags;

    auto* residual = oracle->add_subcommand("residual", "|| g(W_1) - E(g(W_1)|F_t) ||_p");
    double res_t = 0.5, res_p = 2.0;
    residual->add_option("--g", oracle_g, "linear|indicator:K|power:a|hermite:n");
    residual->add_option("--t", res_t, "conditioning time in [0, 1)")->required();
    residual->add_option("--p", res_p, "norm order >= 2");
    add_common(residual, oracle_flags);
    residual->callback([&]() {
        const auto g = parse_terminal_tag(oracle_g);
        const auto r = cond_residual_norm(g, res_t, res_p);
        if (oracle_flags.format == "json") {
            emit("{\"t\": " + fmt(res_t) + ", \"p\": " + fmt(res_p) + ", \"value\": " +
                     fmt(r.value) + ", \"error\": " + fmt(r.error_estimate) + "}\n",
                 oracle_flags.out);
        } else {
            emit("t,p,value,error\n" + fmt(res_t) + "," + fmt(res_p) + "," + fmt(r.value) +
                     "," + fmt(r.error_estimate) + "\n",
                 oracle_flags.out);
        }
    });

    auto* expand_cmd = oracle->add_subcommand("expand", "Hermite coefficients of g");
    std::size_t exp_order = 64, exp_nodes = 256;
    expand_cmd->add_option("--g", oracle_g, "terminal tag");
    expand_cmd->add_option("--order", exp_order, "truncation order N");
    expand_cmd->add_option("--nodes", exp_nodes, "quadrature density (>= 2N)");
    add_common(expand_cmd, oracle_flags);
    expand_cmd->callback([&]() {
        const auto exp = expand(parse_terminal_tag(oracle_g), exp_order, exp_nodes);
        std::ostringstream text;
        if (oracle_flags.format == "json") {
            text << "{\"order\": " << exp.order << ", \"tail_mass\": " << fmt(exp.tail_mass)
                 << ", \"coefficients\": [";
            for (std::size_t i = 0; i < exp.coefficients.size(); ++i) {
                if (i) text << ", ";
                text << fmt(exp.coefficients[i]);
            }
            text << "]}\n";
        } else {
            text << "n,alpha\n";
            for (std::size_t i = 0; i < exp.coefficients.size(); ++i)
                text << i << "," << fmt(exp.coefficients[i]) << "\n";
        }
        emit(text.str(), oracle_flags.out);
    });

    auto* zinc = oracle->add_subcommand("zincrement", "|| Z_t - Z_s ||_2 from the series");
    double zi_s = 0.0, zi_t = 0.5;
    std::size_t zi_order = 1000;
    zinc->add_option("--g", oracle_g, "terminal tag");
    zinc->add_option("--s", zi_s, "left time")->required();
    zinc->add_option("--t", zi_t, "right time")->required();
    zinc->add_option("--order", zi_order, "series truncation");
    add_common(zinc, oracle_flags);
    zinc->callback([&]() {
        const auto g = parse_terminal_tag(oracle_g);
        const auto exp = g.tag() == TerminalFunction1D::Tag::Indicator
                             ? indicator_expansion(g.strike(), zi_order)
                             : expand(g, std::min<std::size_t>(zi_order, 128), 256);
        emit("s,t,value\n" + fmt(zi_s) + "," + fmt(zi_t) + "," +
                 fmt(z_increment_l2(exp, zi_s, zi_t)) + "\n",
             oracle_flags.out);
    });

    auto* znorm = oracle->add_subcommand("znorm", "|| Z_t ||_2 from the series");
    double zn_t = 0.5;
    std::size_t zn_order = 100000;
    znorm->add_option("--g", oracle_g, "terminal tag");
    znorm->add_option("--t", zn_t, "time in [0, 1)")->required();
    znorm->add_option("--order", zn_order, "series truncation");
    add_common(znorm, oracle_flags);
    znorm->callback([&]() {
        const auto g = parse_terminal_tag(oracle_g);
        const auto exp = g.tag() == TerminalFunction1D::Tag::Indicator
                             ? indicator_expansion(g.strike(), zn_order)
                             : expand(g, std::min<std::size_t>(zn_order, 128), 256);
        emit("t,value\n" + fmt(zn_t) + "," + fmt(z_norm_l2(exp, zn_t)) + "\n",
             oracle_flags.out);
    });

    auto* heat = oracle->add_subcommand("heat", "F(t, x), dF, d2F by kernel quadrature");
    double hk_t = 0.5, hk_x = 0.0;
    heat->add_option("--g", oracle_g, "terminal tag");
    heat->add_option("--t", hk_t, "time in [0, 1]")->required();
    heat->add_option("--x", hk_x, "state");
    add_common(heat, oracle_flags);
    heat->callback([&]() {
        const auto hk = heat_kernel_F(parse_terminal_tag(oracle_g), hk_t, hk_x);
        emit("t,x,F,dF,d2F\n" + fmt(hk_t) + "," + fmt(hk_x) + "," + fmt(hk.value) + "," +
                 fmt(hk.gradient) + "," + fmt(hk.hessian) + "\n",
             oracle_flags.out);
    });

    // ---- simulate --------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "simulate forward paths to a binary file");
    std::string sim_model = "brownian";
    double sim_x0 = 0.0, sim_mu = 0.05, sim_vol = 0.2;
    std::vector<double> sim_breaks{0.0, 1.0};
    std::vector<double> sim_theta{1.0};
    std::size_t sim_n = 8, sim_refine = 1, sim_paths = 4096;
    bool sim_uniform = false, sim_flow = false;
    std::string save_paths;
    CommonFlags sim_flags;
    sim->add_option("--model", sim_model, "brownian|arithmetic|geometric|ornstein_uhlenbeck");
    sim->add_option("--x0", sim_x0, "start state");
    sim->add_option("--mu", sim_mu, "drift rate (geometric/arithmetic)");
    sim->add_option("--vol", sim_vol, "volatility");
    sim->add_option("--breakpoints", sim_breaks, "r_0,...,r_L")->delimiter(',');
    sim->add_option("--theta", sim_theta, "theta per interval")->delimiter(',');
    sim->add_option("--n", sim_n, "subintervals per breakpoint interval");
    sim->add_option("--refine", sim_refine, "refinement factor");
    sim->add_flag("--uniform", sim_uniform, "uniform net");
    sim->add_option("--paths", sim_paths, "path count");
    sim->add_flag("--with-flow", sim_flow, "simulate the stochastic flow too");
    sim->add_option("--save-paths", save_paths, "output .bin file")->required();
    add_common(sim, sim_flags);
    sim->callback([&]() {
        ForwardModel model = ForwardModel::brownian(1, {sim_x0});
        if (sim_model == "geometric")
            model = ForwardModel::geometric({sim_mu}, {sim_vol}, {sim_x0 == 0.0 ? 1.0 : sim_x0});
        else if (sim_model == "arithmetic")
            model = ForwardModel::arithmetic({sim_mu}, {sim_vol}, {sim_x0});
        else if (sim_model == "ornstein_uhlenbeck")
            model = ForwardModel::ornstein_uhlenbeck({1.0}, {sim_mu}, {sim_vol}, {sim_x0});
        else if (sim_model != "brownian")
            throw validation_error("simulate: unknown model '" + sim_model + "'");
        const TimeNet grid =
            grid_from_flags(sim_breaks, sim_theta, sim_n, sim_uniform, sim_refine);
        save_ensemble(simulate(model, grid, sim_paths, sim_flags.seed, sim_flow), save_paths);
        std::fprintf(stderr, "saved %zu paths on %zu knots to %s\n", sim_paths,
                     grid.num_knots(), save_paths.c_str());
    });

    // ---- solve -----------------------------------------------------------
    auto* solve_cmd = app.add_subcommand("solve", "regression Monte Carlo backward solve");
    std::string load_paths, solve_terminal = "linear", solve_gen = "zero",
                solve_basis = "global_poly", solve_scheme = "explicit", solve_prefix = "solution";
    double solve_gen_c = 0.5;
    std::size_t solve_degree = 3, solve_bins = 32, solve_order = 3;
    CommonFlags solve_flags;
    solve_cmd->add_option("--load-paths", load_paths, "ensemble .bin file")->required();
    solve_cmd->add_option("--terminal", solve_terminal, "terminal tag");
    solve_cmd->add_option("--generator", solve_gen, "zero|linear");
    solve_cmd->add_option("--c", solve_gen_c, "linear generator coefficient");
    solve_cmd->add_option("--basis", solve_basis, "global_poly|piecewise_linear|hermite");
    solve_cmd->add_option("--degree", solve_degree, "polynomial degree");
    solve_cmd->add_option("--bins", solve_bins, "piecewise-linear cells");
    solve_cmd->add_option("--order", solve_order, "hermite order");
    solve_cmd->add_option("--scheme", solve_scheme, "explicit|implicit")
        ->check(CLI::IsMember({"explicit", "implicit"}));
    solve_cmd->add_option("--prefix", solve_prefix, "output prefix (.sol.bin, .diag.json)");
    add_common(solve_cmd, solve_flags);
    solve_cmd->callback([&]() {
        auto ens = std::make_shared<const PathEnsemble>(load_ensemble(load_paths));
        const ForwardModel model = ForwardModel::brownian(1); // model metadata not persisted
        RegressionConfig reg;
        if (solve_basis == "piecewise_linear")
            reg.basis = RegressionConfig::Basis::PiecewiseLinear;
        else if (solve_basis == "hermite")
            reg.basis = RegressionConfig::Basis::Hermite;
        reg.degree = solve_degree;
        reg.bins = solve_bins;
        reg.order = solve_order;
        const Generator gen =
            solve_gen == "linear" ? Generator::linear(solve_gen_c) : Generator::zero();
        const auto term = TerminalCondition::terminal_1d(parse_terminal_tag(solve_terminal),
                                                         ens->grid().horizon());
        const auto sol = solve(model, gen, term, ens->grid(), ens, reg,
                               solve_scheme == "implicit" ? SchemeTag::Implicit
                                                          : SchemeTag::Explicit);
        save_solution(sol, solve_prefix);
        std::fprintf(stderr, "solved %zu paths on %zu knots; wrote %s.sol.bin\n",
                     sol.n_paths(), sol.grid().num_knots(), solve_prefix.c_str());
    });

    // ---- analyze ----------------------------------------------------------
    auto* analyze = app.add_subcommand("analyze", "fits on tabulated results");
    analyze->require_subcommand(1);
    CommonFlags an_flags;

    auto* slope_cmd = analyze->add_subcommand("slope", "log-log rate slope of value vs n");
    std::string slope_in;
    slope_cmd->add_option("--in", slope_in, "CSV with header and columns n,value")->required();
    add_common(slope_cmd, an_flags);
    slope_cmd->callback([&]() {
        std::ifstream in(slope_in);
        if (!in) throw io_error("analyze slope: cannot open " + slope_in);
        std::string line;
        std::getline(in, line); // header
        std::vector<double> ns, values;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto fields = split_list(line);
            if (fields.size() < 2)
                throw validation_error("analyze slope: need columns n,value");
            ns.push_back(std::stod(fields[0]));
            values.push_back(std::stod(fields[1]));
        }
        const auto fit = rate_slope(ns, values);
        emit("slope,slope_se\n" + fmt(fit.slope) + "," + fmt(fit.slope_se) + "\n",
             an_flags.out);
    });

    auto* resfit = analyze->add_subcommand("residualfit", "theta from (s, residual) samples");
    std::string resfit_in;
    double resfit_rl = 1.0;
    resfit->add_option("--in", resfit_in, "CSV with header and columns s,value")->required();
    resfit->add_option("--rl", resfit_rl, "breakpoint r_l");
    add_common(resfit, an_flags);
    resfit->callback([&]() {
        std::ifstream in(resfit_in);
        if (!in) throw io_error("analyze residualfit: cannot open " + resfit_in);
        std::string line;
        std::getline(in, line);
        std::vector<ResidualSample> samples;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto fields = split_list(line);
            if (fields.size() < 2)
                throw validation_error("analyze residualfit: need columns s,value");
            samples.push_back({std::stod(fields[0]), std::stod(fields[1]), 0.0});
        }
        const auto est = smoothness_from_residuals(samples, resfit_rl);
        emit("theta_hat,theta_se,reliable\n" + fmt(est.theta_hat) + "," + fmt(est.theta_se) +
                 "," + (est.reliable ? "1" : "0") + "\n",
             an_flags.out);
    });

    // ---- run ---------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "execute a scenario config");
    std::string run_config, run_preset, run_manifest, run_out = "out";
    bool run_resume = false;
    CommonFlags run_flags;
    run_cmd->add_option("--config", run_config, "scenario config file");
    run_cmd->add_option("--preset", run_preset, "built-in scenario preset");
    run_cmd->add_option("--manifest", run_manifest, "re-run a previous manifest");
    run_cmd->add_option("--out-dir", run_out, "output directory");
    run_cmd->add_flag("--resume", run_resume, "reuse existing cell shards");
    add_common(run_cmd, run_flags);
    run_cmd->callback([&]() {
        RunOutputs outputs;
        if (!run_manifest.empty()) {
            outputs = run_from_manifest(run_manifest, run_resume);
        } else {
            Config cfg;
            if (!run_preset.empty())
                cfg = Config::parse(preset_config(run_preset));
            else if (!run_config.empty())
                cfg = Config::load(run_config);
            else
                throw validation_error("run: need --config, --preset, or --manifest");
            outputs = run_scenario(Scenario::from_config(cfg), run_out, run_resume);
        }
        std::cout << "report: " << outputs.report_csv << "\n"
                  << "smoothness: " << outputs.smoothness_csv << "\n"
                  << "slopes: " << outputs.slopes_csv << "\n"
                  << "manifest: " << outputs.manifest_json << "\n";
    });

    auto* presets = app.add_subcommand("presets", "list built-in scenario presets");
    presets->callback([&]() {
        for (const auto& name : preset_names()) std::cout << name << "\n";
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const argument_error& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return 2;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
