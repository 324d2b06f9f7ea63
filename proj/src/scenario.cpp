#include "bfnet/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace bfnet {

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_doubles(const std::vector<double>& values) {
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out << ",";
        out << format_double(values[i]);
    }
    return out.str();
}

} // namespace

TerminalFunction1D parse_terminal_tag(const std::string& tag) {
    const auto colon = tag.find(':');
    const std::string head = tag.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : tag.substr(colon + 1);
    auto need_arg = [&]() {
        if (arg.empty())
            throw validation_error("terminal tag '" + tag + "' needs a parameter after ':'");
        return std::stod(arg);
    };
    if (head == "linear") return TerminalFunction1D::linear();
    if (head == "indicator") return TerminalFunction1D::indicator(need_arg());
    if (head == "power") return TerminalFunction1D::power(need_arg());
    if (head == "hermite") {
        const double v = need_arg();
        if (v < 0.0 || v != std::floor(v))
            throw validation_error("terminal tag '" + tag + "': order must be an integer");
        return TerminalFunction1D::hermite(static_cast<unsigned>(v));
    }
    throw validation_error("unknown terminal tag '" + tag +
                           "' (expected linear|indicator:K|power:a|hermite:n)");
}

Scenario Scenario::from_config(const Config& config) {
    Scenario s;
    s.name = config.get_or("scenario", "name", "scenario");
    s.p = config.get_double_or("scenario", "p", 2.0);
    if (s.p < 2.0) throw validation_error("scenario.p must be >= 2");
    s.paths = config.get_size_or("scenario", "paths", 1u << 12);
    if (s.paths < (1u << 10)) throw validation_error("scenario.paths must be >= 1024");

    s.seeds.clear();
    for (const auto& item : split_list(config.get_or("scenario", "seeds", "1")))
        s.seeds.push_back(static_cast<std::uint64_t>(std::stoull(item)));
    if (s.seeds.empty()) throw validation_error("scenario.seeds must not be empty");

    s.n_grid.clear();
    for (double v : config.get_doubles("scenario", "n")) {
        if (v < 1.0 || v != std::floor(v))
            throw validation_error("scenario.n entries must be positive integers");
        s.n_grid.push_back(static_cast<std::size_t>(v));
    }

    s.net_kinds.clear();
    for (const auto& kind : split_list(config.get_or("scenario", "nets", "theta"))) {
        if (kind == "theta")
            s.net_kinds.push_back(NetKind::Theta);
        else if (kind == "uniform")
            s.net_kinds.push_back(NetKind::Uniform);
        else
            throw validation_error("scenario.nets: unknown net kind '" + kind + "'");
    }
    s.refine_factor = config.get_size_or("scenario", "refine", 4);
    if (s.refine_factor < 1) throw validation_error("scenario.refine must be >= 1");

    // Smoothness block: breakpoints plus either numeric thetas or "estimate".
    const std::vector<double> breaks = config.get_doubles("smoothness", "breakpoints");
    const std::string theta_raw = config.get("smoothness", "theta");
    std::vector<double> theta;
    if (theta_raw == "estimate") {
        s.estimate_theta = true;
        theta.assign(breaks.size() - 1, 1.0);
    } else {
        for (const auto& item : split_list(theta_raw)) {
            const double v = std::stod(item);
            if (!(v > 0.0) || !(v <= 1.0))
                throw validation_error("smoothness.theta: every entry must lie in (0, 1]");
            theta.push_back(v);
        }
    }
    s.smoothness = SmoothnessSpec(breaks, theta);

    if (config.has("scenario", "theta_prime")) {
        std::vector<double> tp = config.get_doubles("scenario", "theta_prime");
        if (tp.size() == 1 && s.smoothness.num_intervals() > 1)
            tp.assign(s.smoothness.num_intervals(), tp[0]);
        if (tp.size() != s.smoothness.num_intervals())
            throw validation_error("scenario.theta_prime: need one value per interval");
        for (double v : tp)
            if (!(v > 0.0) || !(v <= 1.0))
                throw validation_error("scenario.theta_prime: entries must lie in (0, 1]");
        s.theta_prime = tp;
    }

    // Model block (d = 1 surface; richer models go through the library API).
    const std::string kind = config.get_or("model", "kind", "brownian");
    const double x0 = config.get_double_or("model", "x0", kind == "geometric" ? 1.0 : 0.0);
    if (kind == "brownian") {
        s.model = ForwardModel::brownian(1, {x0});
    } else if (kind == "arithmetic") {
        s.model = ForwardModel::arithmetic({config.get_double_or("model", "b", 0.0)},
                                           {config.get_double_or("model", "sigma", 1.0)}, {x0});
    } else if (kind == "geometric") {
        s.model = ForwardModel::geometric({config.get_double_or("model", "mu", 0.05)},
                                          {config.get_double_or("model", "vol", 0.2)}, {x0});
    } else if (kind == "ornstein_uhlenbeck") {
        s.model = ForwardModel::ornstein_uhlenbeck(
            {config.get_double_or("model", "kappa", 1.0)},
            {config.get_double_or("model", "mean", 0.0)},
            {config.get_double_or("model", "vol", 1.0)}, {x0});
    } else {
        throw validation_error("model.kind: unknown kind '" + kind + "'");
    }

    // Generator block.
    const std::string gen_kind = config.get_or("generator", "kind", "zero");
    if (gen_kind == "zero") {
        s.generator = Generator::zero();
    } else if (gen_kind == "linear") {
        s.generator = Generator::linear(config.get_double_or("generator", "c", 0.5));
    } else {
        throw validation_error("generator.kind: unknown kind '" + gen_kind + "'");
    }

    // Terminal block: either a single tag on the last breakpoint or a
    // composite with one part per breakpoint.
    const std::string term_kind = config.get_or("terminal", "kind", "linear");
    const double horizon = s.smoothness.horizon();
    if (term_kind == "composite") {
        std::vector<TerminalFunction1D> parts;
        for (const auto& tag : config.get_list("terminal", "parts"))
            parts.push_back(parse_terminal_tag(tag));
        if (parts.size() != s.smoothness.num_intervals())
            throw validation_error("terminal.parts: need one tag per breakpoint interval");
        std::vector<double> times(s.smoothness.breakpoints.begin() + 1,
                                  s.smoothness.breakpoints.end());
        s.terminal_parts = parts;
        s.terminal = TerminalCondition::mean_composite(parts, times);
    } else {
        const auto g = parse_terminal_tag(term_kind);
        s.terminal_parts = {g};
        s.terminal = TerminalCondition::terminal_1d(g, horizon);
    }

    // Regression block.
    const std::string basis = config.get_or("regression", "basis", "global_poly");
    if (basis == "global_poly")
        s.regression.basis = RegressionConfig::Basis::GlobalPoly;
    else if (basis == "piecewise_linear")
        s.regression.basis = RegressionConfig::Basis::PiecewiseLinear;
    else if (basis == "hermite")
        s.regression.basis = RegressionConfig::Basis::Hermite;
    else
        throw validation_error("regression.basis: unknown basis '" + basis + "'");
    s.regression.degree = config.get_size_or("regression", "degree", 3);
    s.regression.bins = config.get_size_or("regression", "bins", 32);
    s.regression.order = config.get_size_or("regression", "order", 3);
    const std::string ridge = config.get_or("regression", "ridge", "auto");
    s.regression.ridge = ridge == "auto" ? -1.0 : std::stod(ridge);
    s.regression.validate();

    s.scenario_hash = s.to_config().hash();
    s.validate();
    return s;
}

Config Scenario::to_config() const {
    Config cfg;
    cfg.set("scenario", "name", name);
    cfg.set("scenario", "p", format_double(p));
    cfg.set("scenario", "paths", std::to_string(paths));
    {
        std::ostringstream seeds_text;
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            if (i) seeds_text << ",";
            seeds_text << seeds[i];
        }
        cfg.set("scenario", "seeds", seeds_text.str());
    }
    {
        std::ostringstream n_text;
        for (std::size_t i = 0; i < n_grid.size(); ++i) {
            if (i) n_text << ",";
            n_text << n_grid[i];
        }
        cfg.set("scenario", "n", n_text.str());
    }
    {
        std::ostringstream nets_text;
        for (std::size_t i = 0; i < net_kinds.size(); ++i) {
            if (i) nets_text << ",";
            nets_text << (net_kinds[i] == NetKind::Theta ? "theta" : "uniform");
        }
        cfg.set("scenario", "nets", nets_text.str());
    }
    cfg.set("scenario", "refine", std::to_string(refine_factor));
    if (theta_prime) cfg.set("scenario", "theta_prime", join_doubles(*theta_prime));

    switch (model.kind) {
        case ModelKind::Brownian:
            cfg.set("model", "kind", "brownian");
            break;
        case ModelKind::Arithmetic:
            cfg.set("model", "kind", "arithmetic");
            cfg.set("model", "b", format_double(model.arithmetic_drift[0]));
            cfg.set("model", "sigma", format_double(model.arithmetic_sigma[0]));
            break;
        case ModelKind::Geometric:
            cfg.set("model", "kind", "geometric");
            cfg.set("model", "mu", format_double(model.gbm_mu[0]));
            cfg.set("model", "vol", format_double(model.gbm_vol[0]));
            break;
        case ModelKind::OrnsteinUhlenbeck:
            cfg.set("model", "kind", "ornstein_uhlenbeck");
            cfg.set("model", "kappa", format_double(model.ou_kappa[0]));
            cfg.set("model", "mean", format_double(model.ou_mean[0]));
            cfg.set("model", "vol", format_double(model.ou_vol[0]));
            break;
        case ModelKind::Generic:
            cfg.set("model", "kind", "generic");
            break;
    }
    cfg.set("model", "x0", format_double(model.x0[0]));

    cfg.set("generator", "kind", generator.tag == Generator::Tag::Zero     ? "zero"
                                 : generator.tag == Generator::Tag::Linear ? "linear"
                                                                           : "custom");
    if (generator.tag == Generator::Tag::Linear) {
        // recover c from f(1) at y = 1
        const double c = generator.f(0.0, std::vector<double>{0.0}, 1.0,
                                     std::vector<double>{0.0});
        cfg.set("generator", "c", format_double(c));
    }

    if (terminal_parts.size() > 1) {
        cfg.set("terminal", "kind", "composite");
        std::ostringstream parts_text;
        for (std::size_t i = 0; i < terminal_parts.size(); ++i) {
            if (i) parts_text << ",";
            parts_text << terminal_parts[i].describe();
        }
        cfg.set("terminal", "parts", parts_text.str());
    } else {
        cfg.set("terminal", "kind", terminal_parts.empty() ? "linear"
                                                           : terminal_parts[0].describe());
    }

    cfg.set("smoothness", "breakpoints", join_doubles(smoothness.breakpoints));
    cfg.set("smoothness", "theta",
            estimate_theta ? std::string("estimate") : join_doubles(smoothness.theta));

    switch (regression.basis) {
        case RegressionConfig::Basis::GlobalPoly:
            cfg.set("regression", "basis", "global_poly");
            cfg.set("regression", "degree", std::to_string(regression.degree));
            break;
        case RegressionConfig::Basis::PiecewiseLinear:
            cfg.set("regression", "basis", "piecewise_linear");
            cfg.set("regression", "bins", std::to_string(regression.bins));
            break;
        case RegressionConfig::Basis::Hermite:
            cfg.set("regression", "basis", "hermite");
            cfg.set("regression", "order", std::to_string(regression.order));
            break;
    }
    cfg.set("regression", "ridge",
            regression.ridge < 0.0 ? std::string("auto") : format_double(regression.ridge));
    return cfg;
}

TimeNet Scenario::coarse_net(NetKind kind, std::size_t n) const {
    if (kind == NetKind::Uniform) return build_uniform_net(smoothness, n);
    if (theta_prime) {
        SmoothnessSpec override_spec(smoothness.breakpoints, *theta_prime);
        return build_theta_net(override_spec, n);
    }
    return build_theta_net(smoothness, n);
}

void Scenario::validate() const {
    if (n_grid.empty()) throw validation_error("scenario.n must not be empty");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1])
            throw validation_error("scenario.n must be strictly increasing");
    if (net_kinds.empty()) throw validation_error("scenario.nets must not be empty");
    // every referenced breakpoint must be a knot of every net in the grid
    for (std::size_t n : n_grid) {
        for (NetKind kind : net_kinds) {
            const TimeNet net = coarse_net(kind, n);
            for (double r : terminal.observation_times)
                if (!net.contains(r))
                    throw validation_error(
                        "scenario: terminal observation time is not a net knot");
        }
    }
}

std::vector<std::string> preset_names() {
    return {"minimal",        "rate_indicator", "solver_oracle", "exponent_recovery",
            "equivalence",    "mixing",         "weights"};
}

std::string preset_config(const std::string& name) {
    if (name == "minimal") {
        return "[scenario]\n"
               "name = minimal\n"
               "p = 2\n"
               "paths = 4096\n"
               "seeds = 1,2\n"
               "n = 4,8\n"
               "nets = theta\n"
               "refine = 4\n"
               "[model]\n"
               "kind = brownian\n"
               "x0 = 0\n"
               "[generator]\n"
               "kind = zero\n"
               "[terminal]\n"
               "kind = linear\n"
               "[smoothness]\n"
               "breakpoints = 0,1\n"
               "theta = 1\n"
               "[regression]\n"
               "basis = global_poly\n"
               "degree = 3\n"
               "ridge = auto\n";
    }
    if (name == "rate_indicator") {
        return "[scenario]\n"
               "name = rate_indicator\n"
               "p = 2\n"
               "paths = 32768\n"
               "seeds = 1\n"
               "n = 4,8,16,32\n"
               "nets = theta,uniform\n"
               "refine = 8\n"
               "theta_prime = 0.4\n"
               "[model]\n"
               "kind = brownian\n"
               "x0 = 0\n"
               "[generator]\n"
               "kind = zero\n"
               "[terminal]\n"
               "kind = indicator:0\n"
               "[smoothness]\n"
               "breakpoints = 0,1\n"
               "theta = 0.5\n"
               "[regression]\n"
               "basis = piecewise_linear\n"
               "bins = 48\n"
               "ridge = auto\n";
    }
    if (name == "solver_oracle") {
        return "[scenario]\n"
               "name = solver_oracle\n"
               "p = 2\n"
               "paths = 65536\n"
               "seeds = 1,2,3\n"
               "n = 16\n"
               "nets = theta\n"
               "refine = 4\n"
               "[model]\n"
               "kind = brownian\n"
               "x0 = 0\n"
               "[generator]\n"
               "kind = zero\n"
               "[terminal]\n"
               "kind = indicator:0\n"
               "[smoothness]\n"
               "breakpoints = 0,1\n"
               "theta = 0.5\n"
               "[regression]\n"
               "basis = piecewise_linear\n"
               "bins = 48\n"
               "ridge = auto\n";
    }
    if (name == "exponent_recovery") {
        return "[scenario]\n"
               "name = exponent_recovery\n"
               "p = 2\n"
               "paths = 4096\n"
               "seeds = 1\n"
               "n = 8\n"
               "nets = theta\n"
               "refine = 4\n"
               "[model]\n"
               "kind = brownian\n"
               "x0 = 0\n"
               "[generator]\n"
               "kind = zero\n"
               "[terminal]\n"
               "kind = power:0.25\n"
               "[smoothness]\n"
               "breakpoints = 0,1\n"
               "theta = estimate\n"
               "[regression]\n"
               "basis = piecewise_linear\n"
               "bins = 48\n"
               "ridge = auto\n";
    }
    if (name == "equivalence") {
        return "[scenario]\n"
               "name = equivalence\n"
               "p = 2\n"
               "paths = 65536\n"
               "seeds = 1\n"
               "n = 32\n"
               "nets = theta\n"
               "refine = 4\n"
               "[model]\n"
               "kind = brownian\n"
               "x0 = 0\n"
               "[generator]\n"
               "kind = zero\n"
               "[terminal]\n"
               "kind = indicator:0\n"
               "[smoothness]\n"
               "breakpoints = 0,1\n"
               "theta = 0.5\n"
               "[regression]\n"
               "basis = piecewise_linear\n"
               "bins = 64\n"
               "ridge = auto\n";
    }
    if (name == "mixing") {
        return "[scenario]\n"
               "name = mixing\n"
               "p = 2\n"
               "paths = 65536\n"
               "seeds = 1\n"
               "n = 64\n"
               "nets = uniform\n"
               "refine = 1\n"
               "[model]\n"
               "kind = brownian\n"
               "x0 = 0\n"
               "[generator]\n"
               "kind = zero\n"
               "[terminal]\n"
               "kind = linear\n"
               "[smoothness]\n"
               "breakpoints = 0,1\n"
               "theta = 1\n"
               "[regression]\n"
               "basis = global_poly\n"
               "degree = 3\n"
               "ridge = auto\n";
    }
    if (name == "weights") {
        return "[scenario]\n"
               "name = weights\n"
               "p = 2\n"
               "paths = 65536\n"
               "seeds = 1\n"
               "n = 4\n"
               "nets = uniform\n"
               "refine = 1\n"
               "[model]\n"
               "kind = brownian\n"
               "x0 = 0\n"
               "[generator]\n"
               "kind = zero\n"
               "[terminal]\n"
               "kind = indicator:0\n"
               "[smoothness]\n"
               "breakpoints = 0,1\n"
               "theta = 0.5\n"
               "[regression]\n"
               "basis = piecewise_linear\n"
               "bins = 32\n"
               "ridge = auto\n";
    }
    throw validation_error("unknown preset '" + name + "'");
}

} // namespace bfnet
