#include "bfnet/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bfnet/parallel.hpp"

namespace bfnet {

Generator Generator::zero() {
    Generator g;
    g.tag = Tag::Zero;
    g.f = [](double, std::span<const double>, double, std::span<const double>) { return 0.0; };
    return g;
}

Generator Generator::linear(double c) {
    Generator g;
    g.tag = Tag::Linear;
    g.K_f = 0.0;
    g.L_f = std::abs(c);
    g.f = [c](double, std::span<const double>, double y, std::span<const double>) {
        return c * y;
    };
    return g;
}

Generator Generator::custom(Fn f, double K_f, double L_f) {
    if (!(K_f >= 0.0) || !(L_f > 0.0))
        throw validation_error("Generator: declared constants must be positive");
    Generator g;
    g.tag = Tag::Custom;
    g.K_f = K_f;
    g.L_f = L_f;
    g.f = std::move(f);
    return g;
}

TerminalCondition TerminalCondition::terminal_1d(const TerminalFunction1D& g, double horizon) {
    TerminalCondition t;
    t.observation_times = {horizon};
    t.growth_degree = g.growth_degree();
    t.g = [g](std::span<const double> states) { return g(states[0]); };
    return t;
}

TerminalCondition TerminalCondition::mean_composite(std::vector<TerminalFunction1D> parts,
                                                    std::vector<double> times) {
    if (parts.size() != times.size() || parts.empty())
        throw validation_error("TerminalCondition: need one part per observation time");
    TerminalCondition t;
    t.observation_times = std::move(times);
    double growth = 0.0;
    for (const auto& part : parts) growth = std::max(growth, part.growth_degree());
    t.growth_degree = growth;
    const std::size_t L = parts.size();
    t.g = [parts = std::move(parts), L](std::span<const double> states) {
        double acc = 0.0;
        for (std::size_t l = 0; l < L; ++l) acc += parts[l](states[l]);
        return acc / static_cast<double>(L);
    };
    return t;
}

void TerminalCondition::validate(const TimeNet& grid) const {
    if (observation_times.empty())
        throw validation_error("TerminalCondition: no observation times");
    for (std::size_t l = 1; l < observation_times.size(); ++l)
        if (!(observation_times[l] > observation_times[l - 1]))
            throw validation_error("TerminalCondition: observation times must increase");
    for (double r : observation_times)
        if (!grid.contains(r))
            throw validation_error("TerminalCondition: observation time is not a grid knot");
}

BsdeSolution::BsdeSolution(TimeNet grid, std::shared_ptr<const PathEnsemble> ensemble,
                           RegressionConfig config, SchemeTag scheme)
    : grid_(std::move(grid)), ensemble_(std::move(ensemble)), config_(config), scheme_(scheme),
      dim_(ensemble_->dimension()) {
    y_.assign(grid_.num_knots() * ensemble_->n_paths(), 0.0);
    z_.assign(grid_.num_intervals() * ensemble_->n_paths() * dim_, 0.0);
    knot_map_.resize(grid_.num_knots());
}

namespace {

// Conditioning features at a grid time: the current state first (primary),
// then every breakpoint state observed strictly before it.
struct FeatureLayout {
    std::vector<std::size_t> observed_knots; // ensemble knots of observed r_j
    std::size_t n_features(std::size_t d) const { return d * (1 + observed_knots.size()); }
};

FeatureLayout layout_at(const TerminalCondition& term, const PathEnsemble& ens, double t) {
    FeatureLayout lay;
    const double tol = 1e-12 * ens.grid().horizon();
    for (double r : term.observation_times)
        if (r < t - tol) lay.observed_knots.push_back(ens.grid().index_of(r));
    return lay;
}

std::vector<double> gather_features(const PathEnsemble& ens, std::size_t knot,
                                    const FeatureLayout& lay) {
    const std::size_t d = ens.dimension();
    const std::size_t nf = lay.n_features(d);
    std::vector<double> features(ens.n_paths() * nf);
    parallel_for(ens.n_paths(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            double* row = &features[p * nf];
            const auto x = ens.state(p, knot);
            std::copy(x.begin(), x.end(), row);
            std::size_t off = d;
            for (std::size_t j = 0; j < lay.observed_knots.size(); ++j, off += d) {
                const auto o = ens.state(p, lay.observed_knots[j]);
                std::copy(o.begin(), o.end(), row + off);
            }
        }
    });
    return features;
}

std::vector<double> evaluate_terminal(const TerminalCondition& term, const PathEnsemble& ens) {
    const std::size_t d = ens.dimension();
    const std::size_t L = term.num_observations();
    std::vector<std::size_t> knots(L);
    for (std::size_t l = 0; l < L; ++l) knots[l] = ens.grid().index_of(term.observation_times[l]);
    std::vector<double> xi(ens.n_paths());
    parallel_for(ens.n_paths(), [&](std::size_t lo, std::size_t hi) {
        std::vector<double> states(L * d);
        for (std::size_t p = lo; p < hi; ++p) {
            for (std::size_t l = 0; l < L; ++l) {
                const auto x = ens.state(p, knots[l]);
                std::copy(x.begin(), x.end(), states.begin() + static_cast<std::ptrdiff_t>(l * d));
            }
            xi[p] = term.g(states);
        }
    });
    return xi;
}

} // namespace

BsdeSolution solve(const ForwardModel& model, const Generator& gen,
                   const TerminalCondition& term, const TimeNet& grid,
                   std::shared_ptr<const PathEnsemble> ensemble, const RegressionConfig& reg,
                   SchemeTag scheme) {
    const PathEnsemble& ens = *ensemble;
    if (!ens.grid().refines(grid))
        throw argument_error("solve: ensemble grid does not refine the solving grid");
    term.validate(grid);
    reg.validate();
    if (ens.dimension() != model.dimension)
        throw argument_error("solve: ensemble/model dimension mismatch");

    const std::size_t n_paths = ens.n_paths();
    const std::size_t d = ens.dimension();
    const std::size_t n_knots = grid.num_knots();

    BsdeSolution sol(grid, ensemble, reg, scheme);
    std::vector<std::size_t> knot_map(n_knots);
    for (std::size_t i = 0; i < n_knots; ++i) knot_map[i] = ens.grid().index_of(grid.knots[i]);
    sol.set_knot_map(knot_map);
    sol.set_observation_times(term.observation_times);

    if (scheme == SchemeTag::Implicit && !gen.is_zero()) {
        double max_dt = 0.0;
        for (std::size_t i = 0; i + 1 < n_knots; ++i) max_dt = std::max(max_dt, grid.dt(i));
        if (gen.L_f * max_dt >= 1.0) {
            std::ostringstream msg;
            msg << "solve: implicit contraction needs L_f * dt < 1 (got " << gen.L_f * max_dt
                << "); use a finer net";
            throw scheme_error(msg.str());
        }
    }

    auto& y = sol.mutable_y();
    auto& z = sol.mutable_z();
    auto& diag = sol.mutable_diagnostics();
    diag.z_residual_norm.assign(n_knots - 1, 0.0);
    diag.y_residual_norm.assign(n_knots - 1, 0.0);
    diag.condition_number.assign(n_knots - 1, 0.0);

    // Terminal slice: Y_N = xi path by path.
    {
        const std::vector<double> xi = evaluate_terminal(term, ens);
        std::copy(xi.begin(), xi.end(), y.begin() + static_cast<std::ptrdiff_t>((n_knots - 1) * n_paths));
    }

    std::vector<double> dw(n_paths * d);
    std::vector<double> target(n_paths);
    std::vector<double> y_next(n_paths);
    std::vector<double> zhat(n_paths * d);

    for (std::size_t i = n_knots - 1; i >= 1; --i) {
        const double t_prev = grid.knots[i - 1];
        const double dt = grid.dt(i - 1);
        const std::size_t k_prev = knot_map[i - 1];
        const std::size_t k_next = knot_map[i];

        // Increment of W over the solving interval (sum of fine increments).
        parallel_for(n_paths, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t p = lo; p < hi; ++p) {
                double* acc = &dw[p * d];
                std::fill(acc, acc + d, 0.0);
                for (std::size_t k = k_prev; k < k_next; ++k) {
                    const auto inc = ens.increment(p, k);
                    for (std::size_t c = 0; c < d; ++c) acc[c] += inc[c];
                }
            }
        });

        std::copy(y.begin() + static_cast<std::ptrdiff_t>(i * n_paths),
                  y.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_paths), y_next.begin());

        const FeatureLayout lay = layout_at(term, ens, t_prev);
        const std::vector<double> features = gather_features(ens, k_prev, lay);
        const StepRegression regressor(reg, features, n_paths, lay.n_features(d), d);
        diag.condition_number[i - 1] = regressor.condition_number();

        // Z block: project Y_{t_i} dW_c / dt for each component.
        double zres_acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            for (std::size_t p = 0; p < n_paths; ++p)
                target[p] = y_next[p] * dw[p * d + c] / dt;
            double res = 0.0;
            const std::vector<double> fitted = regressor.project(target, &res);
            zres_acc += res * res;
            for (std::size_t p = 0; p < n_paths; ++p)
                zhat[p * d + c] = fitted[p];
        }
        diag.z_residual_norm[i - 1] = std::sqrt(zres_acc);
        std::copy(zhat.begin(), zhat.end(),
                  z.begin() + static_cast<std::ptrdiff_t>((i - 1) * n_paths * d));

        double* y_prev = &y[(i - 1) * n_paths];
        if (gen.is_zero()) {
            double res = 0.0;
            const std::vector<double> fitted = regressor.project(y_next, &res);
            diag.y_residual_norm[i - 1] = res;
            std::copy(fitted.begin(), fitted.end(), y_prev);
        } else if (scheme == SchemeTag::Explicit) {
            parallel_for(n_paths, [&](std::size_t lo, std::size_t hi) {
                for (std::size_t p = lo; p < hi; ++p) {
                    const auto x = ens.state(p, k_prev);
                    target[p] = y_next[p] +
                                gen.f(t_prev, x, y_next[p], {&zhat[p * d], d}) * dt;
                }
            });
            double res = 0.0;
            const std::vector<double> fitted = regressor.project(target, &res);
            diag.y_residual_norm[i - 1] = res;
            std::copy(fitted.begin(), fitted.end(), y_prev);
        } else {
            double res = 0.0;
            const std::vector<double> projected = regressor.project(y_next, &res);
            diag.y_residual_norm[i - 1] = res;
            // Pathwise fixed point y = Proj[Y_i] + f(t, X, y, z) dt.
            std::copy(projected.begin(), projected.end(), y_prev);
            std::size_t iterations = 0;
            for (; iterations < 50; ++iterations) {
                double worst = 0.0;
                for (std::size_t p = 0; p < n_paths; ++p) {
                    const auto x = ens.state(p, k_prev);
                    const double next =
                        projected[p] + gen.f(t_prev, x, y_prev[p], {&zhat[p * d], d}) * dt;
                    worst = std::max(worst, std::abs(next - y_prev[p]));
                    y_prev[p] = next;
                }
                if (worst < 1e-12) break;
            }
            if (iterations == 50)
                throw scheme_error("solve: implicit iteration did not converge; use a finer net");
            diag.max_implicit_iterations =
                std::max(diag.max_implicit_iterations, iterations + 1);
        }
    }
    return sol;
}

std::vector<double> zbar(const BsdeSolution& solution, const TimeNet& coarse) {
    const TimeNet& fine = solution.grid();
    if (!fine.refines(coarse)) throw argument_error("zbar: grids not nested");
    if (solution.z_dimension() != 1)
        throw argument_error("zbar: implemented for scalar Brownian components");

    const PathEnsemble& ens = solution.ensemble();
    const std::size_t n_paths = solution.n_paths();
    const std::size_t n_coarse = coarse.num_intervals();
    std::vector<double> out(n_coarse * n_paths, 0.0);

    TerminalCondition cond;
    cond.observation_times = solution.observation_times();
    for (std::size_t ci = 0; ci < n_coarse; ++ci) {
        const double ta = coarse.knots[ci];
        const double tb = coarse.knots[ci + 1];
        const std::size_t fa = fine.index_of(ta);
        const std::size_t fb = fine.index_of(tb);
        std::vector<double> avg(n_paths, 0.0);
        parallel_for(n_paths, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t p = lo; p < hi; ++p) {
                double acc = 0.0;
                for (std::size_t k = fa; k < fb; ++k)
                    acc += solution.z(p, k) * fine.dt(k);
                avg[p] = acc / (tb - ta);
            }
        });
        // Same basis, conditioned at the coarse left endpoint with the same
        // observed-breakpoint features the solver used there.
        const FeatureLayout lay = layout_at(cond, ens, ta);
        const std::size_t e_knot = ens.grid().index_of(ta);
        const std::vector<double> features = gather_features(ens, e_knot, lay);
        const StepRegression regressor(solution.regression_config(), features, n_paths,
                                       lay.n_features(1), 1);
        const std::vector<double> fitted = regressor.project(avg);
        std::copy(fitted.begin(), fitted.end(),
                  out.begin() + static_cast<std::ptrdiff_t>(ci * n_paths));
    }
    return out;
}

std::vector<double> gradient_via_weights(const PathEnsemble& ensemble,
                                         const ForwardModel& model,
                                         const TerminalFunction1D& g, std::size_t r_index,
                                         std::size_t R_index, const RegressionConfig& reg) {
    if (ensemble.dimension() != 1)
        throw argument_error("gradient_via_weights: implemented for d = 1");
    const std::vector<double> weights =
        malliavin_weight_order1(ensemble, model, r_index, R_index);
    const std::size_t n_paths = ensemble.n_paths();
    std::vector<double> target(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p)
        target[p] = g(ensemble.state(p, R_index)[0]) * weights[p];
    std::vector<double> features(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) features[p] = ensemble.state(p, r_index)[0];
    const StepRegression regressor(reg, features, n_paths, 1, 1);
    return regressor.project(target);
}

} // namespace bfnet
