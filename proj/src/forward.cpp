#include "bfnet/forward.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bfnet/parallel.hpp"

namespace bfnet {

namespace {

std::vector<double> default_x0(std::size_t d, std::vector<double> x0, double fill) {
    if (x0.empty()) x0.assign(d, fill);
    if (x0.size() != d) throw validation_error("ForwardModel: x0 dimension mismatch");
    return x0;
}

void check_ellipticity_at(const ForwardModel& m, double t, std::span<const double> x) {
    const std::size_t d = m.dimension;
    std::vector<double> sig(d * d);
    m.diffusion(t, x, sig);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> S(
        sig.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    const Eigen::MatrixXd A = S * S.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (!(min_eig > 0.0)) {
        std::ostringstream msg;
        msg << "ForwardModel: sigma sigma^T not positive definite at t=" << t
            << " (min eigenvalue " << min_eig << ")";
        throw validation_error(msg.str());
    }
}

} // namespace

ForwardModel ForwardModel::brownian(std::size_t d, std::vector<double> x0) {
    ForwardModel m;
    m.dimension = d;
    m.kind = ModelKind::Brownian;
    m.x0 = default_x0(d, std::move(x0), 0.0);
    m.drift = [](double, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    m.diffusion = [d](double, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < d; ++i) out[i * d + i] = 1.0;
    };
    m.validate();
    return m;
}

ForwardModel ForwardModel::arithmetic(std::vector<double> b, std::vector<double> sigma,
                                      std::vector<double> x0) {
    ForwardModel m;
    m.dimension = b.size();
    m.kind = ModelKind::Arithmetic;
    if (sigma.size() != m.dimension * m.dimension)
        throw validation_error("ForwardModel: arithmetic sigma must be d x d");
    m.x0 = default_x0(m.dimension, std::move(x0), 0.0);
    m.arithmetic_drift = b;
    m.arithmetic_sigma = sigma;
    m.drift = [b](double, std::span<const double>, std::span<double> out) {
        std::copy(b.begin(), b.end(), out.begin());
    };
    m.diffusion = [sigma](double, std::span<const double>, std::span<double> out) {
        std::copy(sigma.begin(), sigma.end(), out.begin());
    };
    m.validate();
    return m;
}

ForwardModel ForwardModel::geometric(std::vector<double> mu, std::vector<double> vol,
                                     std::vector<double> x0) {
    ForwardModel m;
    m.dimension = mu.size();
    m.kind = ModelKind::Geometric;
    if (vol.size() != m.dimension)
        throw validation_error("ForwardModel: geometric needs one vol per component");
    m.x0 = default_x0(m.dimension, std::move(x0), 1.0);
    for (double v : m.x0)
        if (v == 0.0) throw validation_error("ForwardModel: geometric x0 components must be nonzero");
    m.gbm_mu = mu;
    m.gbm_vol = vol;
    const std::size_t d = m.dimension;
    m.drift = [mu](double, std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = mu[i] * x[i];
    };
    m.diffusion = [vol, d](double, std::span<const double> x, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < d; ++i) out[i * d + i] = vol[i] * x[i];
    };
    m.validate();
    return m;
}

ForwardModel ForwardModel::ornstein_uhlenbeck(std::vector<double> kappa, std::vector<double> mean,
                                              std::vector<double> vol, std::vector<double> x0) {
    ForwardModel m;
    m.dimension = kappa.size();
    m.kind = ModelKind::OrnsteinUhlenbeck;
    if (mean.size() != m.dimension || vol.size() != m.dimension)
        throw validation_error("ForwardModel: OU parameter dimensions must agree");
    for (double k : kappa)
        if (!(k > 0.0)) throw validation_error("ForwardModel: OU kappa must be positive");
    m.x0 = default_x0(m.dimension, std::move(x0), 0.0);
    m.ou_kappa = kappa;
    m.ou_mean = mean;
    m.ou_vol = vol;
    const std::size_t d = m.dimension;
    m.drift = [kappa, mean](double, std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = kappa[i] * (mean[i] - x[i]);
    };
    m.diffusion = [vol, d](double, std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < d; ++i) out[i * d + i] = vol[i];
    };
    m.validate();
    return m;
}

ForwardModel ForwardModel::generic(std::size_t d, DriftFn b, DiffusionFn sigma,
                                   std::vector<double> x0) {
    ForwardModel m;
    m.dimension = d;
    m.kind = ModelKind::Generic;
    m.x0 = default_x0(d, std::move(x0), 0.0);
    m.drift = std::move(b);
    m.diffusion = std::move(sigma);
    m.validate();
    return m;
}

void ForwardModel::validate() const {
    if (dimension == 0 || dimension > 8)
        throw validation_error("ForwardModel: dimension must be in [1, 8]");
    if (!drift || !diffusion) throw validation_error("ForwardModel: drift/diffusion not set");
    if (x0.size() != dimension) throw validation_error("ForwardModel: x0 dimension mismatch");
    // Spot-check ellipticity at the start point for the built-in kinds.
    // Generic models are accepted on trust; singularities there surface as
    // simulation errors when the matrix is actually used.
    if (kind != ModelKind::Generic) {
        check_ellipticity_at(*this, 0.0, x0);
        std::vector<double> probe(x0);
        for (double scale : {0.5, 2.0}) {
            for (std::size_t i = 0; i < dimension; ++i)
                probe[i] = x0[i] == 0.0 ? (scale - 1.0) : x0[i] * scale;
            check_ellipticity_at(*this, 0.0, probe);
        }
    }
}

MixingSchedule MixingSchedule::indicator(double t, double r) {
    if (!(t < r)) throw validation_error("MixingSchedule: indicator needs t < r");
    MixingSchedule s;
    s.kind = Kind::Indicator;
    s.from = t;
    s.to = r;
    return s;
}

MixingSchedule MixingSchedule::custom(std::function<double(double)> eta) {
    MixingSchedule s;
    s.kind = Kind::Custom;
    s.eta = std::move(eta);
    return s;
}

double MixingSchedule::value(double s) const {
    switch (kind) {
        case Kind::Zero:
            return 0.0;
        case Kind::Indicator:
            return (s > from && s <= to) ? 1.0 : 0.0;
        case Kind::Custom: {
            const double v = eta(s);
            if (!(v >= -1.0 && v <= 1.0))
                throw validation_error("MixingSchedule: |eta(s)| must be <= 1");
            return v;
        }
    }
    return 0.0;
}

PathEnsemble::PathEnsemble(TimeNet grid, std::size_t n_paths, std::size_t dimension,
                           std::uint64_t master_seed, bool with_flow)
    : grid_(std::move(grid)), n_paths_(n_paths), dim_(dimension), seed_(master_seed) {
    if (n_paths_ == 0) throw argument_error("PathEnsemble: n_paths must be >= 1");
    const std::size_t knots = grid_.num_knots();
    states_.assign(knots * n_paths_ * dim_, 0.0);
    dw_.assign((knots - 1) * n_paths_ * dim_, 0.0);
    if (with_flow) flow_.assign(knots * n_paths_ * dim_ * dim_, 0.0);
    stream_ids_.resize(n_paths_);
    for (std::size_t p = 0; p < n_paths_; ++p) stream_ids_[p] = p;
}

std::vector<double> PathEnsemble::component_at_knot(std::size_t knot, std::size_t c) const {
    std::vector<double> out(n_paths_);
    for (std::size_t p = 0; p < n_paths_; ++p) out[p] = states_[(knot * n_paths_ + p) * dim_ + c];
    return out;
}

namespace {

// One path's forward stepping; dw is already filled for every interval.
struct Stepper {
    const ForwardModel& model;
    const TimeNet& grid;

    void step(std::size_t interval, std::span<const double> x, std::span<const double> dw,
              std::span<double> out, std::size_t path) const {
        const std::size_t d = model.dimension;
        const double t = grid.knots[interval];
        const double h = grid.dt(interval);
        switch (model.kind) {
            case ModelKind::Brownian:
                for (std::size_t c = 0; c < d; ++c) out[c] = x[c] + dw[c];
                return;
            case ModelKind::Arithmetic:
                for (std::size_t c = 0; c < d; ++c) {
                    double diff = 0.0;
                    for (std::size_t k = 0; k < d; ++k)
                        diff += model.arithmetic_sigma[c * d + k] * dw[k];
                    out[c] = x[c] + model.arithmetic_drift[c] * h + diff;
                }
                return;
            case ModelKind::Geometric:
                for (std::size_t c = 0; c < d; ++c) {
                    const double mu = model.gbm_mu[c];
                    const double v = model.gbm_vol[c];
                    out[c] = x[c] * std::exp((mu - 0.5 * v * v) * h + v * dw[c]);
                }
                return;
            case ModelKind::OrnsteinUhlenbeck:
                for (std::size_t c = 0; c < d; ++c) {
                    const double k = model.ou_kappa[c];
                    const double m = model.ou_mean[c];
                    const double decay = std::exp(-k * h);
                    const double std_exact =
                        model.ou_vol[c] * std::sqrt((1.0 - decay * decay) / (2.0 * k));
                    const double z = dw[c] / std::sqrt(h); // reuse the interval's normal
                    out[c] = m + (x[c] - m) * decay + std_exact * z;
                }
                return;
            case ModelKind::Generic: {
                double bbuf[8];
                double sbuf[64];
                model.drift(t, x, {bbuf, d});
                model.diffusion(t, x, {sbuf, d * d});
                for (std::size_t c = 0; c < d; ++c) {
                    double diff = 0.0;
                    for (std::size_t k = 0; k < d; ++k) diff += sbuf[c * d + k] * dw[k];
                    out[c] = x[c] + bbuf[c] * h + diff;
                    if (!std::isfinite(out[c])) {
                        std::ostringstream msg;
                        msg << "simulate: non-finite state at path " << path << ", knot "
                            << interval + 1;
                        throw simulation_error(msg.str());
                    }
                }
                return;
            }
        }
    }
};

// Flow dX evolution. Exact for the built-in kinds, Euler with
// finite-difference Jacobians for Generic.
struct FlowStepper {
    const ForwardModel& model;
    const TimeNet& grid;

    void init(std::span<double> flow0) const {
        const std::size_t d = model.dimension;
        std::fill(flow0.begin(), flow0.end(), 0.0);
        for (std::size_t c = 0; c < d; ++c) flow0[c * d + c] = 1.0;
    }

    void step(std::size_t interval, std::span<const double> x, std::span<const double> x_next,
              std::span<const double> dw, std::span<const double> flow,
              std::span<double> flow_next) const {
        const std::size_t d = model.dimension;
        const double t = grid.knots[interval];
        const double h = grid.dt(interval);
        switch (model.kind) {
            case ModelKind::Brownian:
            case ModelKind::Arithmetic:
                std::copy(flow.begin(), flow.end(), flow_next.begin());
                return;
            case ModelKind::Geometric:
                // GBM flow is X_t / x0 componentwise; advance multiplicatively.
                for (std::size_t c = 0; c < d; ++c)
                    for (std::size_t k = 0; k < d; ++k)
                        flow_next[c * d + k] = flow[c * d + k] * (x_next[c] / x[c]);
                return;
            case ModelKind::OrnsteinUhlenbeck:
                for (std::size_t c = 0; c < d; ++c)
                    for (std::size_t k = 0; k < d; ++k)
                        flow_next[c * d + k] = flow[c * d + k] * std::exp(-model.ou_kappa[c] * h);
                return;
            case ModelKind::Generic: {
                // d flow = Jb flow dt + sum_k Jsigma_k flow dW_k, Jacobians by
                // central differences in the state.
                Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>
                    F(flow.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
                Eigen::MatrixXd increment = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                                                  static_cast<Eigen::Index>(d));
                std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
                std::vector<double> bp(d), bm(d), sp(d * d), sm(d * d);
                for (std::size_t j = 0; j < d; ++j) {
                    const double step_h = 1e-6 * (1.0 + std::abs(x[j]));
                    xp[j] = x[j] + step_h;
                    xm[j] = x[j] - step_h;
                    model.drift(t, xp, bp);
                    model.drift(t, xm, bm);
                    model.diffusion(t, xp, sp);
                    model.diffusion(t, xm, sm);
                    for (std::size_t c = 0; c < d; ++c) {
                        double v = (bp[c] - bm[c]) / (2.0 * step_h) * h;
                        for (std::size_t k = 0; k < d; ++k)
                            v += (sp[c * d + k] - sm[c * d + k]) / (2.0 * step_h) * dw[k];
                        increment(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) = v;
                    }
                    xp[j] = x[j];
                    xm[j] = x[j];
                }
                Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
                    Fn(flow_next.data(), static_cast<Eigen::Index>(d),
                       static_cast<Eigen::Index>(d));
                Fn = F + increment * F;
                return;
            }
        }
    }
};

enum class NoiseMode { Plain, Mixed };

void fill_increments(PathEnsemble& ens, const MixingSchedule& schedule, NoiseMode mode) {
    const TimeNet& grid = ens.grid();
    const std::size_t d = ens.dimension();
    const std::size_t n_intervals = grid.num_intervals();
    const CounterRng rng_w(ens.master_seed(), NoiseStream::W);
    const CounterRng rng_b(ens.master_seed(), NoiseStream::B);

    parallel_for(ens.n_paths(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            for (std::size_t i = 0; i < n_intervals; ++i) {
                const double h = grid.dt(i);
                const double sqrt_h = std::sqrt(h);
                auto dw = ens.mutable_increment(p, i);
                if (mode == NoiseMode::Plain) {
                    for (std::size_t c = 0; c < d; ++c)
                        dw[c] = sqrt_h * rng_w.normal(p, static_cast<std::uint32_t>(i),
                                                      static_cast<std::uint32_t>(c));
                    continue;
                }
                switch (schedule.kind) {
                    case MixingSchedule::Kind::Zero:
                        for (std::size_t c = 0; c < d; ++c)
                            dw[c] = sqrt_h * rng_w.normal(p, static_cast<std::uint32_t>(i),
                                                          static_cast<std::uint32_t>(c));
                        break;
                    case MixingSchedule::Kind::Indicator: {
                        // Jump points are grid knots, so each interval is
                        // entirely inside or outside (from, to].
                        const bool inside = grid.knots[i] >= schedule.from - 1e-15 &&
                                            grid.knots[i + 1] <= schedule.to + 1e-15;
                        const CounterRng& src = inside ? rng_b : rng_w;
                        for (std::size_t c = 0; c < d; ++c)
                            dw[c] = sqrt_h * src.normal(p, static_cast<std::uint32_t>(i),
                                                        static_cast<std::uint32_t>(c));
                        break;
                    }
                    case MixingSchedule::Kind::Custom: {
                        const double mid = 0.5 * (grid.knots[i] + grid.knots[i + 1]);
                        const double e = schedule.value(mid);
                        const double wa = std::sqrt(std::max(0.0, 1.0 - e * e));
                        for (std::size_t c = 0; c < d; ++c) {
                            const double zw = rng_w.normal(p, static_cast<std::uint32_t>(i),
                                                           static_cast<std::uint32_t>(c));
                            const double zb = rng_b.normal(p, static_cast<std::uint32_t>(i),
                                                           static_cast<std::uint32_t>(c));
                            dw[c] = sqrt_h * (wa * zw + e * zb);
                        }
                        break;
                    }
                }
            }
        }
    });
}

void evolve_states(PathEnsemble& ens, const ForwardModel& model, bool with_flow) {
    const TimeNet& grid = ens.grid();
    const std::size_t d = ens.dimension();
    const Stepper stepper{model, grid};
    const FlowStepper flow_stepper{model, grid};

    parallel_for(ens.n_paths(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            auto x0 = ens.mutable_state(p, 0);
            std::copy(model.x0.begin(), model.x0.end(), x0.begin());
            if (with_flow) flow_stepper.init(ens.mutable_flow(p, 0));
            for (std::size_t i = 0; i + 1 < grid.num_knots(); ++i) {
                const auto x = ens.state(p, i);
                const auto dw = ens.increment(p, i);
                auto x_next = ens.mutable_state(p, i + 1);
                stepper.step(i, x, dw, x_next, p);
                if (with_flow)
                    flow_stepper.step(i, x, x_next, dw, ens.flow(p, i), ens.mutable_flow(p, i + 1));
            }
            (void)d;
        }
    });
}

} // namespace

PathEnsemble simulate(const ForwardModel& model, const TimeNet& grid, std::size_t n_paths,
                      std::uint64_t seed, bool with_flow) {
    model.validate();
    PathEnsemble ens(grid, n_paths, model.dimension, seed, with_flow);
    fill_increments(ens, MixingSchedule::zero(), NoiseMode::Plain);
    evolve_states(ens, model, with_flow);
    return ens;
}

MixedPathPair simulate_mixed(const ForwardModel& model, const TimeNet& grid,
                             const MixingSchedule& schedule, std::size_t n_paths,
                             std::uint64_t seed, bool with_flow) {
    model.validate();
    TimeNet effective = grid;
    if (schedule.kind == MixingSchedule::Kind::Indicator) {
        if (schedule.from < 0.0 || schedule.to > grid.horizon() + 1e-15)
            throw domain_error("simulate_mixed: indicator endpoints outside [0, r_L]");
        std::vector<double> extra{0.0};
        if (schedule.from > 0.0) extra.push_back(schedule.from);
        if (schedule.to < grid.horizon()) extra.push_back(schedule.to);
        extra.push_back(grid.horizon());
        std::sort(extra.begin(), extra.end());
        extra.erase(std::unique(extra.begin(), extra.end()), extra.end());
        effective = merge_nets(grid, TimeNet(extra, {}));
    }

    PathEnsemble base(effective, n_paths, model.dimension, seed, with_flow);
    fill_increments(base, schedule, NoiseMode::Plain);
    evolve_states(base, model, with_flow);

    PathEnsemble mixed(effective, n_paths, model.dimension, seed, with_flow);
    fill_increments(mixed, schedule, NoiseMode::Mixed);
    evolve_states(mixed, model, with_flow);

    return MixedPathPair{std::move(base), std::move(mixed), schedule};
}

std::vector<double> malliavin_weight_order1(const PathEnsemble& ensemble,
                                            const ForwardModel& model, std::size_t r_index,
                                            std::size_t R_index) {
    if (!ensemble.has_flow())
        throw argument_error("malliavin_weight_order1: ensemble carries no flow data");
    if (r_index >= R_index || R_index >= ensemble.grid().num_knots())
        throw argument_error("malliavin_weight_order1: need r_index < R_index within the grid");

    const TimeNet& grid = ensemble.grid();
    const std::size_t d = ensemble.dimension();
    const double span_rR = grid.knots[R_index] - grid.knots[r_index];
    std::vector<double> out(ensemble.n_paths() * d, 0.0);

    if (model.kind == ModelKind::Brownian) {
        // sigma = I and flow = I: the integral collapses to the increment sum,
        // bitwise-equal to (W_R - W_r) / (R - r).
        parallel_for(ensemble.n_paths(), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t p = lo; p < hi; ++p) {
                for (std::size_t i = r_index; i < R_index; ++i) {
                    const auto dw = ensemble.increment(p, i);
                    for (std::size_t c = 0; c < d; ++c) out[p * d + c] += dw[c];
                }
                for (std::size_t c = 0; c < d; ++c) out[p * d + c] /= span_rR;
            }
        });
        return out;
    }

    parallel_for(ensemble.n_paths(), [&](std::size_t lo, std::size_t hi) {
        std::vector<double> sig(d * d);
        Eigen::MatrixXd M(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        for (std::size_t p = lo; p < hi; ++p) {
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                           Eigen::RowMajor>>
                flow_r(ensemble.flow(p, r_index).data(), static_cast<Eigen::Index>(d),
                       static_cast<Eigen::Index>(d));
            // Solving flow_r^T Y = flow_i^T gives Y^T = flow_i flow_r^{-1}.
            Eigen::PartialPivLU<Eigen::MatrixXd> flow_rT_lu(flow_r.transpose());
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
            for (std::size_t i = r_index; i < R_index; ++i) {
                const double t = grid.knots[i];
                model.diffusion(t, ensemble.state(p, i), sig);
                Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>
                    S(sig.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
                Eigen::PartialPivLU<Eigen::MatrixXd> lu(S);
                if (std::abs(lu.determinant()) < 1e-14) {
                    std::ostringstream msg;
                    msg << "malliavin_weight_order1: singular sigma at path " << p << ", knot "
                        << i;
                    throw simulation_error(msg.str());
                }
                Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>
                    flow_i(ensemble.flow(p, i).data(), static_cast<Eigen::Index>(d),
                           static_cast<Eigen::Index>(d));
                // M = sigma^{-1} flow_i flow_r^{-1}; accumulate M^T dW.
                M = lu.solve(flow_rT_lu.solve(flow_i.transpose()).transpose());
                Eigen::Map<const Eigen::VectorXd> dw(ensemble.increment(p, i).data(),
                                                     static_cast<Eigen::Index>(d));
                acc += M.transpose() * dw;
            }
            for (std::size_t c = 0; c < d; ++c)
                out[p * d + c] = acc(static_cast<Eigen::Index>(c)) / span_rR;
        }
    });
    return out;
}

} // namespace bfnet
