#include "bfnet/gaussian_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bfnet/quadrature.hpp"

namespace bfnet {

TerminalFunction1D TerminalFunction1D::indicator(double strike) {
    TerminalFunction1D g;
    g.tag_ = Tag::Indicator;
    g.param_ = strike;
    g.growth_degree_ = 0.0;
    g.singular_ = {strike};
    g.fn_ = [strike](double x) { return x >= strike ? 1.0 : 0.0; };
    return g;
}

TerminalFunction1D TerminalFunction1D::power(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw validation_error("TerminalFunction1D: power alpha must lie in (0, 1)");
    TerminalFunction1D g;
    g.tag_ = Tag::Power;
    g.param_ = alpha;
    g.growth_degree_ = alpha;
    g.singular_ = {0.0};
    g.fn_ = [alpha](double x) { return x >= 0.0 ? std::pow(x, alpha) : 0.0; };
    return g;
}

TerminalFunction1D TerminalFunction1D::hermite(unsigned order) {
    TerminalFunction1D g;
    g.tag_ = Tag::Hermite;
    g.order_ = order;
    g.growth_degree_ = static_cast<double>(order);
    g.fn_ = [order](double x) { return hermite_orthonormal(order, x); };
    return g;
}

TerminalFunction1D TerminalFunction1D::custom(std::function<double(double)> fn,
                                              std::vector<double> singular_points,
                                              double growth_degree) {
    TerminalFunction1D g;
    g.tag_ = Tag::Custom;
    g.growth_degree_ = growth_degree;
    g.singular_ = std::move(singular_points);
    std::sort(g.singular_.begin(), g.singular_.end());
    g.fn_ = std::move(fn);
    return g;
}

std::string TerminalFunction1D::describe() const {
    std::ostringstream out;
    switch (tag_) {
        case Tag::Indicator:
            out << "indicator:" << param_;
            break;
        case Tag::Power:
            out << "power:" << param_;
            break;
        case Tag::Hermite:
            out << (order_ == 1 ? "linear" : "hermite:");
            if (order_ != 1) out << order_;
            break;
        case Tag::Custom:
            out << "custom";
            break;
    }
    return out.str();
}

double hermite_orthonormal(unsigned n, double x) {
    double h0 = 1.0;
    if (n == 0) return h0;
    double h1 = x;
    for (unsigned k = 1; k < n; ++k) {
        const double h2 = (x * h1 - std::sqrt(static_cast<double>(k)) * h0) /
                          std::sqrt(static_cast<double>(k + 1));
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

void hermite_scaled_all(unsigned max_order, double x, std::vector<double>& out) {
    out.resize(max_order + 1);
    out[0] = std::exp(-0.25 * x * x);
    if (max_order == 0) return;
    out[1] = x * out[0];
    for (unsigned k = 1; k < max_order; ++k) {
        out[k + 1] = (x * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
                     std::sqrt(static_cast<double>(k + 1));
    }
}

double HermiteExpansion::parseval_sum() const {
    double acc = 0.0;
    for (double a : coefficients) acc += a * a;
    return acc;
}

namespace {

void finalize_tail(HermiteExpansion& exp) {
    exp.tail_mass = 0.0;
    const std::size_t n = exp.coefficients.size();
    const std::size_t lo = n > 8 ? n - 8 : 0;
    for (std::size_t i = lo; i < n; ++i)
        exp.tail_mass += exp.coefficients[i] * exp.coefficients[i];
}

} // namespace

HermiteExpansion expand(const TerminalFunction1D& g, std::size_t N,
                        std::size_t quadrature_nodes) {
    if (quadrature_nodes < 2 * N)
        throw argument_error("expand: quadrature_nodes must be >= 2N");

    HermiteExpansion exp;
    exp.order = N;
    exp.coefficients.assign(N + 1, 0.0);

    if (g.tag() == TerminalFunction1D::Tag::Hermite) {
        // Orthonormality makes the expansion a unit vector.
        if (g.hermite_order() <= N) exp.coefficients[g.hermite_order()] = 1.0;
        finalize_tail(exp);
        return exp;
    }

    // Mesh sized to the fastest Hermite oscillation present; the density
    // knob follows `quadrature_nodes` so node-doubling gives error estimates.
    const double wavelength = std::numbers::pi / std::sqrt(static_cast<double>(N + 1));
    const double density = static_cast<double>(quadrature_nodes) / 256.0;
    PanelMesh::Options opt;
    opt.max_width = std::min(0.5, 0.5 * wavelength) / std::max(1.0, density);
    opt.floor_width =
        g.needs_endpoint_grading() ? 1e-12 : opt.max_width;
    const double radius = 14.0;
    PanelMesh mesh(-radius, radius, g.singular_points(), opt);

    const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    std::vector<double> scaled;
    auto nodes = mesh.nodes();
    auto weights = mesh.weights();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double x = nodes[i];
        const double gx = g(x);
        if (gx == 0.0) continue;
        if (!std::isfinite(gx)) throw numeric_error("expand: terminal function overflowed");
        // Faster-than-polynomial growth defeats the Gaussian weight; the
        // integral does not exist and the node sums are meaningless.
        if (std::abs(gx) * std::exp(-0.25 * x * x) > 1e8)
            throw numeric_error("expand: quadrature overflow on fast-growing terminal function");
        hermite_scaled_all(static_cast<unsigned>(N), x, scaled);
        // h_n(x) * gamma_1(x) = scaled_n(x) * exp(-x^2/4) / sqrt(2 pi)
        const double w = weights[i] * gx * std::exp(-0.25 * x * x) * inv_sqrt2pi;
        for (std::size_t n = 0; n <= N; ++n) exp.coefficients[n] += w * scaled[n];
    }
    if (!std::isfinite(exp.parseval_sum()))
        throw numeric_error("expand: quadrature overflow on fast-growing terminal function");
    finalize_tail(exp);
    return exp;
}

HermiteExpansion indicator_expansion(double strike, std::size_t N) {
    HermiteExpansion exp;
    exp.order = N;
    exp.coefficients.assign(N + 1, 0.0);
    exp.coefficients[0] = 1.0 - normal_cdf(strike);
    const double density = normal_pdf(strike);
    // e_n = h_n(strike) via the orthonormal recurrence; alpha_{n} uses
    // integration by parts: int_K^inf h_n dgamma = phi(K) h_{n-1}(K)/sqrt(n).
    double e_prev = 1.0;
    double e_curr = strike;
    if (N >= 1) exp.coefficients[1] = density * e_prev;
    if (N >= 2) exp.coefficients[2] = density * e_curr / std::sqrt(2.0);
    for (std::size_t n = 3; n <= N; ++n) {
        const double k = static_cast<double>(n - 2);
        const double e_next = (strike * e_curr - std::sqrt(k) * e_prev) / std::sqrt(k + 1.0);
        e_prev = e_curr;
        e_curr = e_next;
        exp.coefficients[n] = density * e_curr / std::sqrt(static_cast<double>(n));
    }
    finalize_tail(exp);
    return exp;
}

namespace {

void require_unit_time(double t, const char* op) {
    if (!(t >= 0.0) || !(t < 1.0)) {
        std::ostringstream msg;
        msg << op << ": t must lie in [0, 1), got " << t;
        throw domain_error(msg.str());
    }
}

} // namespace

double z_increment_l2(const HermiteExpansion& exp, double s, double t) {
    if (!(s >= 0.0) || !(s <= t)) throw domain_error("z_increment_l2: need 0 <= s <= t");
    require_unit_time(t, "z_increment_l2");
    double acc = 0.0;
    double t_pow = t;  // t^{n+1}
    double s_pow = s;
    for (std::size_t n = 0; n + 2 <= exp.order; ++n) {
        const double a = exp.coefficients[n + 2];
        const double dn = static_cast<double>(n);
        acc += a * a * (dn + 2.0) * (dn + 1.0) * (t_pow - s_pow) / (dn + 1.0);
        t_pow *= t;
        s_pow *= s;
    }
    return std::sqrt(std::max(0.0, acc));
}

double z_norm_l2(const HermiteExpansion& exp, double t) {
    require_unit_time(t, "z_norm_l2");
    double acc = 0.0;
    double t_pow = 1.0;
    for (std::size_t n = 0; n + 1 <= exp.order; ++n) {
        const double a = exp.coefficients[n + 1];
        acc += a * a * (static_cast<double>(n) + 1.0) * t_pow;
        t_pow *= t;
    }
    return std::sqrt(acc);
}

double y_residual_l2(const HermiteExpansion& exp, double s) {
    require_unit_time(s, "y_residual_l2");
    double acc = 0.0;
    double s_pow = s;
    for (std::size_t n = 1; n <= exp.order; ++n) {
        const double a = exp.coefficients[n];
        acc += a * a * (1.0 - s_pow);
        s_pow *= s;
    }
    return std::sqrt(std::max(0.0, acc));
}

double d2f_norm_l2(const HermiteExpansion& exp, double t) {
    require_unit_time(t, "d2f_norm_l2");
    double acc = 0.0;
    double t_pow = 1.0;
    for (std::size_t n = 0; n + 2 <= exp.order; ++n) {
        const double a = exp.coefficients[n + 2];
        acc += a * a * (static_cast<double>(n) + 2.0) * (static_cast<double>(n) + 1.0) * t_pow;
        t_pow *= t;
    }
    return std::sqrt(acc);
}

double c5_integral_l2(const HermiteExpansion& exp, double t) {
    require_unit_time(t, "c5_integral_l2");
    double acc = 0.0;
    double t_pow = t;
    for (std::size_t n = 0; n + 2 <= exp.order; ++n) {
        const double a = exp.coefficients[n + 2];
        acc += a * a * (static_cast<double>(n) + 2.0) * t_pow;
        t_pow *= t;
    }
    return std::sqrt(acc);
}

namespace {

// One evaluation of || g(W_1) - E(g(W_1)|F_t) ||_p at a given mesh refinement.
// Hand-rolled nesting: the inner mesh is rebuilt per outer node (its features
// sit at y - x), but g is evaluated once per inner node and reused for the
// conditional mean and the centered p-th moment.
double residual_norm_once(const TerminalFunction1D& g, double t, double p, int refinement) {
    const double s = 1.0 - t;
    const auto& sing = g.singular_points();
    const bool even_p = std::abs(p - 2.0 * std::round(p / 2.0)) < 1e-12;
    const int half_p = static_cast<int>(std::round(p / 2.0));

    const double sigma_v = std::sqrt(s);
    const double inner_floor =
        g.needs_endpoint_grading() ? 1e-7 * sigma_v : 0.5 * sigma_v / refinement;
    PanelMesh::Options inner_opt;
    inner_opt.max_width = 0.75 * sigma_v / refinement;
    inner_opt.floor_width = std::min(inner_floor, inner_opt.max_width);

    std::vector<double> feats(sing.size());
    std::vector<double> g_cache;
    auto rho = [&](double x) {
        for (std::size_t i = 0; i < sing.size(); ++i) feats[i] = sing[i] - x;
        PanelMesh inner(-10.0 * sigma_v, 10.0 * sigma_v, feats, inner_opt);
        auto vn = inner.nodes();
        auto vw = inner.weights();
        g_cache.resize(vn.size());
        double mean = 0.0;
        for (std::size_t i = 0; i < vn.size(); ++i) {
            g_cache[i] = g(x + vn[i]);
            mean += vw[i] * g_cache[i] * normal_pdf(vn[i], 0.0, s);
        }
        double moment = 0.0;
        for (std::size_t i = 0; i < vn.size(); ++i) {
            const double d = g_cache[i] - mean;
            double dp;
            if (even_p) {
                const double d2 = d * d;
                dp = d2;
                for (int k = 1; k < half_p; ++k) dp *= d2;
            } else {
                dp = std::pow(std::abs(d), p);
            }
            moment += vw[i] * dp * normal_pdf(vn[i], 0.0, s);
        }
        return moment;
    };

    // Outer over W_t ~ N(0, t): the residual concentrates in windows of width
    // ~ sqrt(s) around g's singular points.
    double moment;
    if (t == 0.0) {
        moment = rho(0.0);
    } else {
        const double sigma_x = std::sqrt(t);
        PanelMesh::Options outer_opt;
        outer_opt.max_width = 0.75 * sigma_x / refinement;
        outer_opt.floor_width = std::min(0.5 * sigma_v / refinement, outer_opt.max_width);
        PanelMesh outer(-10.0 * sigma_x, 10.0 * sigma_x, sing, outer_opt);
        auto xn = outer.nodes();
        auto xw = outer.weights();
        moment = 0.0;
        for (std::size_t i = 0; i < xn.size(); ++i)
            moment += xw[i] * rho(xn[i]) * normal_pdf(xn[i], 0.0, t);
    }
    if (!std::isfinite(moment))
        throw numeric_error("cond_residual_norm: quadrature overflowed");
    return std::pow(std::max(0.0, moment), 1.0 / p);
}

} // namespace

QuadValue cond_residual_norm(const TerminalFunction1D& g, double t, double p) {
    if (p < 2.0) throw argument_error("cond_residual_norm: p must be >= 2");
    require_unit_time(t, "cond_residual_norm");
    QuadValue out;
    out.value = residual_norm_once(g, t, p, 2);
    const double coarse = residual_norm_once(g, t, p, 1);
    out.error_estimate = std::abs(out.value - coarse);
    return out;
}

HeatKernelValue heat_kernel_F(const TerminalFunction1D& g, double t, double x) {
    HeatKernelValue out;
    if (t > 1.0) throw domain_error("heat_kernel_F: t must be <= 1");
    const double s = 1.0 - t;
    if (s < 1e-12) {
        if (!g.singular_points().empty())
            throw domain_error("heat_kernel_F: derivatives singular at t = 1 for this g");
        const double h = 1e-5;
        out.value = g(x);
        out.gradient = (g(x + h) - g(x - h)) / (2.0 * h);
        out.hessian = (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h);
        return out;
    }
    const auto& sing = g.singular_points();
    const bool grade = g.needs_endpoint_grading();
    // F and its derivatives as integrals of g against kernel derivatives in y,
    // with y centered at x and variance s.
    out.value = gaussian_weighted_integral([&](double y) { return g(y); }, x, s, sing, 0.0,
                                           grade, 2);
    out.gradient = gaussian_weighted_integral(
        [&](double y) { return g(y) * (y - x) / s; }, x, s, sing, 0.0, grade, 2);
    out.hessian = gaussian_weighted_integral(
        [&](double y) { return g(y) * ((y - x) * (y - x) - s) / (s * s); }, x, s, sing, 0.0,
        grade, 2);
    return out;
}

HeatKernelValue heat_kernel_F(const HermiteExpansion& exp, double t, double x) {
    HeatKernelValue out;
    if (!(t > 0.0) || !(t > 1e-12)) {
        // At t = 0 only h_0 and the linear term survive the conditioning.
        out.value = exp.coefficients.empty() ? 0.0 : exp.coefficients[0];
        out.gradient = exp.order >= 1 ? exp.coefficients[1] : 0.0;
        out.hessian = exp.order >= 2 ? exp.coefficients[2] * std::sqrt(2.0) : 0.0;
        return out;
    }
    if (t > 1.0) throw domain_error("heat_kernel_F: t must be <= 1");
    const double u = x / std::sqrt(t);
    std::vector<double> h(exp.order + 1);
    h[0] = 1.0;
    if (exp.order >= 1) h[1] = u;
    for (std::size_t k = 1; k < exp.order; ++k)
        h[k + 1] = (u * h[k] - std::sqrt(static_cast<double>(k)) * h[k - 1]) /
                   std::sqrt(static_cast<double>(k + 1));
    const double sqrt_t = std::sqrt(t);
    double f = 0.0, df = 0.0, d2f = 0.0;
    double pow_n = 1.0; // sqrt(t)^n
    for (std::size_t n = 0; n <= exp.order; ++n) {
        const double a = exp.coefficients[n];
        f += a * pow_n * h[n];
        if (n >= 1) df += a * (pow_n / sqrt_t) * std::sqrt(static_cast<double>(n)) * h[n - 1];
        if (n >= 2)
            d2f += a * (pow_n / t) * std::sqrt(static_cast<double>(n * (n - 1))) * h[n - 2];
        pow_n *= sqrt_t;
    }
    out.value = f;
    out.gradient = df;
    out.hessian = d2f;
    return out;
}

} // namespace bfnet
