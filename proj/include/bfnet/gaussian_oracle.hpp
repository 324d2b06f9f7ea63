#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bfnet/errors.hpp"

namespace bfnet {

/// Scalar terminal function g for the exact oracle case X = W, f = 0, d = 1.
/// Built-in tags carry their singular points so quadrature can mesh around
/// them; custom callables may declare theirs.
class TerminalFunction1D {
public:
    enum class Tag { Indicator, Power, Hermite, Custom };

    static TerminalFunction1D indicator(double strike);
    /// x^alpha for x >= 0, 0 otherwise; requires 0 < alpha < 1 - 1/p for the
    /// p it will be measured with (checked at measurement time).
    static TerminalFunction1D power(double alpha);
    static TerminalFunction1D hermite(unsigned order);
    static TerminalFunction1D linear() { return hermite(1); }
    static TerminalFunction1D custom(std::function<double(double)> fn,
                                     std::vector<double> singular_points = {},
                                     double growth_degree = 4.0);

    double operator()(double x) const { return fn_(x); }
    Tag tag() const { return tag_; }
    double strike() const { return param_; }
    double alpha() const { return param_; }
    unsigned hermite_order() const { return order_; }
    const std::vector<double>& singular_points() const { return singular_; }
    /// True when the function has an algebraic (non-jump) singularity, which
    /// asks for meshes graded all the way into the point.
    bool needs_endpoint_grading() const { return tag_ == Tag::Power || tag_ == Tag::Custom; }
    double growth_degree() const { return growth_degree_; }
    std::string describe() const;

private:
    TerminalFunction1D() = default;
    Tag tag_ = Tag::Custom;
    double param_ = 0.0;
    unsigned order_ = 0;
    double growth_degree_ = 0.0;
    std::vector<double> singular_;
    std::function<double(double)> fn_;
};

/// Orthonormal Hermite polynomial h_n (L_2(R, gamma_1) basis) and its
/// exp(-x^2/4)-scaled variant, safe for large n and |x|.
double hermite_orthonormal(unsigned n, double x);
void hermite_scaled_all(unsigned max_order, double x, std::vector<double>& out);

/// Coefficients of g in the orthonormal Hermite basis: g = sum alpha_n h_n.
struct HermiteExpansion {
    std::vector<double> coefficients; // alpha_0 .. alpha_N
    std::size_t order = 0;            // N
    double tail_mass = 0.0;           // sum of the last 8 alpha_n^2

    std::size_t size() const { return coefficients.size(); }

    /// Crude upper bound for the dropped mass sum_{n>N} alpha_n^2, valid for
    /// power-law coefficient decay: N * tail_mass. Zero for finite expansions.
    double truncation_bound() const {
        return tail_mass * static_cast<double>(order == 0 ? 1 : order);
    }

    double parseval_sum() const;
};

/// alpha_n = integral of g * h_n against gamma_1, by deterministic
/// singularity-aware panel quadrature; `quadrature_nodes` scales the mesh
/// density (>= 2N per the contract).
HermiteExpansion expand(const TerminalFunction1D& g, std::size_t N,
                        std::size_t quadrature_nodes = 256);

/// Exact coefficients of the indicator chi_[K, inf):
/// alpha_0 = 1 - Phi(K), alpha_n = phi(K) h_{n-1}(K) / sqrt(n) for n >= 1.
/// Supports the large N needed for series evaluation near t = 1.
HermiteExpansion indicator_expansion(double strike, std::size_t N);

/// || Z_t - Z_s ||_2 = sqrt( sum_n alpha_{n+2}^2 (n+2)(n+1) (t^{n+1}-s^{n+1})/(n+1) )
/// for X = W, f = 0 on [0, 1); requires 0 <= s <= t < 1.
double z_increment_l2(const HermiteExpansion& exp, double s, double t);

/// || Z_t ||_2 = sqrt( sum_n alpha_{n+1}^2 (n+1) t^n ), t in [0, 1).
double z_norm_l2(const HermiteExpansion& exp, double t);

/// || Y_1 - E(Y_1|F_s) ||_2 = sqrt( sum_{n>=1} alpha_n^2 (1 - s^n) ).
double y_residual_l2(const HermiteExpansion& exp, double s);

/// || D^2 F(t, W_t) ||_2 = sqrt( sum_n alpha_{n+2}^2 (n+2)(n+1) t^n ).
double d2f_norm_l2(const HermiteExpansion& exp, double t);

/// || ( int_0^t |D^2 F(s, W_s)|^2 ds )^(1/2) ||_2 = sqrt( sum alpha_{n+2}^2 (n+2) t^{n+1} ).
double c5_integral_l2(const HermiteExpansion& exp, double t);

struct QuadValue {
    double value = 0.0;
    double error_estimate = 0.0;
};

/// || g(W_1) - E(g(W_1)|F_t) ||_p by nested deterministic quadrature
/// (outer over W_t, inner over the bridge increment). Even integer p are the
/// fast path; other p >= 2 integrate |.|^p directly and converge more slowly.
QuadValue cond_residual_norm(const TerminalFunction1D& g, double t, double p);

struct HeatKernelValue {
    double value = 0.0;     // F(t, x) = E g(x + W_{1-t})
    double gradient = 0.0;  // d/dx F
    double hessian = 0.0;   // d^2/dx^2 F
};

/// Heat-kernel extension of g and its first two space derivatives, by
/// quadrature against the Gaussian kernel and its derivatives.
HeatKernelValue heat_kernel_F(const TerminalFunction1D& g, double t, double x);

/// Same quantities from a Hermite expansion (series route, cross-validation):
/// F(t, x) = sum alpha_n t^{n/2} h_n(x / sqrt(t)).
HeatKernelValue heat_kernel_F(const HermiteExpansion& exp, double t, double x);

} // namespace bfnet
