#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bfnet/errors.hpp"

namespace bfnet {

/// Least-squares projection setup realizing the conditional expectations
/// E(. | F_{t_i}) of the backward schemes.
struct RegressionConfig {
    enum class Basis { GlobalPoly, PiecewiseLinear, Hermite };
    Basis basis = Basis::GlobalPoly;
    std::size_t degree = 3; // GlobalPoly
    std::size_t bins = 32;  // PiecewiseLinear hat functions over bins cells
    std::size_t order = 3;  // Hermite
    /// Ridge parameter; negative means the default 1e-8 * trace(G)/cols.
    double ridge = -1.0;
    /// Append degree-2 terms in each already-observed breakpoint state.
    bool observed_quadratics = true;

    void validate() const {
        if (basis == Basis::GlobalPoly && degree < 1)
            throw validation_error("RegressionConfig: degree must be >= 1");
        if (basis == Basis::PiecewiseLinear && bins < 1)
            throw validation_error("RegressionConfig: bins must be >= 1");
        if (basis == Basis::Hermite && order < 1)
            throw validation_error("RegressionConfig: order must be >= 1");
    }
};

struct RegressionDiagnostics {
    double condition_number = 0.0;
    double residual_norm = 0.0; // empirical L2 of y - X beta
};

/// Number of basis columns the configuration produces for one primary feature
/// plus `observed` already-observed breakpoint features.
std::size_t regression_columns(const RegressionConfig& config, std::size_t observed);

/// One regression step: basis rows are built once from the conditioning
/// features, the Gram matrix is factored once, and any number of targets can
/// be projected. Rows are sparse (piecewise-linear hats touch two entries).
class StepRegression {
public:
    /// features: per-path conditioning values, row-major (n_paths x n_features).
    /// The first `n_primary` features get the full basis; the remaining ones
    /// (already-observed breakpoint states) get linear + quadratic terms.
    StepRegression(const RegressionConfig& config, std::span<const double> features,
                   std::size_t n_paths, std::size_t n_features, std::size_t n_primary);

    std::size_t n_paths() const { return n_paths_; }
    std::size_t n_columns() const { return n_columns_; }
    double condition_number() const { return condition_number_; }

    /// Projects y onto the basis; returns fitted values per path and the
    /// residual norm. Throws conditioning_error when the design is rank
    /// deficient and the ridge is exactly zero.
    std::vector<double> project(std::span<const double> y, double* residual_norm = nullptr) const;

    /// Coefficients of the last call to project (for diagnostics/tests).
    const std::vector<double>& last_coefficients() const { return beta_; }

    /// Evaluates the fitted function of `project`'s result on the stored rows
    /// equals the returned fitted values; this evaluates at a new feature
    /// point (used by pointwise estimators).
    double evaluate(std::span<const double> coefficients,
                    std::span<const double> features_one_path) const;

private:
    void build_rows(std::span<const double> features);
    void basis_row(std::span<const double> features_one_path,
                   std::vector<std::pair<std::size_t, double>>& row) const;

    RegressionConfig config_;
    std::size_t n_paths_ = 0;
    std::size_t n_features_ = 0;
    std::size_t n_primary_ = 0;
    std::size_t n_columns_ = 0;
    // standardization per feature and hat-grid layout
    std::vector<double> shift_, scale_;
    double hat_lo_ = 0.0, hat_width_ = 1.0;
    // sparse rows: (column, value), fixed nnz per row
    std::size_t nnz_per_row_ = 0;
    std::vector<std::pair<std::size_t, double>> rows_;
    std::vector<double> gram_;     // dense column-major Gram with ridge
    std::vector<double> factor_;   // Cholesky factor
    double condition_number_ = 0.0;
    double applied_ridge_ = 0.0;
    mutable std::vector<double> beta_;
};

} // namespace bfnet
