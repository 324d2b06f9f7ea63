#include "bfnet/regression.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bfnet {

namespace {

// Orthonormal probabilists' Hermite values h_0..h_k at x.
void hermite_values(std::size_t k, double x, std::vector<double>& out) {
    out.resize(k + 1);
    out[0] = 1.0;
    if (k == 0) return;
    out[1] = x;
    for (std::size_t j = 1; j < k; ++j)
        out[j + 1] = (x * out[j] - std::sqrt(static_cast<double>(j)) * out[j - 1]) /
                     std::sqrt(static_cast<double>(j + 1));
}

} // namespace

StepRegression::StepRegression(const RegressionConfig& config, std::span<const double> features,
                               std::size_t n_paths, std::size_t n_features,
                               std::size_t n_primary)
    : config_(config), n_paths_(n_paths), n_features_(n_features), n_primary_(n_primary) {
    config_.validate();
    if (features.size() != n_paths * n_features)
        throw argument_error("StepRegression: feature matrix shape mismatch");
    if (n_primary == 0 || n_primary > n_features)
        throw argument_error("StepRegression: need 1 <= n_primary <= n_features");

    // Standardize every feature; constant columns are left at scale 1 so the
    // system stays rank one in them.
    shift_.assign(n_features_, 0.0);
    scale_.assign(n_features_, 1.0);
    for (std::size_t f = 0; f < n_features_; ++f) {
        double mean = 0.0;
        for (std::size_t p = 0; p < n_paths_; ++p) mean += features[p * n_features_ + f];
        mean /= static_cast<double>(n_paths_);
        double var = 0.0;
        for (std::size_t p = 0; p < n_paths_; ++p) {
            const double d = features[p * n_features_ + f] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n_paths_);
        shift_[f] = mean;
        scale_[f] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }

    // Column layout: primary-feature basis blocks, then quadratic blocks for
    // the observed features.
    std::size_t primary_cols = 0;
    switch (config_.basis) {
        case RegressionConfig::Basis::GlobalPoly:
            primary_cols = 1 + n_primary_ * config_.degree;
            nnz_per_row_ = 1 + n_primary_ * config_.degree;
            break;
        case RegressionConfig::Basis::Hermite:
            primary_cols = 1 + n_primary_ * config_.order;
            nnz_per_row_ = 1 + n_primary_ * config_.order;
            break;
        case RegressionConfig::Basis::PiecewiseLinear:
            // bins cells => bins+1 hat functions per primary feature; hats
            // already span constants, so no separate intercept column.
            primary_cols = n_primary_ * (config_.bins + 1);
            nnz_per_row_ = n_primary_ * 2;
            hat_lo_ = -4.0;
            hat_width_ = 8.0 / static_cast<double>(config_.bins);
            break;
    }
    const std::size_t observed = n_features_ - n_primary_;
    n_columns_ = primary_cols + (config_.observed_quadratics ? 2 * observed : 0);
    nnz_per_row_ += config_.observed_quadratics ? 2 * observed : 0;

    build_rows(features);

    // Gram matrix from the sparse rows, then ridge and Cholesky.
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_columns_),
                                              static_cast<Eigen::Index>(n_columns_));
    for (std::size_t p = 0; p < n_paths_; ++p) {
        const auto* row = &rows_[p * nnz_per_row_];
        for (std::size_t a = 0; a < nnz_per_row_; ++a) {
            if (row[a].second == 0.0) continue;
            for (std::size_t b = a; b < nnz_per_row_; ++b) {
                if (row[b].second == 0.0) continue;
                const double v = row[a].second * row[b].second;
                G(static_cast<Eigen::Index>(row[a].first),
                  static_cast<Eigen::Index>(row[b].first)) += v;
            }
        }
    }
    G = G.selfadjointView<Eigen::Upper>();

    const double trace = G.trace();
    applied_ridge_ = config_.ridge >= 0.0
                         ? config_.ridge
                         : 1e-8 * trace / static_cast<double>(n_columns_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();
    condition_number_ = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    if (applied_ridge_ == 0.0 && (!(lmin > 0.0) || condition_number_ > 1e14)) {
        std::ostringstream msg;
        msg << "StepRegression: design matrix rank-deficient with zero ridge "
            << "(condition number " << condition_number_ << ", " << n_columns_ << " columns, "
            << n_paths_ << " paths)";
        throw conditioning_error(msg.str());
    }
    for (std::size_t c = 0; c < n_columns_; ++c)
        G(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) += applied_ridge_;

    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "StepRegression: Cholesky failed (condition number " << condition_number_ << ")";
        throw conditioning_error(msg.str());
    }
    const Eigen::MatrixXd L = llt.matrixL();
    factor_.assign(n_columns_ * n_columns_, 0.0);
    for (std::size_t i = 0; i < n_columns_; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            factor_[i * n_columns_ + j] =
                L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    gram_.clear();
}

void StepRegression::basis_row(std::span<const double> feat,
                               std::vector<std::pair<std::size_t, double>>& row) const {
    row.clear();
    std::size_t col = 0;
    switch (config_.basis) {
        case RegressionConfig::Basis::GlobalPoly: {
            row.emplace_back(col++, 1.0);
            for (std::size_t f = 0; f < n_primary_; ++f) {
                const double u = (feat[f] - shift_[f]) / scale_[f];
                double pw = u;
                for (std::size_t k = 1; k <= config_.degree; ++k) {
                    row.emplace_back(col++, pw);
                    pw *= u;
                }
            }
            break;
        }
        case RegressionConfig::Basis::Hermite: {
            row.emplace_back(col++, 1.0);
            std::vector<double> h;
            for (std::size_t f = 0; f < n_primary_; ++f) {
                const double u = (feat[f] - shift_[f]) / scale_[f];
                hermite_values(config_.order, u, h);
                for (std::size_t k = 1; k <= config_.order; ++k) row.emplace_back(col++, h[k]);
            }
            break;
        }
        case RegressionConfig::Basis::PiecewiseLinear: {
            for (std::size_t f = 0; f < n_primary_; ++f) {
                const double u = (feat[f] - shift_[f]) / scale_[f];
                const double clamped = std::min(std::max(u, hat_lo_), -hat_lo_ - 1e-12);
                const double pos = (clamped - hat_lo_) / hat_width_;
                const std::size_t cell =
                    std::min(static_cast<std::size_t>(pos), config_.bins - 1);
                const double frac = pos - static_cast<double>(cell);
                row.emplace_back(col + cell, 1.0 - frac);
                row.emplace_back(col + cell + 1, frac);
                col += config_.bins + 1;
            }
            break;
        }
    }
    if (config_.observed_quadratics) {
        for (std::size_t f = n_primary_; f < n_features_; ++f) {
            const double u = (feat[f] - shift_[f]) / scale_[f];
            row.emplace_back(col++, u);
            row.emplace_back(col++, u * u);
        }
    }
}

void StepRegression::build_rows(std::span<const double> features) {
    rows_.assign(n_paths_ * nnz_per_row_, {0, 0.0});
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t p = 0; p < n_paths_; ++p) {
        basis_row(features.subspan(p * n_features_, n_features_), row);
        for (std::size_t a = 0; a < row.size(); ++a) rows_[p * nnz_per_row_ + a] = row[a];
    }
}

std::vector<double> StepRegression::project(std::span<const double> y,
                                            double* residual_norm) const {
    if (y.size() != n_paths_) throw argument_error("StepRegression: target length mismatch");

    // Right-hand side X^T y.
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_columns_));
    for (std::size_t p = 0; p < n_paths_; ++p) {
        const auto* row = &rows_[p * nnz_per_row_];
        for (std::size_t a = 0; a < nnz_per_row_; ++a)
            if (row[a].second != 0.0)
                rhs(static_cast<Eigen::Index>(row[a].first)) += row[a].second * y[p];
    }
    // Solve L L^T beta = rhs with the stored factor.
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> L(
        factor_.data(), static_cast<Eigen::Index>(n_columns_),
        static_cast<Eigen::Index>(n_columns_));
    Eigen::VectorXd beta = L.triangularView<Eigen::Lower>().solve(rhs);
    beta = L.transpose().triangularView<Eigen::Upper>().solve(beta);

    beta_.assign(beta.data(), beta.data() + n_columns_);
    std::vector<double> fitted(n_paths_);
    double sse = 0.0;
    for (std::size_t p = 0; p < n_paths_; ++p) {
        const auto* row = &rows_[p * nnz_per_row_];
        double v = 0.0;
        for (std::size_t a = 0; a < nnz_per_row_; ++a)
            v += row[a].second * beta_[row[a].first];
        fitted[p] = v;
        const double r = y[p] - v;
        sse += r * r;
    }
    if (residual_norm != nullptr)
        *residual_norm = std::sqrt(sse / static_cast<double>(n_paths_));
    return fitted;
}

double StepRegression::evaluate(std::span<const double> coefficients,
                                std::span<const double> features_one_path) const {
    if (coefficients.size() != n_columns_)
        throw argument_error("StepRegression: coefficient length mismatch");
    std::vector<std::pair<std::size_t, double>> row;
    basis_row(features_one_path, row);
    double v = 0.0;
    for (const auto& [col, val] : row) v += val * coefficients[col];
    return v;
}

} // namespace bfnet
