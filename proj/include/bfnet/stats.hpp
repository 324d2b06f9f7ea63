#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bfnet/errors.hpp"

namespace bfnet {

/// Empirical L_p norm ((1/M) sum |v|^p)^(1/p).
inline double p_norm(std::span<const double> values, double p) {
    if (values.empty()) throw argument_error("p_norm: empty sample");
    double acc = 0.0;
    if (p == 2.0) {
        for (double v : values) acc += v * v;
    } else {
        for (double v : values) acc += std::pow(std::abs(v), p);
    }
    return std::pow(acc / static_cast<double>(values.size()), 1.0 / p);
}

struct NormEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// p-norm with a block-jackknife standard error (32 contiguous blocks by
/// default). Contiguous blocks keep the estimate independent of thread count.
inline NormEstimate p_norm_jackknife(std::span<const double> values, double p,
                                     std::size_t blocks = 32) {
    const std::size_t n = values.size();
    if (n == 0) throw argument_error("p_norm_jackknife: empty sample");
    if (blocks < 2 || n < 2 * blocks) return {p_norm(values, p), 0.0};

    std::vector<double> block_pow(blocks, 0.0);
    std::vector<std::size_t> block_count(blocks, 0);
    const std::size_t per = (n + blocks - 1) / blocks;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = (p == 2.0) ? values[i] * values[i] : std::pow(std::abs(values[i]), p);
        const std::size_t b = i / per;
        block_pow[b] += a;
        block_count[b] += 1;
        total += a;
    }
    const double full = std::pow(total / static_cast<double>(n), 1.0 / p);
    double mean_loo = 0.0;
    std::vector<double> loo(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        const double rest = total - block_pow[b];
        const std::size_t m = n - block_count[b];
        loo[b] = std::pow(rest / static_cast<double>(m), 1.0 / p);
        mean_loo += loo[b];
    }
    mean_loo /= static_cast<double>(blocks);
    double var = 0.0;
    for (double v : loo) var += (v - mean_loo) * (v - mean_loo);
    var *= static_cast<double>(blocks - 1) / static_cast<double>(blocks);
    return {full, std::sqrt(var)};
}

/// Sample mean with its standard error.
inline NormEstimate mean_with_se(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) throw argument_error("mean_with_se: empty sample");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n > 1 ? n - 1 : 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};

/// Ordinary least squares y = a + b x with the textbook slope standard error.
inline SlopeFit fit_line(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n != ys.size() || n < 2) throw argument_error("fit_line: need >= 2 matched points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw argument_error("fit_line: degenerate abscissae");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = ys[i] - fit.intercept - fit.slope * xs[i];
            sse += r * r;
        }
        fit.slope_se = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    }
    return fit;
}

} // namespace bfnet
