#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kpart/basis.hpp"
#include "kpart/errors.hpp"
#include "kpart/linalg.hpp"

namespace kpart {

struct FitResult {
    std::vector<double> coefficients;  // ordered per the design-matrix manifest
    double rss = 0.0;
    double r2 = 0.0;
    double r2_adj = 0.0;
    double sigma2_hat = 0.0;  // RSS / (n - p)
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> t_stats;  // NaN where the standard error vanishes
    std::vector<double> fitted;
};

/// Least squares through the pivoted QR. Requires n >= p + 2 and numerically
/// full column rank (relative pivot threshold 1e-10); a deficient design
/// raises fit_error naming the dependent columns.
inline FitResult fit_ols(const DesignMatrix& design, std::span<const double> y) {
    const std::size_t n = design.rows();
    const std::size_t p = design.cols();
    if (y.size() != n) throw contract_error("fit_ols: y length does not match design rows");
    if (n < p + 2)
        throw fit_error("insufficient data: n=" + std::to_string(n) + " rows for p=" +
                        std::to_string(p) + " columns (need n >= p + 2)");

    const PivotedQr qr(design.values, 1e-10);
    if (qr.rank() < p) {
        std::string cols;
        for (const std::size_t j : qr.dependent_columns()) {
            if (!cols.empty()) cols += ", ";
            cols += design.column_roles[j].label();
        }
        throw fit_error("singular design matrix; dependent columns: " + cols);
    }

    FitResult fit;
    fit.n = n;
    fit.p = p;
    fit.coefficients = qr.solve(y);
    fit.fitted = matvec(design.values, fit.coefficients);

    double mean = 0.0;
    for (const double v : y) mean += v;
    mean /= static_cast<double>(n);
    double tss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - fit.fitted[i];
        fit.rss += e * e;
        const double d = y[i] - mean;
        tss += d * d;
    }

    // TSS at rounding-noise level means a constant response; the convention
    // there is r2 = r2_adj = 0 rather than the 0/0 ratio.
    const double tss_floor = static_cast<double>(n) *
                             std::pow(16.0 * 2.220446049250313e-16 * (std::fabs(mean) + 1.0), 2);
    if (tss > tss_floor) {
        fit.r2 = std::clamp(1.0 - fit.rss / tss, 0.0, 1.0);
        fit.r2_adj = 1.0 - (1.0 - fit.r2) * static_cast<double>(n - 1) /
                               static_cast<double>(n - p);
    } else {
        fit.r2 = 0.0;
        fit.r2_adj = 0.0;
    }
    fit.sigma2_hat = fit.rss / static_cast<double>(n - p);

    const std::vector<double> diag = qr.normal_inverse_diagonal();
    fit.t_stats.reserve(p);
    for (std::size_t j = 0; j < p; ++j) {
        const double se = std::sqrt(std::max(0.0, fit.sigma2_hat * diag[j]));
        fit.t_stats.push_back(se > 0.0 ? fit.coefficients[j] / se
                                       : std::numeric_limits<double>::quiet_NaN());
    }
    return fit;
}

/// Gaussian BIC: n ln(RSS/n) + (p + 1) ln n, the +1 counting the variance
/// parameter. Any monotone variant picks the same subset at fixed n.
inline double bic(double rss, std::size_t n, std::size_t p) {
    if (!(rss > 0.0)) throw contract_error("bic: rss must be positive");
    if (p < 1 || n <= p) throw contract_error("bic: need n > p >= 1");
    const double nn = static_cast<double>(n);
    return nn * std::log(rss / nn) + static_cast<double>(p + 1) * std::log(nn);
}

}  // namespace kpart
