#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "kpart/errors.hpp"

namespace kpart {

/// Dense column-major matrix of doubles. Sized for the small regression
/// problems this library deals in (n in the tens, p below ~25).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

    double* col(std::size_t j) { return data_.data() + j * rows_; }
    const double* col(std::size_t j) const { return data_.data() + j * rows_; }
    std::span<const double> col_span(std::size_t j) const { return {col(j), rows_}; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

inline std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.cols()) throw contract_error("matvec: dimension mismatch");
    std::vector<double> out(a.rows(), 0.0);
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const double* c = a.col(j);
        const double xj = x[j];
        for (std::size_t i = 0; i < a.rows(); ++i) out[i] += c[i] * xj;
    }
    return out;
}

/// Householder QR with column pivoting, A*P = Q*R. Rank is decided by the
/// relative pivot rule |r_kk| > rel_tol * |r_00|; pivoting makes the diagonal
/// of R non-increasing in magnitude, so the first failing diagonal bounds the
/// numerical rank. Everything is sequential double arithmetic, so repeated
/// factorizations of the same matrix are bitwise identical.
class PivotedQr {
public:
    explicit PivotedQr(Matrix a, double rel_tol = 1e-10)
        : qr_(std::move(a)), tau_(qr_.cols(), 0.0), perm_(qr_.cols()) {
        const std::size_t m = qr_.rows(), n = qr_.cols();
        for (std::size_t j = 0; j < n; ++j) perm_[j] = j;

        const std::size_t steps = std::min(m, n);
        for (std::size_t k = 0; k < steps; ++k) {
            // Fresh trailing column norms; cheap at these sizes and immune to
            // the cancellation that plagues norm downdating.
            std::size_t pivot = k;
            double best = -1.0;
            for (std::size_t j = k; j < n; ++j) {
                double s = 0.0;
                const double* c = qr_.col(j);
                for (std::size_t i = k; i < m; ++i) s += c[i] * c[i];
                if (s > best) {
                    best = s;
                    pivot = j;
                }
            }
            if (pivot != k) {
                for (std::size_t i = 0; i < m; ++i) std::swap(qr_(i, k), qr_(i, pivot));
                std::swap(perm_[k], perm_[pivot]);
            }

            double norm = std::sqrt(best < 0.0 ? 0.0 : best);
            if (norm == 0.0) {
                tau_[k] = 0.0;
                continue;
            }
            double* ck = qr_.col(k);
            const double x0 = ck[k];
            const double alpha = x0 >= 0.0 ? -norm : norm;
            const double v0 = x0 - alpha;
            double vtv = v0 * v0;
            for (std::size_t i = k + 1; i < m; ++i) vtv += ck[i] * ck[i];
            // Store w = v / v0 below the diagonal (w0 == 1 implicit).
            for (std::size_t i = k + 1; i < m; ++i) ck[i] /= v0;
            tau_[k] = 2.0 * v0 * v0 / vtv;
            ck[k] = alpha;

            for (std::size_t j = k + 1; j < n; ++j) {
                double* cj = qr_.col(j);
                double dot = cj[k];
                for (std::size_t i = k + 1; i < m; ++i) dot += ck[i] * cj[i];
                const double f = tau_[k] * dot;
                cj[k] -= f;
                for (std::size_t i = k + 1; i < m; ++i) cj[i] -= f * ck[i];
            }
        }

        const double r00 = steps > 0 ? std::fabs(qr_(0, 0)) : 0.0;
        rank_ = 0;
        for (std::size_t k = 0; k < steps; ++k) {
            if (std::fabs(qr_(k, k)) <= rel_tol * r00) break;
            ++rank_;
        }
    }

    std::size_t rows() const { return qr_.rows(); }
    std::size_t cols() const { return qr_.cols(); }
    std::size_t rank() const { return rank_; }
    const std::vector<std::size_t>& permutation() const { return perm_; }

    /// Original indices of the columns the pivot rule classified as
    /// numerically dependent, sorted ascending.
    std::vector<std::size_t> dependent_columns() const {
        std::vector<std::size_t> out(perm_.begin() + rank_, perm_.end());
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Least-squares solution of the full-column-rank system.
    std::vector<double> solve(std::span<const double> y) const {
        const std::size_t m = qr_.rows(), n = qr_.cols();
        if (y.size() != m) throw contract_error("PivotedQr::solve: rhs length mismatch");
        if (rank_ < n) throw contract_error("PivotedQr::solve: matrix is rank deficient");

        std::vector<double> z(y.begin(), y.end());
        for (std::size_t k = 0; k < std::min(m, n); ++k) {
            if (tau_[k] == 0.0) continue;
            const double* ck = qr_.col(k);
            double dot = z[k];
            for (std::size_t i = k + 1; i < m; ++i) dot += ck[i] * z[i];
            const double f = tau_[k] * dot;
            z[k] -= f;
            for (std::size_t i = k + 1; i < m; ++i) z[i] -= f * ck[i];
        }

        std::vector<double> beta(n, 0.0);
        for (std::size_t k = n; k-- > 0;) {
            double s = z[k];
            for (std::size_t j = k + 1; j < n; ++j) s -= qr_(k, j) * beta[j];
            beta[k] = s / qr_(k, k);
        }

        std::vector<double> out(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) out[perm_[k]] = beta[k];
        return out;
    }

    /// Diagonal of (A'A)^{-1} in original column order, via R^{-1}.
    std::vector<double> normal_inverse_diagonal() const {
        const std::size_t n = qr_.cols();
        if (rank_ < n)
            throw contract_error("PivotedQr: normal inverse needs full column rank");
        // Solve R * Rinv = I column by column.
        Matrix rinv(n, n);
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t k = c + 1; k-- > 0;) {
                double s = (k == c) ? 1.0 : 0.0;
                for (std::size_t j = k + 1; j <= c; ++j) s -= qr_(k, j) * rinv(j, c);
                rinv(k, c) = s / qr_(k, k);
            }
        }
        std::vector<double> diag(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            double s = 0.0;
            for (std::size_t c = k; c < n; ++c) s += rinv(k, c) * rinv(k, c);
            diag[perm_[k]] = s;
        }
        return diag;
    }

private:
    Matrix qr_;
    std::vector<double> tau_;
    std::vector<std::size_t> perm_;
    std::size_t rank_ = 0;
};

}  // namespace kpart
