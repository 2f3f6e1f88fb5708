#pragma once

#include "lmfcc/core.hpp"
#include "lmfcc/linalg.hpp"

namespace lmfcc::pca {

struct PcaModel {
    Vector mean;
    Matrix components;           // k x d, orthonormal rows
    Vector explained_variance;   // non-increasing
};

/// Eigendecomposition of the sample covariance (n - 1 denominator). Each
/// component is sign-normalized so its first non-negligible entry is positive.
inline PcaModel pca_fit(const Matrix& x, std::size_t k) {
    const std::size_t n = x.rows, d = x.cols;
    if (n < 2) throw std::invalid_argument("pca_fit: need at least two rows");
    if (k < 1 || k > std::min(n, d))
        throw std::invalid_argument("pca_fit: k=" + std::to_string(k) + " exceeds min(rows, cols)=" +
                                    std::to_string(std::min(n, d)));
    PcaModel m{Vector(d, 0.0), Matrix(k, d), Vector(k)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) m.mean[j] += x(i, j);
    for (double& v : m.mean) v /= static_cast<double>(n);

    Matrix cov(d, d);
    Vector c(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) c[j] = x(i, j) - m.mean[j];
        add_outer(cov, c, c);
    }
    for (double& v : cov.data) v /= static_cast<double>(n - 1);

    const auto eig = linalg::symmetric_eigen(cov);
    double scale = 0.0;
    for (double v : eig.values) scale = std::max(scale, std::abs(v));
    for (std::size_t r = 0; r < k; ++r) {
        const std::size_t col = d - 1 - r;  // descending
        m.explained_variance[r] = std::max(0.0, eig.values[col]);
        double sign = 1.0;
        for (std::size_t j = 0; j < d; ++j)
            if (std::abs(eig.vectors(j, col)) > 1e-12) {
                sign = eig.vectors(j, col) < 0.0 ? -1.0 : 1.0;
                break;
            }
        for (std::size_t j = 0; j < d; ++j) m.components(r, j) = sign * eig.vectors(j, col);
    }
    return m;
}

inline Vector pca_transform_row(const PcaModel& m, std::span<const double> row) {
    if (row.size() != m.mean.size()) throw DimensionError("pca_transform: width mismatch");
    Vector centered(row.size()), out(m.components.rows);
    for (std::size_t j = 0; j < row.size(); ++j) centered[j] = row[j] - m.mean[j];
    matvec(m.components, centered, out);
    return out;
}

inline Matrix pca_transform(const PcaModel& m, const Matrix& x) {
    Matrix out(x.rows, m.components.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const Vector r = pca_transform_row(m, x.row(i));
        std::copy(r.begin(), r.end(), out.row(i).begin());
    }
    return out;
}

/// Maps projected rows back to centered input coordinates.
inline Matrix pca_inverse_centered(const PcaModel& m, const Matrix& y) {
    Matrix out(y.rows, m.components.cols);
    for (std::size_t i = 0; i < y.rows; ++i) matvec_t(m.components, y.row(i), out.row(i));
    return out;
}

}  // namespace lmfcc::pca
