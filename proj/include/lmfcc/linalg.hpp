#pragma once

#include <algorithm>
#include <numeric>

#include "lmfcc/core.hpp"

namespace lmfcc::linalg {

struct SymmetricEigen {
    Vector values;  // ascending
    Matrix vectors; // column j is the eigenvector for values[j]
};

/// Cyclic Jacobi rotations on a symmetric matrix. Accurate to a few ulps of
/// the matrix norm, which is what the PSD and PCA checks need.
inline SymmetricEigen symmetric_eigen(Matrix a, double tol = 1e-15, int max_sweeps = 100) {
    if (a.rows != a.cols) throw DimensionError("symmetric_eigen: matrix is not square");
    const std::size_t n = a.rows;
    Matrix v = Matrix::identity(n);
    double scale = 0.0;
    for (double x : a.data) scale = std::max(scale, std::abs(x));

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= tol * std::max(scale, 1e-300)) break;

        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
    SymmetricEigen out{Vector(n), Matrix(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
    }
    return out;
}

/// Largest singular value via Jacobi on A^T A.
inline double spectral_norm(const Matrix& a) {
    const Matrix ata = matmul(a.transpose(), a);
    const auto eig = symmetric_eigen(ata);
    return eig.values.empty() ? 0.0 : std::sqrt(std::max(0.0, eig.values.back()));
}

}  // namespace lmfcc::linalg
