#pragma once

// Learnable Mel filter bank M, log compression, the adaptive cepstral
// projection P (initialized as an orthonormal DCT-II) and the linear kernel
// view c = P^T M x, together with the Gram-matrix PSD check on M M^T.

#include <algorithm>
#include <string>
#include <vector>

#include "lmfcc/core.hpp"
#include "lmfcc/linalg.hpp"

namespace lmfcc::mel {

inline double hz_to_mel(double hz) {
    if (!(hz >= 0.0)) throw std::domain_error("hz_to_mel: negative frequency");
    return 2595.0 * std::log10(1.0 + hz / 700.0);
}

inline double mel_to_hz(double mel) {
    if (!(mel >= 0.0)) throw std::domain_error("mel_to_hz: negative mel value");
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

struct MelFilterBank {
    Matrix weights;  // F x n_bins
    double sample_rate = 0.0;
    double f_min = 0.0;
    double f_max = 0.0;

    std::size_t filters() const { return weights.rows; }
    std::size_t bins() const { return weights.cols; }
};

struct ProjectionMatrix {
    Matrix weights;  // F x D; applied as P^T

    std::size_t filters() const { return weights.rows; }
    std::size_t coefficients() const { return weights.cols; }
};

/// F triangular filters whose F+2 edge/center points are equally spaced on the
/// Mel axis between f_min and f_max and rounded to spectrum bins. Filter i
/// rises from center i-1 to a unit peak at center i and falls to center i+1.
inline MelFilterBank init_mel_filterbank(std::size_t n_filters, std::size_t n_bins, double sample_rate,
                                         double f_min, double f_max) {
    if (n_filters < 1) throw ConfigError("filter bank needs at least one filter");
    if (!(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0))
        throw ConfigError("filter bank needs 0 <= f_min < f_max <= sample_rate / 2");
    if (n_bins < n_filters + 2)
        throw ConfigError("filter bank with " + std::to_string(n_filters) + " filters needs at least " +
                          std::to_string(n_filters + 2) + " spectrum bins, got " + std::to_string(n_bins));

    const double mel_lo = hz_to_mel(f_min), mel_hi = hz_to_mel(f_max);
    const double nyquist = sample_rate / 2.0;
    std::vector<std::size_t> centers(n_filters + 2);
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_filters + 1);
        const double hz = mel_to_hz(mel);
        centers[i] = static_cast<std::size_t>(std::llround(hz / nyquist * static_cast<double>(n_bins - 1)));
        if (i > 0 && centers[i] <= centers[i - 1])
            throw ConfigError("spectrum resolution too coarse: Mel centers " + std::to_string(i - 1) + " and " +
                              std::to_string(i) + " fall on the same bin; raise the frame length or lower the filter count");
    }

    MelFilterBank bank{Matrix(n_filters, n_bins), sample_rate, f_min, f_max};
    for (std::size_t f = 0; f < n_filters; ++f) {
        const std::size_t left = centers[f], mid = centers[f + 1], right = centers[f + 2];
        for (std::size_t k = left; k <= mid; ++k)
            bank.weights(f, k) = static_cast<double>(k - left) / static_cast<double>(mid - left);
        for (std::size_t k = mid; k <= right; ++k)
            bank.weights(f, k) = static_cast<double>(right - k) / static_cast<double>(right - mid);
    }
    return bank;
}

/// m = M s
inline Vector apply_filterbank(const MelFilterBank& bank, std::span<const double> spectrum) {
    if (spectrum.size() != bank.bins())
        throw DimensionError("apply_filterbank: spectrum has " + std::to_string(spectrum.size()) +
                             " bins, filter bank expects " + std::to_string(bank.bins()));
    Vector m(bank.filters());
    matvec(bank.weights, spectrum, m);
    return m;
}

/// ln(max(m_i, floor)); the floor absorbs zero and negative energies from a learned M.
inline Vector log_compress(std::span<const double> m, double floor) {
    if (!(floor > 0.0)) throw std::domain_error("log_compress: floor must be positive");
    Vector out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = std::log(std::max(m[i], floor));
    return out;
}

/// First D orthonormal DCT-II basis vectors of length F as columns:
/// P[m][n] = s(n) cos(pi n (m + 1/2) / F), s(0) = sqrt(1/F), s(n>0) = sqrt(2/F).
inline ProjectionMatrix init_dct_matrix(std::size_t n_coefficients, std::size_t n_filters) {
    if (n_coefficients < 1 || n_coefficients > n_filters)
        throw ConfigError("cepstral projection needs 1 <= D <= F (D=" + std::to_string(n_coefficients) +
                          ", F=" + std::to_string(n_filters) + ")");
    ProjectionMatrix p{Matrix(n_filters, n_coefficients)};
    const double fF = static_cast<double>(n_filters);
    for (std::size_t m = 0; m < n_filters; ++m)
        for (std::size_t n = 0; n < n_coefficients; ++n) {
            const double s = n == 0 ? std::sqrt(1.0 / fF) : std::sqrt(2.0 / fF);
            p.weights(m, n) = s * std::cos(M_PI * static_cast<double>(n) * (static_cast<double>(m) + 0.5) / fF);
        }
    return p;
}

/// c = P^T m
inline Vector project_cepstral(const ProjectionMatrix& p, std::span<const double> m) {
    if (m.size() != p.filters())
        throw DimensionError("project_cepstral: Mel spectrum has " + std::to_string(m.size()) +
                             " entries, projection expects " + std::to_string(p.filters()));
    Vector c(p.coefficients());
    matvec_t(p.weights, m, c);
    return c;
}

/// Linear kernel view Phi(x) = P^T M x (no log compression).
inline Vector kernel_map(const MelFilterBank& bank, const ProjectionMatrix& p, std::span<const double> spectrum) {
    return project_cepstral(p, apply_filterbank(bank, spectrum));
}

inline Matrix gram_matrix(const std::vector<Vector>& vectors) {
    if (vectors.empty()) throw std::invalid_argument("gram_matrix: no vectors");
    const std::size_t n = vectors.size(), len = vectors.front().size();
    for (const auto& v : vectors)
        if (v.size() != len) throw DimensionError("gram_matrix: vectors differ in length");
    Matrix g(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < len; ++k) s += vectors[i][k] * vectors[j][k];
            g(i, j) = s;
            g(j, i) = s;
        }
    return g;
}

/// Gram matrix of the rows of m, i.e. m m^T.
inline Matrix gram_matrix(const Matrix& m) {
    std::vector<Vector> rows;
    rows.reserve(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) rows.emplace_back(m.row(i).begin(), m.row(i).end());
    return gram_matrix(rows);
}

inline double min_eigenvalue(const Matrix& g) {
    if (g.rows != g.cols || g.rows == 0) throw DimensionError("min_eigenvalue: matrix must be square and non-empty");
    double scale = 1.0;
    for (double x : g.data) scale = std::max(scale, std::abs(x));
    for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = i + 1; j < g.cols; ++j)
            if (std::abs(g(i, j) - g(j, i)) > 1e-12 * scale)
                throw std::invalid_argument("min_eigenvalue: matrix is not symmetric");
    return linalg::symmetric_eigen(g).values.front();
}

/// ||P^T P - I||_F^2
inline double orthogonality_penalty(const ProjectionMatrix& p) {
    const std::size_t F = p.filters(), D = p.coefficients();
    double total = 0.0;
    for (std::size_t a = 0; a < D; ++a)
        for (std::size_t b = 0; b < D; ++b) {
            double s = 0.0;
            for (std::size_t m = 0; m < F; ++m) s += p.weights(m, a) * p.weights(m, b);
            const double r = s - (a == b ? 1.0 : 0.0);
            total += r * r;
        }
    return total;
}

/// d/dP ||P^T P - I||_F^2 = 4 P (P^T P - I), accumulated into grad scaled by weight.
inline void add_orthogonality_gradient(const ProjectionMatrix& p, double weight, Matrix& grad) {
    const std::size_t F = p.filters(), D = p.coefficients();
    Matrix r(D, D);
    for (std::size_t a = 0; a < D; ++a)
        for (std::size_t b = 0; b < D; ++b) {
            double s = 0.0;
            for (std::size_t m = 0; m < F; ++m) s += p.weights(m, a) * p.weights(m, b);
            r(a, b) = s - (a == b ? 1.0 : 0.0);
        }
    for (std::size_t m = 0; m < F; ++m)
        for (std::size_t b = 0; b < D; ++b) {
            double s = 0.0;
            for (std::size_t a = 0; a < D; ++a) s += p.weights(m, a) * r(a, b);
            grad(m, b) += 4.0 * weight * s;
        }
}

/// Clips negative filter weights to zero when M M^T shows a negative
/// eigenvalue, then re-checks. M M^T is a Gram matrix, so the check only
/// guards against roundoff.
inline MelFilterBank psd_projection(const MelFilterBank& bank) {
    if (min_eigenvalue(gram_matrix(bank.weights)) >= 0.0) return bank;
    MelFilterBank out = bank;
    for (double& w : out.weights.data) w = std::max(w, 0.0);
    const double lam = min_eigenvalue(gram_matrix(out.weights));
    if (lam < -1e-8) throw NumericError("filter bank Gram matrix has eigenvalue " + std::to_string(lam));
    return out;
}

}  // namespace lmfcc::mel
