#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "lmfcc/melcepstrum.hpp"

using namespace lmfcc;
using namespace lmfcc::mel;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

double eigen_min_eigenvalue(const Matrix& g) {
    Eigen::MatrixXd e(g.rows, g.cols);
    for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < g.cols; ++j) e(i, j) = g(i, j);
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(e).eigenvalues().minCoeff();
}

}  // namespace

TEST(MelScale, FixedPointAndReference) {
    EXPECT_EQ(hz_to_mel(0.0), 0.0);
    EXPECT_NEAR(hz_to_mel(700.0), 2595.0 * std::log10(2.0), 1e-12);
    EXPECT_NEAR(hz_to_mel(700.0), 781.17, 0.005);
}

TEST(MelScale, RoundTripAndMonotone) {
    Rng rng(2);
    double prev = -1.0;
    for (int i = 0; i < 1000; ++i) {
        const double f = rng.uniform(1e-6, 1e4);
        EXPECT_NEAR(mel_to_hz(hz_to_mel(f)), f, 1e-9 * f);
    }
    for (double f = 0.0; f < 1e4; f += 7.3) {
        const double m = hz_to_mel(f);
        EXPECT_GT(m, prev);
        prev = m;
    }
}

TEST(MelScale, NegativeRejected) {
    EXPECT_THROW(hz_to_mel(-1.0), std::domain_error);
    EXPECT_THROW(mel_to_hz(-1.0), std::domain_error);
}

TEST(FilterBank, RowsAreUnitPeakTriangles) {
    auto bank = init_mel_filterbank(20, 33, 100.0, 0.0, 50.0);
    ASSERT_EQ(bank.filters(), 20u);
    std::size_t prev_peak = 0;
    for (std::size_t f = 0; f < 20; ++f) {
        auto row = bank.weights.row(f);
        const auto peak = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        EXPECT_EQ(row[peak], 1.0);
        for (double v : row) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        if (f) {
            EXPECT_GT(peak, prev_peak);
        }
        prev_peak = peak;
    }
}

TEST(FilterBank, AdjacentSlopesSumToOne) {
    // F = 3 over 16 bins: recompute the centers independently and check the shared slopes.
    auto bank = init_mel_filterbank(3, 16, 100.0, 0.0, 50.0);
    std::vector<std::size_t> centers;
    const double hi = 2595.0 * std::log10(1.0 + 50.0 / 700.0);
    for (int i = 0; i < 5; ++i) {
        const double hz = 700.0 * (std::pow(10.0, hi * i / 4.0 / 2595.0) - 1.0);
        centers.push_back(static_cast<std::size_t>(std::llround(hz / 50.0 * 15.0)));
    }
    for (std::size_t i = 0; i + 1 < 3; ++i)
        for (std::size_t k = centers[i + 1]; k <= centers[i + 2]; ++k)
            EXPECT_NEAR(bank.weights(i, k) + bank.weights(i + 1, k), 1.0, 1e-15) << "filter " << i << " bin " << k;
    for (std::size_t k = 0; k < 16; ++k)
        if (k < centers[0] || k > centers[2]) {
            EXPECT_EQ(bank.weights(0, k), 0.0);
        }
}

TEST(FilterBank, SingleFilterSpansRange) {
    auto bank = init_mel_filterbank(1, 9, 100.0, 0.0, 50.0);
    EXPECT_EQ(bank.weights(0, 0), 0.0);
    EXPECT_EQ(bank.weights(0, 8), 0.0);
    for (std::size_t k = 1; k < 8; ++k) EXPECT_GT(bank.weights(0, k), 0.0);
}

TEST(FilterBank, TooFewBinsRejected) {
    EXPECT_THROW(init_mel_filterbank(20, 17, 100.0, 0.0, 50.0), ConfigError);
    EXPECT_THROW(init_mel_filterbank(4, 16, 100.0, 10.0, 60.0), ConfigError);
}

TEST(ApplyFilterbank, Cases) {
    MelFilterBank id{Matrix::identity(3), 1, 0, 0.5};
    EXPECT_EQ(apply_filterbank(id, std::vector<double>{1, 2, 3}), (Vector{1, 2, 3}));
    EXPECT_EQ(apply_filterbank(id, std::vector<double>{0, 0, 0}), (Vector{0, 0, 0}));
    MelFilterBank m{Matrix(2, 3), 1, 0, 0.5};
    m.weights.data = {1, 1, 0, 0, 1, 1};
    EXPECT_EQ(apply_filterbank(m, std::vector<double>{1, 2, 3}), (Vector{3, 5}));
    EXPECT_THROW(apply_filterbank(m, std::vector<double>{1, 2}), DimensionError);
}

TEST(LogCompress, Values) {
    EXPECT_EQ(log_compress(std::vector<double>{1.0}, 1e-10)[0], 0.0);
    EXPECT_NEAR(log_compress(std::vector<double>{0.0}, 1e-10)[0], -23.025850929940457, 1e-12);
    EXPECT_NEAR(log_compress(std::vector<double>{std::exp(1.0)}, 1e-10)[0], 1.0, 1e-15);
    EXPECT_NEAR(log_compress(std::vector<double>{-5.0}, 1e-3)[0], std::log(1e-3), 1e-15);
}

TEST(LogCompress, MonotoneAndBounded) {
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
        const auto out = log_compress(std::vector<double>{std::min(a, b), std::max(a, b)}, 1e-4);
        EXPECT_LE(out[0], out[1]);
        EXPECT_GE(out[0], std::log(1e-4));
    }
}

TEST(Dct, OrthonormalForAllShapes) {
    for (std::size_t F = 1; F <= 32; ++F)
        for (std::size_t D = 1; D <= F; ++D) {
            auto p = init_dct_matrix(D, F);
            auto ptp = matmul(p.weights.transpose(), p.weights);
            for (std::size_t i = 0; i < D; ++i)
                for (std::size_t j = 0; j < D; ++j) EXPECT_NEAR(ptp(i, j), i == j ? 1.0 : 0.0, 1e-12);
        }
}

TEST(Dct, TwoByTwo) {
    auto p = init_dct_matrix(2, 2);
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(p.weights(0, 0), r, 1e-15);
    EXPECT_NEAR(p.weights(1, 0), r, 1e-15);
    EXPECT_NEAR(p.weights(0, 1), r, 1e-15);
    EXPECT_NEAR(p.weights(1, 1), -r, 1e-15);
}

TEST(Dct, DcColumnIsConstant) {
    auto p = init_dct_matrix(1, 7);
    for (std::size_t m = 0; m < 7; ++m) EXPECT_NEAR(p.weights(m, 0), 1.0 / std::sqrt(7.0), 1e-15);
    EXPECT_THROW(init_dct_matrix(8, 7), ConfigError);
}

TEST(ProjectCepstral, Cases) {
    ProjectionMatrix id{Matrix(4, 2)};
    id.weights(0, 0) = id.weights(1, 1) = 1.0;
    EXPECT_EQ(project_cepstral(id, std::vector<double>{3, 4, 5, 6}), (Vector{3, 4}));
    EXPECT_EQ(project_cepstral(id, std::vector<double>(4, 0.0)), (Vector{0, 0}));
    // DCT of a constant spectrum: DC = k sqrt(F), everything else 0
    auto p = init_dct_matrix(5, 9);
    auto c = project_cepstral(p, std::vector<double>(9, 2.5));
    EXPECT_NEAR(c[0], 2.5 * 3.0, 1e-12);
    for (std::size_t n = 1; n < 5; ++n) EXPECT_NEAR(c[n], 0.0, 1e-12);
    EXPECT_THROW(project_cepstral(p, std::vector<double>(8, 1.0)), DimensionError);
}

TEST(Gram, Definitions) {
    auto g = gram_matrix(std::vector<Vector>{{1, 0}, {1, 1}});
    EXPECT_EQ(g.data, (std::vector<double>{1, 1, 1, 2}));
    auto single = gram_matrix(std::vector<Vector>{{3, 4}});
    EXPECT_EQ(single(0, 0), 25.0);
    auto id = gram_matrix(init_dct_matrix(4, 4).weights.transpose());
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(id(i, j), i == j ? 1.0 : 0.0, 1e-12);
    EXPECT_THROW(gram_matrix(std::vector<Vector>{}), std::invalid_argument);
}

TEST(Gram, SymmetricByConstruction) {
    Rng rng(3);
    auto g = gram_matrix(random_matrix(rng, 7, 5));
    for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(g(i, j), g(j, i));
}

TEST(MinEigenvalue, SmallCases) {
    EXPECT_NEAR(min_eigenvalue(Matrix::identity(4)), 1.0, 1e-14);
    Matrix d(2, 2);
    d.data = {2, 0, 0, 3};
    EXPECT_NEAR(min_eigenvalue(d), 2.0, 1e-14);
    Matrix a(2, 2);
    a.data = {2, 1, 1, 2};  // lambda^2 - 4 lambda + 3
    EXPECT_NEAR(min_eigenvalue(a), 1.0, 1e-14);
    Matrix bad(2, 2);
    bad.data = {1, 0.5, 0.4, 1};
    EXPECT_THROW(min_eigenvalue(bad), std::invalid_argument);
}

TEST(MinEigenvalue, AgreesWithEigenOracle) {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng.index(12);
        Matrix a = random_matrix(rng, n, n);
        Matrix s(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) s(i, j) = a(i, j) + a(j, i);
        EXPECT_NEAR(min_eigenvalue(s), eigen_min_eigenvalue(s), 1e-10);
    }
}

TEST(KernelMap, IdentityComposition) {
    MelFilterBank id{Matrix::identity(4), 1, 0, 0.5};
    ProjectionMatrix p{Matrix(4, 2)};
    p.weights(0, 0) = p.weights(1, 1) = 1.0;
    EXPECT_EQ(kernel_map(id, p, std::vector<double>{5, 6, 7, 8}), (Vector{5, 6}));
}

TEST(KernelMap, EqualsTwoStepPipelineAndIsHomogeneous) {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        MelFilterBank bank{random_matrix(rng, 6, 9), 100, 0, 50};
        ProjectionMatrix p{random_matrix(rng, 6, 4)};
        Vector x(9);
        for (double& v : x) v = rng.uniform(0, 3);
        EXPECT_EQ(kernel_map(bank, p, x), project_cepstral(p, apply_filterbank(bank, x)));
        const double alpha = rng.uniform(-4, 4);
        Vector ax = x;
        for (double& v : ax) v *= alpha;
        auto lhs = kernel_map(bank, p, ax), rhs = kernel_map(bank, p, x);
        for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], alpha * rhs[i], 1e-12 * (1 + std::abs(lhs[i])));
    }
}

TEST(OrthogonalityPenalty, Cases) {
    EXPECT_LT(orthogonality_penalty(init_dct_matrix(12, 20)), 1e-20);
    auto q = init_dct_matrix(5, 8);
    for (double& v : q.weights.data) v *= 2.0;
    EXPECT_NEAR(orthogonality_penalty(q), 9.0 * 5, 1e-10);
}

TEST(OrthogonalityPenalty, MatchesBruteForceSummation) {
    Rng rng(30);
    for (int trial = 0; trial < 20; ++trial) {
        ProjectionMatrix p{random_matrix(rng, 7, 4)};
        double brute = 0.0;
        for (std::size_t a = 0; a < 4; ++a)
            for (std::size_t b = 0; b < 4; ++b) {
                double dot = 0.0;
                for (std::size_t m = 0; m < 7; ++m) dot += p.weights(m, a) * p.weights(m, b);
                brute += std::pow(dot - (a == b), 2);
            }
        EXPECT_NEAR(orthogonality_penalty(p), brute, 1e-12 * brute);
    }
}

TEST(OrthogonalityPenalty, GradientMatchesCentralDifference) {
    Rng rng(31);
    ProjectionMatrix p{random_matrix(rng, 5, 3)};
    Matrix g(5, 3);
    add_orthogonality_gradient(p, 1.0, g);
    for (std::size_t i = 0; i < p.weights.data.size(); ++i) {
        auto up = p, down = p;
        up.weights.data[i] += 1e-6;
        down.weights.data[i] -= 1e-6;
        const double fd = (orthogonality_penalty(up) - orthogonality_penalty(down)) / 2e-6;
        EXPECT_NEAR(g.data[i], fd, 1e-6 * (1 + std::abs(fd)));
    }
}

TEST(PsdProjection, GramIsPsdForAnyRealBank) {
    Rng rng(44);
    for (int trial = 0; trial < 50; ++trial) {
        MelFilterBank bank{random_matrix(rng, 1 + rng.index(10), 3 + rng.index(20)), 100, 0, 50};
        EXPECT_GE(min_eigenvalue(gram_matrix(bank.weights)), -1e-8);
        auto out = psd_projection(bank);
        EXPECT_GE(min_eigenvalue(gram_matrix(out.weights)), -1e-8);
    }
}

TEST(PsdProjection, ClipsWhenEigenvalueDipsNegative) {
    // Rank-deficient M: M M^T has a zero eigenvalue that roundoff can push below 0.
    Rng rng(45);
    bool clipped_seen = false;
    for (int trial = 0; trial < 200 && !clipped_seen; ++trial) {
        MelFilterBank bank{random_matrix(rng, 6, 2), 100, 0, 50};
        if (min_eigenvalue(gram_matrix(bank.weights)) < 0.0) {
            auto out = psd_projection(bank);
            for (double v : out.weights.data) EXPECT_GE(v, 0.0);
            clipped_seen = true;
        }
    }
    EXPECT_TRUE(clipped_seen);
}

TEST(PsdProjection, NonNegativeBankUnchanged) {
    auto bank = init_mel_filterbank(10, 33, 100, 0, 50);
    auto out = psd_projection(bank);
    EXPECT_EQ(out.weights, bank.weights);
}
