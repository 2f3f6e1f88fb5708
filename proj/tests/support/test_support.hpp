#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <unistd.h>

#include "lmfcc/core.hpp"
#include "lmfcc/dataio.hpp"
#include "lmfcc/learn.hpp"

namespace lmfcc::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("lmfcc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Two-class records of length `width`: each class is a fixed smooth pattern
/// plus bounded noise, well inside the [0, 1] range. The noise bound is far
/// below half the distance between the class patterns, so the classes are
/// linearly separable.
inline dataio::Dataset separable_toy(std::size_t n, std::size_t width, std::uint64_t seed, double noise = 0.05) {
    Rng rng(seed);
    dataio::Dataset d;
    d.features = Matrix(n, width);
    for (std::size_t j = 0; j < width; ++j) d.feature_names.push_back("f" + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        const double freq = label ? 6.0 : 1.0;
        for (std::size_t t = 0; t < width; ++t) {
            const double base = 0.5 + 0.35 * std::cos(2.0 * M_PI * freq * static_cast<double>(t) / static_cast<double>(width));
            d.features(i, t) = base + noise * (2.0 * rng.uniform() - 1.0);
        }
        d.labels.push_back(label);
        d.row_ids.push_back(i);
    }
    return d;
}

/// Two-class tones of `width` samples with a random phase per record: class 0
/// completes 2 cycles, class 1 completes 9. Every column has the same value
/// distribution in both classes, so per-column scaling keeps the classes
/// apart in frequency while raw values alone do not separate them linearly.
inline dataio::Dataset tone_toy(std::size_t n, std::size_t width, std::uint64_t seed, double noise = 0.05) {
    Rng rng(seed);
    dataio::Dataset d;
    d.features = Matrix(n, width);
    for (std::size_t j = 0; j < width; ++j) d.feature_names.push_back("f" + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        const double freq = label ? 9.0 : 2.0, phase = rng.uniform(0.0, 2.0 * M_PI);
        for (std::size_t t = 0; t < width; ++t)
            d.features(i, t) = 0.5 + 0.35 * std::cos(2.0 * M_PI * freq * static_cast<double>(t) / static_cast<double>(width) + phase) +
                               noise * (2.0 * rng.uniform() - 1.0);
        d.labels.push_back(label);
        d.row_ids.push_back(i);
    }
    return d;
}

// Small mfcc model: frame length 8 (5 bins), 4 filters, 3 coefficients,
// embedding 2, two classes, batch of two 16-sample records. The bank is
// positive so every Mel energy clears the log floor.
struct TinyInstance {
    learn::Pipeline pipeline;
    learn::ParamSet params;
    std::vector<learn::Sample> samples;

    std::vector<const learn::Sample*> batch() const {
        std::vector<const learn::Sample*> b;
        for (const auto& s : samples) b.push_back(&s);
        return b;
    }
};

inline TinyInstance tiny_instance(std::uint64_t seed, std::size_t batch = 2, double orth_weight = 0.1) {
    Rng rng(seed);
    learn::ModelConfig cfg;
    cfg.frontend.window = spectral::WindowSpec{8, 4, spectral::WindowKind::hamming, 0.97};
    cfg.frontend.filters = 4;
    cfg.frontend.coefficients = 3;
    cfg.encoder = encoder::EncoderConfig{0, 2, 5, 2};
    cfg.classes = 2;
    cfg.orth_weight = orth_weight;
    TinyInstance t{learn::Pipeline{cfg, 16, std::nullopt}, {}, {}};

    auto& th = t.params;
    th.bank = mel::MelFilterBank{Matrix(4, 5), 100.0, 0.0, 50.0};
    for (double& v : th.bank.weights.data) v = rng.uniform(0.2, 1.0);
    th.projection = mel::init_dct_matrix(3, 4);
    for (double& v : th.projection.weights.data) v += 0.2 * rng.normal();
    auto ecfg = cfg.encoder;
    ecfg.input_dim = t.pipeline.feature_dim();
    th.encoder = encoder::init_weights(ecfg, rng);
    for (double& v : th.encoder.in_b) v = 0.1 * rng.normal();
    for (auto& b : th.encoder.blocks) {
        for (double& v : b.b1) v = 0.1 * rng.normal();
        for (double& v : b.b2) v = 0.1 * rng.normal();
    }
    for (double& v : th.encoder.out_b) v = 0.1 * rng.normal();
    th.head_w = Matrix(2, 2);
    for (double& v : th.head_w.data) v = rng.normal();
    th.head_b = {0.1 * rng.normal(), 0.1 * rng.normal()};

    for (std::size_t i = 0; i < batch; ++i) {
        Vector x(16);
        for (double& v : x) v = rng.uniform(0.0, 1.0);
        t.samples.push_back(learn::prepare_sample(t.pipeline, x, static_cast<int>(rng.index(2))));
    }
    return t;
}

// Total loss of the mfcc model (no PCA) written out loop by loop in scalar
// type T, independent of the library's forward pass.
template <typename T>
T reference_loss(const learn::Pipeline& pl, const learn::ParamSet& th, const std::vector<learn::Sample>& samples) {
    using std::exp, std::log;
    const auto& fe = pl.config.frontend;
    T ce = 0;
    for (const auto& s : samples) {
        std::vector<T> c;
        for (std::size_t f = 0; f < s.spectrogram.rows; ++f) {
            std::vector<T> l(fe.filters);
            for (std::size_t i = 0; i < fe.filters; ++i) {
                T m = 0;
                for (std::size_t k = 0; k < s.spectrogram.cols; ++k)
                    m += static_cast<T>(th.bank.weights(i, k)) * static_cast<T>(s.spectrogram(f, k));
                l[i] = log(std::max(m, static_cast<T>(fe.log_floor)));
            }
            for (std::size_t n = 0; n < fe.coefficients; ++n) {
                T v = 0;
                for (std::size_t i = 0; i < fe.filters; ++i) v += static_cast<T>(th.projection.weights(i, n)) * l[i];
                c.push_back(v);
            }
        }
        const auto& e = th.encoder;
        const std::size_t h = e.in_w.rows;
        std::vector<T> x(h);
        for (std::size_t r = 0; r < h; ++r) {
            x[r] = e.in_b[r];
            for (std::size_t q = 0; q < c.size(); ++q) x[r] += static_cast<T>(e.in_w(r, q)) * c[q];
        }
        for (const auto& b : e.blocks) {
            std::vector<T> u(h), y(h);
            for (std::size_t r = 0; r < h; ++r) {
                u[r] = b.b1[r];
                for (std::size_t q = 0; q < h; ++q) u[r] += static_cast<T>(b.w1(r, q)) * x[q];
                if (u[r] < 0) u[r] = 0;
            }
            for (std::size_t r = 0; r < h; ++r) {
                y[r] = x[r] + static_cast<T>(b.b2[r]);
                for (std::size_t q = 0; q < h; ++q) y[r] += static_cast<T>(b.w2(r, q)) * u[q];
            }
            x = y;
        }
        std::vector<T> z(e.out_w.rows);
        for (std::size_t r = 0; r < z.size(); ++r) {
            z[r] = e.out_b[r];
            for (std::size_t q = 0; q < h; ++q) z[r] += static_cast<T>(e.out_w(r, q)) * x[q];
        }
        std::vector<T> logit(th.head_w.rows);
        T denom = 0;
        for (std::size_t j = 0; j < logit.size(); ++j) {
            logit[j] = th.head_b[j];
            for (std::size_t q = 0; q < z.size(); ++q) logit[j] += static_cast<T>(th.head_w(j, q)) * z[q];
        }
        for (const T& v : logit) denom += exp(v);
        ce -= logit[static_cast<std::size_t>(s.label)] - log(denom);
    }
    T pen = 0;
    const auto& P = th.projection.weights;
    for (std::size_t a = 0; a < P.cols; ++a)
        for (std::size_t b = 0; b < P.cols; ++b) {
            T dot = a == b ? -1 : 0;
            for (std::size_t m = 0; m < P.rows; ++m) dot += static_cast<T>(P(m, a)) * static_cast<T>(P(m, b));
            pen += dot * dot;
        }
    return ce / static_cast<T>(samples.size()) + static_cast<T>(pl.config.orth_weight) * pen;
}

struct GradCheck {
    double worst_relative = 0.0;
    double worst_small_absolute = 0.0;  // entries with analytic magnitude < 1e-8
    std::string worst_array;
    std::size_t arrays = 0;
};

// Compares the analytic gradient, array by array, with central differences
// of the extended-precision reference loss.
inline GradCheck check_gradients(const TinyInstance& t, double eps = 1e-6) {
    const auto batch = t.batch();
    learn::Cache cache;
    learn::forward(t.pipeline, t.params, batch, &cache);
    auto analytic = learn::backward(t.pipeline, cache, t.params, learn::labels_of(batch));
    std::vector<std::pair<std::string, const std::vector<double>*>> a;
    learn::for_each_array(analytic, [&](const std::string& name, std::size_t, std::size_t, const std::vector<double>& v) {
        a.emplace_back(name, &v);
    });
    learn::ParamSet th = t.params;
    std::vector<std::vector<double>*> p;
    learn::for_each_array(th, [&](const std::string&, std::size_t, std::size_t, std::vector<double>& v) { p.push_back(&v); });

    GradCheck r;
    r.arrays = a.size();
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t i = 0; i < a[k].second->size(); ++i) {
            double& w = (*p[k])[i];
            const double saved = w, up_w = saved + eps, down_w = saved - eps;
            w = up_w;
            const long double up = reference_loss<long double>(t.pipeline, th, t.samples);
            w = down_w;
            const long double down = reference_loss<long double>(t.pipeline, th, t.samples);
            w = saved;
            const double y = static_cast<double>((up - down) / (static_cast<long double>(up_w) - down_w));
            const double x = (*a[k].second)[i];
            if (std::abs(x) < 1e-8) {
                r.worst_small_absolute = std::max(r.worst_small_absolute, std::abs(x - y));
                continue;
            }
            const double rel = std::abs(x - y) / std::max(std::abs(x), std::abs(y));
            if (rel > r.worst_relative) {
                r.worst_relative = rel;
                r.worst_array = a[k].first;
            }
        }
    return r;
}

}  // namespace lmfcc::testing
