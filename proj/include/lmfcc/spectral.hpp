#pragma once

// Signal-side front end: pre-emphasis, framing, windowing and the power spectrum.

#include <complex>
#include <string>
#include <vector>

#include "lmfcc/core.hpp"

namespace lmfcc::spectral {

enum class WindowKind { rectangular, hamming, hann };

inline WindowKind parse_window(const std::string& s) {
    if (s == "rectangular") return WindowKind::rectangular;
    if (s == "hamming") return WindowKind::hamming;
    if (s == "hann") return WindowKind::hann;
    throw ConfigError("unknown window kind '" + s + "'");
}

inline const char* to_string(WindowKind k) {
    switch (k) {
        case WindowKind::rectangular: return "rectangular";
        case WindowKind::hamming: return "hamming";
        case WindowKind::hann: return "hann";
    }
    return "?";
}

struct WindowSpec {
    std::size_t frame_length = 64;
    std::size_t hop = 16;
    WindowKind window = WindowKind::hamming;
    double pre_emphasis = 0.97;

    std::size_t n_bins() const { return frame_length / 2 + 1; }

    void validate() const {
        if (frame_length < 1) throw ConfigError("frame length must be at least 1");
        if (hop < 1 || hop > frame_length) throw ConfigError("hop must satisfy 1 <= hop <= frame length");
        if (window != WindowKind::rectangular && frame_length < 2)
            throw ConfigError("tapered windows need frame length >= 2");
        if (!(pre_emphasis >= 0.0 && pre_emphasis < 1.0)) throw ConfigError("pre-emphasis alpha must lie in [0, 1)");
    }

    // Frames produced for a signal of length t.
    std::size_t frame_count(std::size_t t) const { return t <= frame_length ? 1 : (t - frame_length) / hop + 1; }
};

/// y(0) = x(0), y(t) = x(t) - alpha * x(t-1).
inline Vector pre_emphasis(std::span<const double> x, double alpha) {
    Vector y(x.size());
    if (x.empty()) return y;
    y[0] = x[0];
    for (std::size_t t = 1; t < x.size(); ++t) y[t] = x[t] - alpha * x[t - 1];
    return y;
}

/// Frame i covers samples [i*hop, i*hop + L). A signal shorter than L is
/// zero-padded into a single frame; a trailing partial frame is discarded.
inline Matrix frame_signal(std::span<const double> x, const WindowSpec& spec) {
    const std::size_t L = spec.frame_length;
    const std::size_t n = spec.frame_count(x.size());
    Matrix frames(n, L);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t start = i * spec.hop;
        for (std::size_t k = 0; k < L && start + k < x.size(); ++k) frames(i, k) = x[start + k];
    }
    return frames;
}

inline Vector window_weights(WindowKind kind, std::size_t L) {
    Vector w(L, 1.0);
    if (kind == WindowKind::rectangular || L < 2) return w;
    const double a = kind == WindowKind::hamming ? 0.54 : 0.5;
    const double b = 1.0 - a;
    for (std::size_t n = 0; n < L; ++n)
        w[n] = a - b * std::cos(2.0 * M_PI * static_cast<double>(n) / static_cast<double>(L - 1));
    return w;
}

inline Vector apply_window(std::span<const double> frame, WindowKind kind) {
    Vector out(frame.begin(), frame.end());
    if (kind == WindowKind::rectangular) return out;
    const Vector w = window_weights(kind, frame.size());
    for (std::size_t n = 0; n < out.size(); ++n) out[n] *= w[n];
    return out;
}

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n && !(n & (n - 1)); }

// In-place iterative radix-2 Cooley-Tukey.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        std::vector<std::complex<double>> tw(half);
        for (std::size_t k = 0; k < half; ++k)
            tw[k] = std::polar(1.0, -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(len));
        for (std::size_t i = 0; i < n; i += len)
            for (std::size_t k = 0; k < half; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + half] * tw[k];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
    }
}

}  // namespace detail

/// |X(k)|^2 for k = 0..floor(L/2) of the unnormalized DFT. Radix-2 FFT for
/// power-of-two lengths, direct summation otherwise.
inline Vector power_spectrum(std::span<const double> frame) {
    const std::size_t L = frame.size();
    if (L == 0) throw DimensionError("power_spectrum: empty frame");
    if (!all_finite(frame)) throw NumericError("power_spectrum: non-finite sample in frame");
    const std::size_t n_bins = L / 2 + 1;
    Vector power(n_bins);
    if (detail::is_power_of_two(L)) {
        std::vector<std::complex<double>> a(frame.begin(), frame.end());
        detail::fft_radix2(a);
        for (std::size_t k = 0; k < n_bins; ++k) power[k] = std::norm(a[k]);
        return power;
    }
    for (std::size_t k = 0; k < n_bins; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t t = 0; t < L; ++t) {
            // reduce the phase index exactly before converting to an angle
            const double ang = -2.0 * M_PI * static_cast<double>((k * t) % L) / static_cast<double>(L);
            re += frame[t] * std::cos(ang);
            im += frame[t] * std::sin(ang);
        }
        power[k] = re * re + im * im;
    }
    return power;
}

/// Full signal-to-spectrogram path: pre-emphasis, framing, windowing, power spectrum.
/// Rows are frames, columns are frequency bins.
inline Matrix spectrogram(std::span<const double> signal, const WindowSpec& spec) {
    if (signal.empty()) throw DimensionError("spectrogram: empty signal");
    const Vector emphasized = pre_emphasis(signal, spec.pre_emphasis);
    const Matrix frames = frame_signal(emphasized, spec);
    Matrix out(frames.rows, spec.n_bins());
    for (std::size_t i = 0; i < frames.rows; ++i) {
        const Vector p = power_spectrum(apply_window(frames.row(i), spec.window));
        std::copy(p.begin(), p.end(), out.row(i).begin());
    }
    return out;
}

}  // namespace lmfcc::spectral
