#pragma once

// Compact residual encoder z = f(c): input projection, a stack of two-layer
// residual blocks with identity skips, and an output projection to k dims.

#include <string>
#include <vector>

#include "lmfcc/core.hpp"

namespace lmfcc::encoder {

struct EncoderConfig {
    std::size_t input_dim = 0;
    std::size_t n_blocks = 3;
    std::size_t hidden_width = 64;
    std::size_t embedding_dim = 16;

    void validate() const {
        if (n_blocks < 1) throw ConfigError("encoder needs at least one residual block");
        if (embedding_dim < 1) throw ConfigError("embedding dimension must be at least 1");
        if (embedding_dim > hidden_width) throw ConfigError("embedding dimension must not exceed hidden width");
    }
};

struct ResidualBlockWeights {
    Matrix w1;  // hidden x hidden
    Vector b1;
    Matrix w2;  // hidden x hidden
    Vector b2;
};

struct EncoderWeights {
    Matrix in_w;  // hidden x input_dim
    Vector in_b;
    std::vector<ResidualBlockWeights> blocks;
    Matrix out_w;  // k x hidden
    Vector out_b;

    std::size_t input_dim() const { return in_w.cols; }
    std::size_t hidden_width() const { return in_w.rows; }
    std::size_t embedding_dim() const { return out_w.rows; }
};

inline EncoderWeights zero_weights(const EncoderConfig& cfg) {
    EncoderWeights w;
    const std::size_t h = cfg.hidden_width;
    w.in_w = Matrix(h, cfg.input_dim);
    w.in_b = Vector(h);
    w.blocks.assign(cfg.n_blocks, ResidualBlockWeights{Matrix(h, h), Vector(h), Matrix(h, h), Vector(h)});
    w.out_w = Matrix(cfg.embedding_dim, h);
    w.out_b = Vector(cfg.embedding_dim);
    return w;
}

/// Gaussian init: fan-in scaling on projections, He scaling on the first
/// block layer, and a residual branch damped by the block count.
inline EncoderWeights init_weights(const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    EncoderWeights w = zero_weights(cfg);
    const auto fill = [&rng](Matrix& m, double stddev) {
        for (double& x : m.data) x = stddev * rng.normal();
    };
    const double h = static_cast<double>(cfg.hidden_width);
    fill(w.in_w, std::sqrt(1.0 / static_cast<double>(std::max<std::size_t>(cfg.input_dim, 1))));
    for (auto& b : w.blocks) {
        fill(b.w1, std::sqrt(2.0 / h));
        fill(b.w2, std::sqrt(1.0 / h) / std::sqrt(static_cast<double>(cfg.n_blocks)));
    }
    fill(w.out_w, std::sqrt(1.0 / h));
    return w;
}

inline void check_shapes(const EncoderWeights& w) {
    const std::size_t h = w.hidden_width();
    if (w.in_b.size() != h || w.out_w.cols != h || w.out_b.size() != w.out_w.rows)
        throw DimensionError("encoder weights have inconsistent projection shapes");
    for (const auto& b : w.blocks)
        if (b.w1.rows != h || b.w1.cols != h || b.w2.rows != h || b.w2.cols != h || b.b1.size() != h ||
            b.b2.size() != h)
            throw DimensionError("residual block shape does not match hidden width " + std::to_string(h));
}

/// y = x + W2 relu(W1 x + b1) + b2
inline Vector residual_block_forward(std::span<const double> x, const ResidualBlockWeights& w) {
    const std::size_t h = w.w1.rows;
    if (x.size() != h || w.w1.cols != h || w.w2.rows != h || w.w2.cols != h)
        throw DimensionError("residual block expects width " + std::to_string(h) + ", got " + std::to_string(x.size()));
    Vector u(h), y(h);
    matvec(w.w1, x, u);
    for (std::size_t i = 0; i < h; ++i) u[i] = std::max(0.0, u[i] + w.b1[i]);
    matvec(w.w2, u, y);
    for (std::size_t i = 0; i < h; ++i) y[i] += x[i] + w.b2[i];
    return y;
}

// Activations kept for the backward pass.
struct Trace {
    Vector input;
    std::vector<Vector> block_inputs;  // n_blocks + 1 entries; last is the final hidden state
    std::vector<Vector> pre_relu;      // per block
    Vector z;
};

inline Vector forward(const EncoderWeights& w, std::span<const double> input, Trace* trace = nullptr) {
    if (input.size() != w.input_dim())
        throw DimensionError("encoder input has " + std::to_string(input.size()) + " values, expected " +
                             std::to_string(w.input_dim()));
    const std::size_t h = w.hidden_width();
    Vector x(h);
    matvec(w.in_w, input, x);
    for (std::size_t i = 0; i < h; ++i) x[i] += w.in_b[i];
    if (trace) {
        trace->input.assign(input.begin(), input.end());
        trace->block_inputs.clear();
        trace->pre_relu.clear();
    }
    Vector u(h), y(h);
    for (const auto& b : w.blocks) {
        matvec(b.w1, x, u);
        for (std::size_t i = 0; i < h; ++i) u[i] += b.b1[i];
        if (trace) {
            trace->block_inputs.push_back(x);
            trace->pre_relu.push_back(u);
        }
        for (double& v : u) v = std::max(0.0, v);
        matvec(b.w2, u, y);
        for (std::size_t i = 0; i < h; ++i) x[i] += y[i] + b.b2[i];
    }
    Vector z(w.embedding_dim());
    matvec(w.out_w, x, z);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += w.out_b[i];
    if (trace) {
        trace->block_inputs.push_back(x);
        trace->z = z;
    }
    return z;
}

/// z = f(c) for one flattened cepstral input.
inline Vector encode(const EncoderConfig& cfg, const EncoderWeights& w, std::span<const double> input) {
    if (w.blocks.size() != cfg.n_blocks || w.hidden_width() != cfg.hidden_width ||
        w.embedding_dim() != cfg.embedding_dim || w.input_dim() != cfg.input_dim)
        throw DimensionError("encoder weights do not match configuration");
    return forward(w, input);
}

/// Accumulates parameter gradients into `grad` given dL/dz; returns dL/dinput.
inline Vector backward(const EncoderWeights& w, const Trace& t, std::span<const double> dz, EncoderWeights& grad) {
    const std::size_t h = w.hidden_width();
    Vector dx(h), dr(h), tmp(h);
    add_outer(grad.out_w, dz, t.block_inputs.back());
    for (std::size_t i = 0; i < dz.size(); ++i) grad.out_b[i] += dz[i];
    matvec_t(w.out_w, dz, dx);

    for (std::size_t bi = w.blocks.size(); bi-- > 0;) {
        const auto& b = w.blocks[bi];
        auto& gb = grad.blocks[bi];
        const Vector& u = t.pre_relu[bi];
        Vector r(h);
        for (std::size_t i = 0; i < h; ++i) r[i] = std::max(0.0, u[i]);
        add_outer(gb.w2, dx, r);
        for (std::size_t i = 0; i < h; ++i) gb.b2[i] += dx[i];
        matvec_t(b.w2, dx, dr);
        for (std::size_t i = 0; i < h; ++i) dr[i] = u[i] > 0.0 ? dr[i] : 0.0;
        add_outer(gb.w1, dr, t.block_inputs[bi]);
        for (std::size_t i = 0; i < h; ++i) gb.b1[i] += dr[i];
        matvec_t(b.w1, dr, tmp);
        for (std::size_t i = 0; i < h; ++i) dx[i] += tmp[i];
    }

    add_outer(grad.in_w, dx, t.input);
    for (std::size_t i = 0; i < h; ++i) grad.in_b[i] += dx[i];
    Vector dinput(w.input_dim());
    matvec_t(w.in_w, dx, dinput);
    return dinput;
}

}  // namespace lmfcc::encoder
