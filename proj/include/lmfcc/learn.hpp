#pragma once

// End-to-end training of the learnable MFCC front end, residual encoder and
// softmax head. Gradients are derived by hand layer by layer (reverse mode);
// finite_diff_grad provides the independent check.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lmfcc/core.hpp"
#include "lmfcc/dataio.hpp"
#include "lmfcc/encoder.hpp"
#include "lmfcc/melcepstrum.hpp"
#include "lmfcc/metrics.hpp"
#include "lmfcc/pca.hpp"
#include "lmfcc/spectral.hpp"

namespace lmfcc::learn {

enum class Variant { mfcc, raw };

inline Variant parse_variant(const std::string& s) {
    if (s == "mfcc") return Variant::mfcc;
    if (s == "raw") return Variant::raw;
    throw ConfigError("unknown pipeline variant '" + s + "' (expected mfcc or raw)");
}

inline const char* to_string(Variant v) { return v == Variant::mfcc ? "mfcc" : "raw"; }

struct FrontendConfig {
    spectral::WindowSpec window;
    double sample_rate = 100.0;
    double f_min = 0.0;
    double f_max = 50.0;
    std::size_t filters = 20;
    std::size_t coefficients = 12;
    double log_floor = 1e-10;

    void validate() const {
        window.validate();
        if (filters < 1) throw ConfigError("filter count must be at least 1");
        if (coefficients < 1 || coefficients > filters) throw ConfigError("need 1 <= coefficients <= filters");
        if (window.n_bins() < filters + 2)
            throw ConfigError("frame length " + std::to_string(window.frame_length) + " gives " +
                              std::to_string(window.n_bins()) + " spectrum bins; " + std::to_string(filters) +
                              " filters need at least " + std::to_string(filters + 2));
        if (!(log_floor > 0.0)) throw ConfigError("log floor must be positive");
        if (!(sample_rate > 0.0 && f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0))
            throw ConfigError("need 0 <= f_min < f_max <= sample_rate / 2");
    }
};

struct ModelConfig {
    Variant variant = Variant::mfcc;
    FrontendConfig frontend;
    encoder::EncoderConfig encoder;  // input_dim is derived from the data
    std::size_t classes = 2;
    double orth_weight = 0.01;
    std::size_t pca_components = 0;  // 0 disables the PCA stage

    void validate() const {
        frontend.validate();
        encoder.validate();
        if (classes < 2) throw ConfigError("need at least two classes");
        if (!(orth_weight >= 0.0)) throw ConfigError("orthogonality weight must be non-negative");
    }
};

// Non-trainable description of how a record becomes an encoder input.
struct Pipeline {
    ModelConfig config;
    std::size_t signal_length = 0;
    std::optional<pca::PcaModel> pca;

    bool uses_mfcc() const { return config.variant == Variant::mfcc; }
    std::size_t frames() const { return config.frontend.window.frame_count(signal_length); }

    std::size_t feature_dim() const {
        return uses_mfcc() ? frames() * config.frontend.coefficients : signal_length;
    }

    std::size_t input_dim() const { return pca ? pca->components.rows : feature_dim(); }
};

inline Pipeline make_pipeline(const ModelConfig& cfg, std::size_t signal_length) {
    cfg.validate();
    if (signal_length < 1) throw DimensionError("records have no features");
    return Pipeline{cfg, signal_length, std::nullopt};
}

struct ParamSet {
    mel::MelFilterBank bank;          // empty for the raw variant
    mel::ProjectionMatrix projection; // empty for the raw variant
    encoder::EncoderWeights encoder;
    Matrix head_w;                    // J x k
    Vector head_b;
};

using Gradients = ParamSet;

/// Visits every trainable array in declaration order as (name, rows, cols, values).
template <typename PS, typename Fn>
    requires std::same_as<std::remove_const_t<PS>, ParamSet>
void for_each_array(PS& p, Fn&& fn) {
    fn(std::string("mel.bank"), p.bank.weights.rows, p.bank.weights.cols, p.bank.weights.data);
    fn(std::string("mel.projection"), p.projection.weights.rows, p.projection.weights.cols, p.projection.weights.data);
    fn(std::string("encoder.in.w"), p.encoder.in_w.rows, p.encoder.in_w.cols, p.encoder.in_w.data);
    fn(std::string("encoder.in.b"), p.encoder.in_b.size(), std::size_t{1}, p.encoder.in_b);
    for (std::size_t i = 0; i < p.encoder.blocks.size(); ++i) {
        auto& b = p.encoder.blocks[i];
        const std::string pre = "encoder.block" + std::to_string(i) + ".";
        fn(pre + "w1", b.w1.rows, b.w1.cols, b.w1.data);
        fn(pre + "b1", b.b1.size(), std::size_t{1}, b.b1);
        fn(pre + "w2", b.w2.rows, b.w2.cols, b.w2.data);
        fn(pre + "b2", b.b2.size(), std::size_t{1}, b.b2);
    }
    fn(std::string("encoder.out.w"), p.encoder.out_w.rows, p.encoder.out_w.cols, p.encoder.out_w.data);
    fn(std::string("encoder.out.b"), p.encoder.out_b.size(), std::size_t{1}, p.encoder.out_b);
    fn(std::string("head.w"), p.head_w.rows, p.head_w.cols, p.head_w.data);
    fn(std::string("head.b"), p.head_b.size(), std::size_t{1}, p.head_b);
}

inline Gradients zeros_like(const ParamSet& p) {
    Gradients g = p;
    for_each_array(g, [](const std::string&, std::size_t, std::size_t, std::vector<double>& v) {
        std::fill(v.begin(), v.end(), 0.0);
    });
    return g;
}

inline std::uint64_t fingerprint(const ParamSet& p) {
    std::uint64_t h = 1469598103934665603ULL;
    for_each_array(p, [&h](const std::string&, std::size_t, std::size_t, const std::vector<double>& v) {
        for (double x : v) {
            std::uint64_t bits;
            std::memcpy(&bits, &x, sizeof bits);
            h = (h ^ bits) * 1099511628211ULL;
            h ^= h >> 29;
        }
    });
    return h;
}

inline ParamSet init_params(const Pipeline& pl, std::uint64_t seed) {
    const auto& fe = pl.config.frontend;
    ParamSet p;
    if (pl.uses_mfcc()) {
        p.bank = mel::init_mel_filterbank(fe.filters, fe.window.n_bins(), fe.sample_rate, fe.f_min, fe.f_max);
        p.projection = mel::init_dct_matrix(fe.coefficients, fe.filters);
    }
    Rng rng(seed);
    auto ecfg = pl.config.encoder;
    ecfg.input_dim = pl.input_dim();
    p.encoder = encoder::init_weights(ecfg, rng);
    p.head_w = Matrix(pl.config.classes, ecfg.embedding_dim);
    const double s = std::sqrt(1.0 / static_cast<double>(ecfg.embedding_dim));
    for (double& x : p.head_w.data) x = s * rng.normal();
    p.head_b = Vector(pl.config.classes, 0.0);
    return p;
}

// ---------------------------------------------------------------------------
// Inputs

// One record ready for the trainable part: its spectrogram (mfcc) or raw features.
struct Sample {
    Matrix spectrogram;
    Vector raw;
    int label = 0;
};

inline Sample prepare_sample(const Pipeline& pl, std::span<const double> record, int label) {
    if (record.size() != pl.signal_length)
        throw DimensionError("record has " + std::to_string(record.size()) + " features, pipeline expects " +
                             std::to_string(pl.signal_length));
    Sample s;
    s.label = label;
    if (pl.uses_mfcc()) s.spectrogram = spectral::spectrogram(record, pl.config.frontend.window);
    else s.raw.assign(record.begin(), record.end());
    return s;
}

inline std::vector<Sample> prepare_samples(const Pipeline& pl, const dataio::Dataset& d) {
    std::vector<Sample> out;
    out.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out.push_back(prepare_sample(pl, d.features.row(i), d.labels[i]));
    return out;
}

// ---------------------------------------------------------------------------
// Loss pieces

/// Max-subtracted softmax.
inline Vector softmax(std::span<const double> h) {
    if (h.empty()) throw std::invalid_argument("softmax: empty logits");
    double mx = h[0];
    for (double v : h) mx = std::max(mx, v);
    Vector p(h.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) sum += (p[i] = std::exp(h[i] - mx));
    for (double& v : p) v /= sum;
    return p;
}

/// -sum y_j ln p_j with probabilities clamped below at 1e-12.
inline double cross_entropy(std::span<const double> p, std::span<const double> y) {
    if (p.size() != y.size()) throw DimensionError("cross_entropy: size mismatch");
    double loss = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j)
        if (y[j] != 0.0) loss -= y[j] * std::log(std::max(p[j], 1e-12));
    return loss;
}

inline Vector one_hot(int label, std::size_t classes) {
    Vector y(classes, 0.0);
    y[static_cast<std::size_t>(label)] = 1.0;
    return y;
}

struct LossReport {
    double total_loss = 0.0;
    double ce_loss = 0.0;
    double penalty = 0.0;
    double batch_accuracy = 0.0;
};

// ---------------------------------------------------------------------------
// Forward / backward

struct ItemCache {
    Matrix mel;        // frames x F, before log
    Matrix log_mel;    // frames x F
    Vector features;   // flattened cepstra (or raw record), before PCA
    encoder::Trace trace;
    Vector probs;
    int label = 0;
};

struct Cache {
    std::uint64_t param_tag = 0;
    std::vector<const Sample*> samples;
    std::vector<ItemCache> items;
};

namespace detail {

// Record -> encoder input; fills the front-end part of the item cache when given.
inline Vector frontend(const Pipeline& pl, const ParamSet& th, const Sample& s, ItemCache* ic) {
    Vector feats;
    if (pl.uses_mfcc()) {
        const auto& fe = pl.config.frontend;
        const std::size_t n_frames = s.spectrogram.rows, F = fe.filters, D = fe.coefficients;
        if (th.bank.weights.rows != F || th.bank.weights.cols != s.spectrogram.cols)
            throw DimensionError("filter bank stage: bank is " + std::to_string(th.bank.weights.rows) + "x" +
                                 std::to_string(th.bank.weights.cols) + ", spectrogram has " +
                                 std::to_string(s.spectrogram.cols) + " bins");
        if (th.projection.weights.rows != F || th.projection.weights.cols != D)
            throw DimensionError("cepstral projection stage: projection shape does not match F x D");
        feats.resize(n_frames * D);
        Matrix mel(n_frames, F), logm(n_frames, F);
        for (std::size_t f = 0; f < n_frames; ++f) {
            matvec(th.bank.weights, s.spectrogram.row(f), mel.row(f));
            for (std::size_t i = 0; i < F; ++i) logm(f, i) = std::log(std::max(mel(f, i), fe.log_floor));
            matvec_t(th.projection.weights, logm.row(f), std::span<double>(feats.data() + f * D, D));
        }
        if (ic) {
            ic->mel = std::move(mel);
            ic->log_mel = std::move(logm);
        }
    } else {
        feats = s.raw;
    }
    if (ic) ic->features = feats;
    if (pl.pca) return pca::pca_transform_row(*pl.pca, feats);
    return feats;
}

}  // namespace detail

/// Encoder input for one prepared sample (after the front end and optional PCA).
inline Vector encoder_input(const Pipeline& pl, const ParamSet& th, const Sample& s) {
    return detail::frontend(pl, th, s, nullptr);
}

inline Vector embed(const Pipeline& pl, const ParamSet& th, const Sample& s) {
    return encoder::forward(th.encoder, encoder_input(pl, th, s));
}

inline Vector logits(const ParamSet& th, std::span<const double> z) {
    if (z.size() != th.head_w.cols) throw DimensionError("head stage: embedding width does not match head");
    Vector h(th.head_w.rows);
    matvec(th.head_w, z, h);
    for (std::size_t j = 0; j < h.size(); ++j) h[j] += th.head_b[j];
    return h;
}

inline Vector predict_proba(const Pipeline& pl, const ParamSet& th, const Sample& s) {
    return softmax(logits(th, embed(pl, th, s)));
}

inline int argmax(std::span<const double> v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline double orth_penalty(const Pipeline& pl, const ParamSet& th) {
    return pl.uses_mfcc() ? mel::orthogonality_penalty(th.projection) : 0.0;
}

/// Mean cross-entropy over the batch plus orth_weight * ||P^T P - I||^2.
inline LossReport forward(const Pipeline& pl, const ParamSet& th, std::span<const Sample* const> batch,
                          Cache* cache = nullptr) {
    if (batch.empty()) throw std::invalid_argument("forward: empty batch");
    LossReport r;
    std::size_t correct = 0;
    if (cache) {
        cache->param_tag = fingerprint(th);
        cache->samples.assign(batch.begin(), batch.end());
        cache->items.assign(batch.size(), {});
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Sample& s = *batch[i];
        ItemCache* ic = cache ? &cache->items[i] : nullptr;
        const Vector input = detail::frontend(pl, th, s, ic);
        encoder::Trace local;
        const Vector z = encoder::forward(th.encoder, input, ic ? &ic->trace : &local);
        const Vector p = softmax(logits(th, z));
        r.ce_loss += cross_entropy(p, one_hot(s.label, pl.config.classes));
        if (argmax(p) == s.label) ++correct;
        if (ic) {
            ic->probs = p;
            ic->label = s.label;
        }
    }
    const double n = static_cast<double>(batch.size());
    r.ce_loss /= n;
    r.batch_accuracy = static_cast<double>(correct) / n;
    r.penalty = orth_penalty(pl, th);
    r.total_loss = r.ce_loss + pl.config.orth_weight * r.penalty;
    return r;
}

/// Exact gradients of total_loss for the batch recorded in `cache`.
inline Gradients backward(const Pipeline& pl, const Cache& cache, const ParamSet& th, const std::vector<int>& labels) {
    if (cache.items.empty() || cache.items.size() != labels.size())
        throw std::logic_error("backward: cache does not match the label batch");
    if (cache.param_tag != fingerprint(th)) throw std::logic_error("backward: cache was produced with other parameters");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (cache.items[i].label != labels[i]) throw std::logic_error("backward: labels differ from the cached batch");

    Gradients g = zeros_like(th);
    const double inv_n = 1.0 / static_cast<double>(labels.size());
    const auto& fe = pl.config.frontend;
    Vector dh(pl.config.classes), dz(th.head_w.cols);

    for (std::size_t i = 0; i < cache.items.size(); ++i) {
        const ItemCache& ic = cache.items[i];
        // softmax + cross-entropy: dL/dh = p - y
        for (std::size_t j = 0; j < dh.size(); ++j)
            dh[j] = (ic.probs[j] - (static_cast<int>(j) == labels[i] ? 1.0 : 0.0)) * inv_n;
        add_outer(g.head_w, dh, ic.trace.z);
        for (std::size_t j = 0; j < dh.size(); ++j) g.head_b[j] += dh[j];
        matvec_t(th.head_w, dh, dz);

        Vector dinput = encoder::backward(th.encoder, ic.trace, dz, g.encoder);
        if (!pl.uses_mfcc()) continue;

        Vector dfeat(pl.feature_dim());
        if (pl.pca) matvec_t(pl.pca->components, dinput, dfeat);
        else dfeat = std::move(dinput);

        const Sample& s = *cache.samples[i];
        const std::size_t F = fe.filters, D = fe.coefficients;
        Vector dl(F), dm(F);
        for (std::size_t f = 0; f < ic.mel.rows; ++f) {
            std::span<const double> dc(dfeat.data() + f * D, D);
            // c = P^T l
            add_outer(g.projection.weights, ic.log_mel.row(f), dc);
            matvec(th.projection.weights, dc, dl);
            // l = ln(max(m, floor))
            for (std::size_t k = 0; k < F; ++k) {
                const double m = ic.mel(f, k);
                dm[k] = m > fe.log_floor ? dl[k] / m : 0.0;
            }
            // m = M s
            add_outer(g.bank.weights, dm, s.spectrogram.row(f));
        }
    }
    if (pl.uses_mfcc() && pl.config.orth_weight != 0.0)
        mel::add_orthogonality_gradient(th.projection, pl.config.orth_weight, g.projection.weights);
    return g;
}

inline std::vector<int> labels_of(std::span<const Sample* const> batch) {
    std::vector<int> y;
    y.reserve(batch.size());
    for (const Sample* s : batch) y.push_back(s->label);
    return y;
}

/// Central differences of total_loss over every scalar parameter. O(#params) forward passes.
inline Gradients finite_diff_grad(const Pipeline& pl, const ParamSet& theta, std::span<const Sample* const> batch,
                                  double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad: eps must be positive");
    ParamSet th = theta;
    Gradients g = zeros_like(theta);
    std::vector<std::vector<double>*> params, grads;
    for_each_array(th, [&](const std::string&, std::size_t, std::size_t, std::vector<double>& v) { params.push_back(&v); });
    for_each_array(g, [&](const std::string&, std::size_t, std::size_t, std::vector<double>& v) { grads.push_back(&v); });
    for (std::size_t a = 0; a < params.size(); ++a)
        for (std::size_t i = 0; i < params[a]->size(); ++i) {
            double& w = (*params[a])[i];
            const double saved = w;
            w = saved + eps;
            const double up = forward(pl, th, batch).total_loss;
            w = saved - eps;
            const double down = forward(pl, th, batch).total_loss;
            w = saved;
            (*grads[a])[i] = (up - down) / (2.0 * eps);
        }
    return g;
}

/// Central difference of a scalar function of a vector.
inline Vector central_difference(const std::function<double(std::span<const double>)>& fn, Vector x, double eps) {
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + eps;
        const double up = fn(x);
        x[i] = saved - eps;
        const double down = fn(x);
        x[i] = saved;
        g[i] = (up - down) / (2.0 * eps);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Optimizer

struct AdamState {
    Gradients m;
    Gradients v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

inline AdamState make_adam(const ParamSet& p, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    return AdamState{zeros_like(p), zeros_like(p), 0, beta1, beta2, eps};
}

/// One bias-corrected Adam update, in place.
inline void adam_step(ParamSet& theta, const Gradients& g, AdamState& st, double lr) {
    ++st.step;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
    std::vector<std::vector<double>*> ps, ms, vs;
    std::vector<const std::vector<double>*> gs;
    for_each_array(theta, [&](const std::string&, std::size_t, std::size_t, std::vector<double>& x) { ps.push_back(&x); });
    for_each_array(st.m, [&](const std::string&, std::size_t, std::size_t, std::vector<double>& x) { ms.push_back(&x); });
    for_each_array(st.v, [&](const std::string&, std::size_t, std::size_t, std::vector<double>& x) { vs.push_back(&x); });
    for_each_array(g, [&](const std::string&, std::size_t, std::size_t, const std::vector<double>& x) { gs.push_back(&x); });
    for (std::size_t a = 0; a < ps.size(); ++a) {
        auto &p = *ps[a], &m = *ms[a], &v = *vs[a];
        const auto& gr = *gs[a];
        if (gr.size() != p.size()) throw DimensionError("adam_step: gradient shape differs from parameters");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * gr[i];
            v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * gr[i] * gr[i];
            p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + st.eps);
        }
    }
}

inline double global_norm(const Gradients& g) {
    double s = 0.0;
    for_each_array(g, [&s](const std::string&, std::size_t, std::size_t, const std::vector<double>& v) {
        for (double x : v) s += x * x;
    });
    return std::sqrt(s);
}

inline void clip_global_norm(Gradients& g, double max_norm) {
    const double n = global_norm(g);
    if (max_norm <= 0.0 || n <= max_norm) return;
    const double scale = max_norm / n;
    for_each_array(g, [scale](const std::string&, std::size_t, std::size_t, std::vector<double>& v) {
        for (double& x : v) x *= scale;
    });
}

// ---------------------------------------------------------------------------
// Training loop

struct TrainConfig {
    double lr = 1e-3;
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    std::size_t patience = 0;   // 0: no early stopping
    double clip_norm = 0.0;     // 0: no clipping
    bool psd_projection = false;

    void validate() const {
        if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
        if (batch_size < 1) throw ConfigError("batch size must be at least 1");
        if (!(clip_norm >= 0.0)) throw ConfigError("clip norm must be non-negative");
    }
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double ce_loss = 0.0;
    double penalty = 0.0;
    double total_loss = 0.0;
    double train_accuracy = 0.0;
    double valid_f1 = 0.0;  // NaN when no validation split is given
};

struct TrainResult {
    Pipeline pipeline;
    ParamSet params;
    std::vector<EpochRecord> history;
};

class TrainingAborted : public NumericError {
public:
    TrainingAborted(const std::string& what, std::vector<EpochRecord> partial)
        : NumericError(what), history(std::move(partial)) {}
    std::vector<EpochRecord> history;
};

struct TrainHooks {
    std::function<void(const EpochRecord&)> on_epoch;
    // Called after every optimizer step with the updated parameters.
    std::function<void(std::size_t step, const ParamSet&)> on_step;
};

inline std::vector<int> predict(const Pipeline& pl, const ParamSet& th, const std::vector<Sample>& samples) {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(argmax(logits(th, embed(pl, th, s))));
    return out;
}

inline metrics::ConfusionMatrix evaluate(const Pipeline& pl, const ParamSet& th, const std::vector<Sample>& samples) {
    std::vector<int> truth;
    truth.reserve(samples.size());
    for (const auto& s : samples) truth.push_back(s.label);
    return metrics::confusion(predict(pl, th, samples), truth, pl.config.classes);
}

/// Fits the optional PCA stage on the training set's front-end features at the initial parameters.
inline void fit_input_pca(Pipeline& pl, const ParamSet& th, const std::vector<Sample>& samples) {
    if (pl.config.pca_components == 0) return;
    pl.pca.reset();
    Matrix feats(samples.size(), pl.feature_dim());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Vector f = encoder_input(pl, th, samples[i]);
        std::copy(f.begin(), f.end(), feats.row(i).begin());
    }
    pl.pca = pca::pca_fit(feats, pl.config.pca_components);
}

/// Builds the pipeline and initial parameters for data of the given width.
inline std::pair<Pipeline, ParamSet> initialize(const ModelConfig& mcfg, const dataio::Dataset& train_set,
                                                std::uint64_t seed) {
    Pipeline pl = make_pipeline(mcfg, train_set.width());
    if (mcfg.pca_components) {
        // PCA is fitted with the initial front end, then the encoder is sized to its output.
        ParamSet probe = init_params(Pipeline{mcfg, pl.signal_length, std::nullopt}, seed);
        fit_input_pca(pl, probe, prepare_samples(pl, train_set));
    }
    return {pl, init_params(pl, seed)};
}

inline TrainResult train(const ModelConfig& mcfg, const TrainConfig& tcfg, const dataio::Dataset& train_set,
                         const dataio::Dataset* valid_set = nullptr, const TrainHooks& hooks = {}) {
    tcfg.validate();
    if (train_set.size() == 0) throw DataError("training set is empty");
    auto [pl, theta] = initialize(mcfg, train_set, tcfg.seed);
    TrainResult result{pl, theta, {}};
    if (tcfg.epochs == 0) return result;

    const std::vector<Sample> samples = prepare_samples(pl, train_set);
    std::vector<Sample> valid;
    if (valid_set && valid_set->size()) valid = prepare_samples(pl, *valid_set);

    AdamState adam = make_adam(theta);
    Rng order_rng(tcfg.seed ^ 0x5DEECE66DULL);
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_f1 = -1.0;
    std::size_t since_best = 0, step = 0;
    std::vector<const Sample*> batch;
    Cache cache;
    for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        EpochRecord rec;
        rec.epoch = epoch;
        double correct = 0.0;
        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size, ++batch_no) {
            const std::size_t end = std::min(order.size(), start + tcfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(&samples[order[i]]);
            const LossReport lr = forward(pl, theta, batch, &cache);
            if (!std::isfinite(lr.total_loss))
                throw TrainingAborted("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                          std::to_string(batch_no),
                                      result.history);
            Gradients g = backward(pl, cache, theta, labels_of(batch));
            if (tcfg.clip_norm > 0.0) clip_global_norm(g, tcfg.clip_norm);
            adam_step(theta, g, adam, tcfg.lr);
            if (tcfg.psd_projection && pl.uses_mfcc()) theta.bank = mel::psd_projection(theta.bank);
            ++step;
            if (hooks.on_step) hooks.on_step(step, theta);
            const double w = static_cast<double>(end - start);
            rec.ce_loss += lr.ce_loss * w;
            correct += lr.batch_accuracy * w;
        }
        const double n = static_cast<double>(samples.size());
        rec.ce_loss /= n;
        rec.train_accuracy = correct / n;
        rec.penalty = orth_penalty(pl, theta);
        rec.total_loss = rec.ce_loss + pl.config.orth_weight * rec.penalty;
        rec.valid_f1 = valid.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : metrics::f1(evaluate(pl, theta, valid));
        result.history.push_back(rec);
        if (hooks.on_epoch) hooks.on_epoch(rec);

        if (tcfg.patience && !valid.empty()) {
            if (rec.valid_f1 > best_f1) {
                best_f1 = rec.valid_f1;
                since_best = 0;
            } else if (++since_best >= tcfg.patience) {
                break;
            }
        }
    }
    result.params = std::move(theta);
    return result;
}

}  // namespace lmfcc::learn
