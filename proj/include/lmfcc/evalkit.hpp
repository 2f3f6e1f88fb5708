#pragma once

// Ablation harness (MFCC front end vs raw features on one shared split) and
// embedding export for external visualization.

#include <chrono>
#include <ctime>
#include <fstream>
#include <string>

#include "lmfcc/dataio.hpp"
#include "lmfcc/learn.hpp"
#include "lmfcc/metrics.hpp"
#include "lmfcc/pca.hpp"

namespace lmfcc::evalkit {

struct AblationConfig {
    std::string dataset_name;
    learn::ModelConfig model;       // variant is overridden per arm
    learn::TrainConfig train;
    double test_fraction = 0.2;
    dataio::Resample resample = dataio::Resample::undersample_majority;
    std::uint64_t seed = 0;
    std::string snapshot;           // flattened configuration, copied into the result
};

struct ArmResult {
    metrics::MetricsReport report;
    std::vector<learn::EpochRecord> history;
    std::uint64_t test_fingerprint = 0;
};

struct AblationResult {
    std::string dataset;
    double f1_with_mfcc = 0.0;
    double f1_without_mfcc = 0.0;
    ArmResult with_mfcc;
    ArmResult without_mfcc;
    std::string config_snapshot;
};

struct PreparedSplits {
    dataio::Dataset train;
    dataio::Dataset test;
};

/// Stratified split, min-max fit on the training part, rebalance of the training part only.
inline PreparedSplits prepare_splits(const dataio::Dataset& d, double test_fraction, dataio::Resample resample,
                                     std::uint64_t seed) {
    auto [train, test] = dataio::stratified_split(d, test_fraction, seed);
    const auto norm = dataio::fit_normalizer(train);
    train = dataio::apply_normalizer(std::move(train), norm);
    test = dataio::apply_normalizer(std::move(test), norm);
    train = dataio::rebalance(train, resample, seed);
    return {std::move(train), std::move(test)};
}

inline ArmResult run_arm(learn::ModelConfig model, learn::Variant variant, const learn::TrainConfig& tcfg,
                         const PreparedSplits& splits, const learn::TrainHooks& hooks = {}) {
    model.variant = variant;
    auto res = learn::train(model, tcfg, splits.train, nullptr, hooks);
    const auto test_samples = learn::prepare_samples(res.pipeline, splits.test);
    ArmResult arm;
    arm.report = metrics::make_report(learn::evaluate(res.pipeline, res.params, test_samples));
    arm.history = std::move(res.history);
    arm.test_fingerprint = splits.test.fingerprint();
    return arm;
}

/// Trains the MFCC arm and the raw-feature arm with identical seeds and budgets
/// and scores both on the same held-out split. `d` is cleaned and label-encoded
/// but not yet normalized.
inline AblationResult ablation_run(const AblationConfig& cfg, const dataio::Dataset& d,
                                   const std::function<void(const char* arm, const learn::EpochRecord&)>& on_epoch = {}) {
    cfg.model.validate();
    cfg.train.validate();
    const PreparedSplits splits = prepare_splits(d, cfg.test_fraction, cfg.resample, cfg.seed);
    const auto hook = [&](const char* arm) {
        learn::TrainHooks h;
        if (on_epoch) h.on_epoch = [&on_epoch, arm](const learn::EpochRecord& r) { on_epoch(arm, r); };
        return h;
    };
    AblationResult r;
    r.dataset = cfg.dataset_name;
    r.config_snapshot = cfg.snapshot;
    r.with_mfcc = run_arm(cfg.model, learn::Variant::mfcc, cfg.train, splits, hook("mfcc"));
    r.without_mfcc = run_arm(cfg.model, learn::Variant::raw, cfg.train, splits, hook("raw"));
    if (r.with_mfcc.test_fingerprint != r.without_mfcc.test_fingerprint)
        throw std::logic_error("ablation arms were scored on different test splits");
    r.f1_with_mfcc = r.with_mfcc.report.binary_f1;
    r.f1_without_mfcc = r.without_mfcc.report.binary_f1;
    return r;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Appends one line: timestamp, dataset, seed, f1_with, f1_without, config snapshot (quoted).
inline void append_ledger(const std::string& path, const AblationResult& r, std::uint64_t seed,
                          const std::string& timestamp = utc_timestamp()) {
    const bool fresh = !std::ifstream(path).good();
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw DataError("cannot append to results ledger '" + path + "'");
    if (fresh) out << "timestamp,dataset,seed,f1_with_mfcc,f1_without_mfcc,config\n";
    std::string quoted = "\"";
    for (char c : r.config_snapshot) {
        if (c == '"') quoted += "\"\"";
        else if (c == '\n') quoted += ';';
        else quoted += c;
    }
    quoted += '"';
    out << timestamp << ',' << r.dataset << ',' << seed << ',' << dataio::detail::format_double(r.f1_with_mfcc) << ','
        << dataio::detail::format_double(r.f1_without_mfcc) << ',' << quoted << '\n';
}

/// One row per record: k embedding values and the true label.
inline void export_embeddings(const learn::Pipeline& pl, const learn::ParamSet& th, const dataio::Dataset& d,
                              const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write embeddings to '" + path + "'");
    const std::size_t k = th.encoder.embedding_dim();
    for (std::size_t j = 0; j < k; ++j) out << 'z' << j << ',';
    out << "label\n";
    std::string line;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto s = learn::prepare_sample(pl, d.features.row(i), d.labels[i]);
        const Vector z = learn::embed(pl, th, s);
        line.clear();
        for (double v : z) {
            line += dataio::detail::format_double(v);
            line += ',';
        }
        line += std::to_string(d.labels[i]);
        line += '\n';
        out << line;
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace lmfcc::evalkit
