#pragma once

// Subcommand implementations behind the lmfcc tool. Each returns a process
// exit code: 0 success, 2 configuration error, 3 data error, 4 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "lmfcc/config.hpp"
#include "lmfcc/dataio.hpp"
#include "lmfcc/evalkit.hpp"
#include "lmfcc/learn.hpp"
#include "lmfcc/metrics.hpp"
#include "lmfcc/model_io.hpp"

namespace lmfcc::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kNumericError = 4 };

enum class LogLevel { error = 0, info = 1, debug = 2 };

inline LogLevel log_level_from_env() {
    const char* v = std::getenv("LMFCC_LOG");
    if (!v) return LogLevel::info;
    const std::string s(v);
    if (s == "error") return LogLevel::error;
    if (s == "debug") return LogLevel::debug;
    return LogLevel::info;
}

class Logger {
public:
    explicit Logger(LogLevel level = log_level_from_env(), std::ostream& out = std::cout, std::ostream& err = std::cerr)
        : level_(level), out_(out), err_(err) {}

    void info(const std::string& msg) const {
        if (level_ >= LogLevel::info) out_ << msg << '\n';
    }
    void debug(const std::string& msg) const {
        if (level_ >= LogLevel::debug) out_ << "[debug] " << msg << '\n';
    }
    void error(const std::string& msg) const { err_ << "error: " << msg << '\n'; }

private:
    LogLevel level_;
    std::ostream& out_;
    std::ostream& err_;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> model_path;
    std::optional<std::string> data_path;
    std::optional<std::string> dump_spectrogram;
};

namespace detail {

inline std::filesystem::path out_path(const config::RunConfig& c, const std::string& file) {
    return std::filesystem::path(c.out_dir) / file;
}

inline void ensure_out_dir(const config::RunConfig& c) {
    std::error_code ec;
    std::filesystem::create_directories(c.out_dir, ec);
    if (ec) throw DataError("cannot create output directory '" + c.out_dir + "': " + ec.message());
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + p.string() + "'");
    out << text;
}

inline std::string fmt(double v) { return dataio::detail::format_double(v); }

inline std::string history_csv(const std::vector<learn::EpochRecord>& h) {
    std::string s = "epoch,ce_loss,penalty,total_loss,train_accuracy,valid_f1\n";
    for (const auto& r : h)
        s += std::to_string(r.epoch) + ',' + fmt(r.ce_loss) + ',' + fmt(r.penalty) + ',' + fmt(r.total_loss) + ',' +
             fmt(r.train_accuracy) + ',' + fmt(r.valid_f1) + '\n';
    return s;
}

inline std::string epoch_line(const char* tag, const learn::EpochRecord& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%sepoch %4zu  ce %.6f  penalty %.6f  total %.6f  train_acc %.4f  valid_f1 %.4f",
                  tag, r.epoch, r.ce_loss, r.penalty, r.total_loss, r.train_accuracy, r.valid_f1);
    return buf;
}

inline config::RunConfig resolve(const std::string& config_path, const Overrides& o) {
    config::RunConfig c = config::load_config(config_path);
    if (o.seed) c.train.seed = *o.seed;
    if (o.out_dir) c.out_dir = *o.out_dir;
    c.validate();
    return c;
}

// Raw file -> cleaned, label-encoded dataset (not yet normalized or split).
inline dataio::Dataset load_and_clean(const config::RunConfig& c, const Logger& log, std::string* audit_text) {
    if (c.data_path.empty()) throw ConfigError("data.path is not set");
    auto table = dataio::load_table(c.data_path, c.delimiter, c.label_column, c.column_names);
    std::ostringstream audit;
    audit << "loaded " << table.n_rows << " rows x " << table.n_cols() << " columns from " << c.data_path << '\n';
    if (!c.drop_columns.empty()) {
        table = dataio::drop_columns(std::move(table), c.drop_columns);
        for (const auto& n : c.drop_columns) audit << "dropped column " << n << ": configured\n";
    }
    std::vector<dataio::DroppedColumn> dropped;
    table = dataio::clean_columns(table, c.zero_fraction_threshold, &dropped);
    for (const auto& d : dropped) audit << "dropped column " << d.name << ": " << d.reason << '\n';
    auto data = dataio::encode_labels(table, c.labels);
    data = dataio::stratified_subsample(data, c.subsample_rows, c.train.seed);
    audit << "kept " << data.width() << " feature columns; " << data.size() << " rows (" << data.count(0)
          << " normal, " << data.count(1) << " attack)\n";
    if (audit_text) *audit_text = audit.str();
    log.info(audit.str());
    return data;
}

template <typename Fn>
int guarded(const Logger& log, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        log.error(e.what());
        return kConfigError;
    } catch (const learn::TrainingAborted& e) {
        log.error(e.what());
        return kNumericError;
    } catch (const NumericError& e) {
        log.error(e.what());
        return kNumericError;
    } catch (const model_io::ModelFormatError& e) {
        log.error(e.what());
        return kDataError;
    } catch (const DataError& e) {
        log.error(e.what());
        return kDataError;
    } catch (const DimensionError& e) {
        log.error(e.what());
        return kDataError;
    }
}

}  // namespace detail

/// Cleans, encodes, splits, normalizes and rebalances the configured dataset.
/// Writes train.csv, test.csv, normalizer.csv and audit.txt.
inline int cmd_preprocess(const std::string& config_path, const Overrides& o = {}, const Logger& log = Logger()) {
    return detail::guarded(log, [&] {
        const auto c = detail::resolve(config_path, o);
        std::string audit;
        const auto data = detail::load_and_clean(c, log, &audit);
        const auto splits = evalkit::prepare_splits(data, c.test_fraction, c.resample, c.train.seed);
        detail::ensure_out_dir(c);
        dataio::write_dataset(splits.train, detail::out_path(c, "train.csv").string());
        dataio::write_dataset(splits.test, detail::out_path(c, "test.csv").string());
        dataio::write_normalizer(*splits.train.normalizer, detail::out_path(c, "normalizer.csv").string());
        audit += "train rows " + std::to_string(splits.train.size()) + ", test rows " +
                 std::to_string(splits.test.size()) + '\n';
        detail::write_text(detail::out_path(c, "audit.txt"), audit);
        log.info("wrote " + detail::out_path(c, "train.csv").string() + " and " + detail::out_path(c, "test.csv").string());
        return int{kOk};
    });
}

/// Trains on <out>/train.csv, validating on <out>/test.csv when present.
/// Writes model.bin and history.csv.
inline int cmd_train(const std::string& config_path, const Overrides& o = {}, const Logger& log = Logger()) {
    return detail::guarded(log, [&] {
        const auto c = detail::resolve(config_path, o);
        const auto train_path = detail::out_path(c, "train.csv");
        const auto test_path = detail::out_path(c, "test.csv");
        const auto train_set = dataio::load_dataset(train_path.string());
        std::optional<dataio::Dataset> valid;
        if (std::filesystem::exists(test_path)) valid = dataio::load_dataset(test_path.string());
        std::vector<dataio::ColumnRange> norm;
        if (std::filesystem::exists(detail::out_path(c, "normalizer.csv")))
            norm = dataio::read_normalizer(detail::out_path(c, "normalizer.csv").string());

        std::optional<std::ofstream> log_file;
        if (!c.log_file.empty()) log_file.emplace(c.log_file, std::ios::app);
        learn::TrainHooks hooks;
        hooks.on_epoch = [&](const learn::EpochRecord& r) {
            const auto line = detail::epoch_line("", r);
            log.info(line);
            if (log_file) *log_file << line << '\n';
        };

        if (o.dump_spectrogram && train_set.size()) {
            const auto pl = learn::make_pipeline(c.model, train_set.width());
            const Matrix spec = spectral::spectrogram(train_set.features.row(0), pl.config.frontend.window);
            std::string text;
            for (std::size_t i = 0; i < spec.rows; ++i) {
                for (std::size_t j = 0; j < spec.cols; ++j) text += (j ? "," : "") + detail::fmt(spec(i, j));
                text += '\n';
            }
            detail::write_text(*o.dump_spectrogram, text);
        }

        learn::TrainResult res;
        try {
            res = learn::train(c.model, c.train, train_set, valid ? &*valid : nullptr, hooks);
        } catch (const learn::TrainingAborted& e) {
            detail::write_text(detail::out_path(c, "history.csv"), detail::history_csv(e.history));
            throw;
        }
        const std::string history = detail::history_csv(res.history);
        detail::write_text(detail::out_path(c, "history.csv"), history);
        model_io::ModelArtifact art;
        art.config = c;
        art.pipeline = res.pipeline;
        art.params = res.params;
        art.normalizer = norm;
        art.history_digest = model_io::detail::hex(fnv1a(history));
        model_io::save_model(art, detail::out_path(c, "model.bin").string());
        log.info("wrote " + detail::out_path(c, "model.bin").string());
        return int{kOk};
    });
}

namespace detail {

inline std::pair<model_io::ModelArtifact, dataio::Dataset> model_and_data(const config::RunConfig& c,
                                                                          const Overrides& o) {
    const std::string model_path = o.model_path.value_or(out_path(c, "model.bin").string());
    const std::string data_path = o.data_path.value_or(out_path(c, "test.csv").string());
    auto art = model_io::load_model(model_path);
    auto data = dataio::load_dataset(data_path);
    if (data.width() != art.pipeline.signal_length)
        throw DimensionError("model expects records of width " + std::to_string(art.pipeline.signal_length) +
                             " but '" + data_path + "' has width " + std::to_string(data.width()));
    return {std::move(art), std::move(data)};
}

}  // namespace detail

/// Scores a preprocessed dataset; writes metrics.txt, metrics.csv, confusion.csv.
inline int cmd_eval(const std::string& config_path, const Overrides& o = {}, const Logger& log = Logger()) {
    return detail::guarded(log, [&] {
        const auto c = detail::resolve(config_path, o);
        auto [art, data] = detail::model_and_data(c, o);
        const auto samples = learn::prepare_samples(art.pipeline, data);
        const auto report = metrics::make_report(learn::evaluate(art.pipeline, art.params, samples));
        detail::ensure_out_dir(c);
        const std::string table = metrics::render_table(report);
        detail::write_text(detail::out_path(c, "metrics.txt"), table);
        detail::write_text(detail::out_path(c, "metrics.csv"), metrics::render_csv(report));
        detail::write_text(detail::out_path(c, "confusion.csv"), metrics::render_confusion_csv(report.cm));
        log.info(table);
        return int{kOk};
    });
}

/// Trains the mfcc and raw arms on one split and appends to <out>/ablation_ledger.csv.
inline int cmd_ablation(const std::string& config_path, const Overrides& o = {}, const Logger& log = Logger(),
                        evalkit::AblationResult* result = nullptr) {
    return detail::guarded(log, [&] {
        const auto c = detail::resolve(config_path, o);
        const auto data = detail::load_and_clean(c, log, nullptr);
        evalkit::AblationConfig ac{c.dataset_name, c.model, c.train, c.test_fraction, c.resample, c.train.seed,
                                   config::snapshot(c)};
        const auto r = evalkit::ablation_run(ac, data, [&](const char* arm, const learn::EpochRecord& rec) {
            log.debug(detail::epoch_line((std::string(arm) + " ").c_str(), rec));
        });
        detail::ensure_out_dir(c);
        evalkit::append_ledger(detail::out_path(c, "ablation_ledger.csv").string(), r, c.train.seed);
        log.info("dataset " + r.dataset + ": f1 with mfcc " + detail::fmt(r.f1_with_mfcc) + ", without mfcc " +
                 detail::fmt(r.f1_without_mfcc));
        if (result) *result = r;
        return int{kOk};
    });
}

/// Writes <out>/embeddings.csv: one row of embedding values and the label per record.
inline int cmd_export_embeddings(const std::string& config_path, const Overrides& o = {}, const Logger& log = Logger()) {
    return detail::guarded(log, [&] {
        const auto c = detail::resolve(config_path, o);
        auto [art, data] = detail::model_and_data(c, o);
        detail::ensure_out_dir(c);
        const auto path = detail::out_path(c, "embeddings.csv").string();
        evalkit::export_embeddings(art.pipeline, art.params, data, path);
        log.info("wrote " + path);
        return int{kOk};
    });
}

}  // namespace lmfcc::cli
