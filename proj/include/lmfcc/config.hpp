#pragma once

// Run configuration: flat "section.key = value" text, one entry per line,
// '#' starts a comment. Lists are comma-separated.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lmfcc/dataio.hpp"
#include "lmfcc/learn.hpp"

namespace lmfcc::config {

struct RunConfig {
    std::string dataset_name = "dataset";
    std::string data_path;
    char delimiter = ',';
    std::string label_column = "label";
    std::vector<std::string> column_names;  // set when the file has no header row
    std::vector<std::string> drop_columns;
    dataio::LabelMap labels{{"attack"}, {"normal"}};

    double zero_fraction_threshold = 0.5;
    dataio::Resample resample = dataio::Resample::undersample_majority;
    double test_fraction = 0.2;
    std::size_t subsample_rows = 0;

    learn::ModelConfig model;
    learn::TrainConfig train;

    std::string out_dir = "out";
    std::string log_file;

    void validate() const {
        model.validate();
        train.validate();
        labels.validate();
        if (!(zero_fraction_threshold >= 0.0 && zero_fraction_threshold <= 1.0))
            throw ConfigError("prep.zero_fraction_threshold must lie in [0, 1]");
        if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("prep.test_fraction must lie in (0, 1)");
        if (out_dir.empty()) throw ConfigError("output.dir must not be empty");
    }
};

namespace detail {

inline std::string trim(std::string_view s) { return std::string(dataio::detail::trim(s)); }

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

inline double to_real(const std::string& key, const std::string& v) {
    auto d = dataio::detail::parse_number(v);
    if (!d || !std::isfinite(*d) || trim(v).empty()) throw ConfigError(key + ": '" + v + "' is not a finite number");
    return *d;
}

inline std::size_t to_count(const std::string& key, const std::string& v) {
    const double d = to_real(key, v);
    if (d < 0 || d != std::floor(d)) throw ConfigError(key + ": '" + v + "' is not a non-negative integer");
    return static_cast<std::size_t>(d);
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean");
}

inline char to_delimiter(const std::string& key, const std::string& v) {
    if (v == "\\t" || v == "tab") return '\t';
    if (v == "comma") return ',';
    if (v == "semicolon") return ';';
    if (v.size() == 1) return v[0];
    throw ConfigError(key + ": delimiter must be a single character");
}

inline std::string delimiter_name(char c) {
    if (c == '\t') return "tab";
    if (c == ',') return "comma";
    if (c == ';') return "semicolon";
    return std::string(1, c);
}

inline std::string fmt(double v) { return dataio::detail::format_double(v); }

}  // namespace detail

/// Applies one key. Unknown keys are configuration errors.
inline void set_value(RunConfig& c, const std::string& key, const std::string& v) {
    using namespace detail;
    auto& fe = c.model.frontend;
    auto& ec = c.model.encoder;
    if (key == "data.name") c.dataset_name = v;
    else if (key == "data.path") c.data_path = v;
    else if (key == "data.delimiter") c.delimiter = to_delimiter(key, v);
    else if (key == "data.label_column") c.label_column = v;
    else if (key == "data.column_names") c.column_names = split_list(v);
    else if (key == "data.drop_columns") c.drop_columns = split_list(v);
    else if (key == "labels.positive") {
        auto l = split_list(v);
        c.labels.positive = {l.begin(), l.end()};
    } else if (key == "labels.negative") {
        auto l = split_list(v);
        c.labels.negative = {l.begin(), l.end()};
    } else if (key == "prep.zero_fraction_threshold") c.zero_fraction_threshold = to_real(key, v);
    else if (key == "prep.resample") c.resample = dataio::parse_resample(v);
    else if (key == "prep.test_fraction") c.test_fraction = to_real(key, v);
    else if (key == "prep.subsample_rows") c.subsample_rows = to_count(key, v);
    else if (key == "spectral.frame_length") fe.window.frame_length = to_count(key, v);
    else if (key == "spectral.hop") fe.window.hop = to_count(key, v);
    else if (key == "spectral.window") fe.window.window = spectral::parse_window(v);
    else if (key == "spectral.pre_emphasis") fe.window.pre_emphasis = to_real(key, v);
    else if (key == "spectral.sample_rate") fe.sample_rate = to_real(key, v);
    else if (key == "spectral.f_min") fe.f_min = to_real(key, v);
    else if (key == "spectral.f_max") fe.f_max = to_real(key, v);
    else if (key == "mel.filters") fe.filters = to_count(key, v);
    else if (key == "mel.coefficients") fe.coefficients = to_count(key, v);
    else if (key == "mel.log_floor") fe.log_floor = to_real(key, v);
    else if (key == "mel.orth_weight") c.model.orth_weight = to_real(key, v);
    else if (key == "mel.psd_projection") c.train.psd_projection = to_bool(key, v);
    else if (key == "encoder.blocks") ec.n_blocks = to_count(key, v);
    else if (key == "encoder.hidden") ec.hidden_width = to_count(key, v);
    else if (key == "encoder.embedding") ec.embedding_dim = to_count(key, v);
    else if (key == "train.lr") c.train.lr = to_real(key, v);
    else if (key == "train.epochs") c.train.epochs = to_count(key, v);
    else if (key == "train.batch_size") c.train.batch_size = to_count(key, v);
    else if (key == "train.seed") c.train.seed = to_count(key, v);
    else if (key == "train.patience") c.train.patience = to_count(key, v);
    else if (key == "train.clip_norm") c.train.clip_norm = to_real(key, v);
    else if (key == "pipeline.variant") c.model.variant = learn::parse_variant(v);
    else if (key == "pipeline.pca_components") c.model.pca_components = to_count(key, v);
    else if (key == "output.dir") c.out_dir = v;
    else if (key == "output.log_file") c.log_file = v;
    else throw ConfigError("unknown configuration key '" + key + "'");
}

inline RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("configuration line " + std::to_string(lineno) + " has no '=': " + t);
        set_value(c, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    }
    return c;
}

/// Reads and parses a configuration file. A relative data.path is resolved
/// against the configuration file's directory.
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read configuration file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig c = parse_config(ss.str());
    if (!c.data_path.empty() && std::filesystem::path(c.data_path).is_relative())
        c.data_path = (std::filesystem::path(path).parent_path() / c.data_path).lexically_normal().string();
    return c;
}

/// Canonical "key = value" rendering; parse_config(snapshot(c)) reproduces c.
/// The output section is left out when `include_output` is false, so that
/// model files do not depend on where they were written.
inline std::string snapshot(const RunConfig& c, bool include_output = true) {
    using namespace detail;
    const auto& fe = c.model.frontend;
    const auto& ec = c.model.encoder;
    std::vector<std::string> pos(c.labels.positive.begin(), c.labels.positive.end());
    std::vector<std::string> neg(c.labels.negative.begin(), c.labels.negative.end());
    const char* resample = c.resample == dataio::Resample::undersample_majority ? "undersample"
                           : c.resample == dataio::Resample::oversample_minority ? "oversample"
                                                                                  : "none";
    std::ostringstream os;
    os << "data.name = " << c.dataset_name << '\n'
       << "data.path = " << c.data_path << '\n'
       << "data.delimiter = " << delimiter_name(c.delimiter) << '\n'
       << "data.label_column = " << c.label_column << '\n'
       << "data.column_names = " << join(c.column_names) << '\n'
       << "data.drop_columns = " << join(c.drop_columns) << '\n'
       << "labels.positive = " << join(pos) << '\n'
       << "labels.negative = " << join(neg) << '\n'
       << "prep.zero_fraction_threshold = " << fmt(c.zero_fraction_threshold) << '\n'
       << "prep.resample = " << resample << '\n'
       << "prep.test_fraction = " << fmt(c.test_fraction) << '\n'
       << "prep.subsample_rows = " << c.subsample_rows << '\n'
       << "spectral.frame_length = " << fe.window.frame_length << '\n'
       << "spectral.hop = " << fe.window.hop << '\n'
       << "spectral.window = " << spectral::to_string(fe.window.window) << '\n'
       << "spectral.pre_emphasis = " << fmt(fe.window.pre_emphasis) << '\n'
       << "spectral.sample_rate = " << fmt(fe.sample_rate) << '\n'
       << "spectral.f_min = " << fmt(fe.f_min) << '\n'
       << "spectral.f_max = " << fmt(fe.f_max) << '\n'
       << "mel.filters = " << fe.filters << '\n'
       << "mel.coefficients = " << fe.coefficients << '\n'
       << "mel.log_floor = " << fmt(fe.log_floor) << '\n'
       << "mel.orth_weight = " << fmt(c.model.orth_weight) << '\n'
       << "mel.psd_projection = " << (c.train.psd_projection ? "true" : "false") << '\n'
       << "encoder.blocks = " << ec.n_blocks << '\n'
       << "encoder.hidden = " << ec.hidden_width << '\n'
       << "encoder.embedding = " << ec.embedding_dim << '\n'
       << "train.lr = " << fmt(c.train.lr) << '\n'
       << "train.epochs = " << c.train.epochs << '\n'
       << "train.batch_size = " << c.train.batch_size << '\n'
       << "train.seed = " << c.train.seed << '\n'
       << "train.patience = " << c.train.patience << '\n'
       << "train.clip_norm = " << fmt(c.train.clip_norm) << '\n'
       << "pipeline.variant = " << learn::to_string(c.model.variant) << '\n'
       << "pipeline.pca_components = " << c.model.pca_components << '\n';
    if (include_output) os << "output.dir = " << c.out_dir << '\n' << "output.log_file = " << c.log_file << '\n';
    return os.str();
}

}  // namespace lmfcc::config
