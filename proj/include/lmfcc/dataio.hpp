#pragma once

// Tabular intrusion-dataset loading and preprocessing: column cleaning, label
// encoding, min-max scaling, class rebalancing and stratified splitting.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmfcc/core.hpp"

namespace lmfcc::dataio {

struct RawColumn {
    std::string name;
    // Populated while every cell so far parsed as a number (empty cells count as NaN).
    std::vector<double> numbers;
    // Populated once the column holds any non-numeric cell; then it holds every cell.
    std::vector<std::string> text;
    bool is_text = false;
    std::size_t numeric_cells = 0;            // cells that parsed as numbers
    std::size_t first_text_row = 0;           // 1-based data row of the first non-numeric cell
};

// Column-major table; keeps memory proportional to the numeric payload.
struct RawTable {
    std::vector<RawColumn> columns;
    std::size_t n_rows = 0;
    std::size_t label_index = 0;

    std::size_t n_cols() const { return columns.size(); }
    const RawColumn& label() const { return columns[label_index]; }

    std::vector<std::string> column_names() const {
        std::vector<std::string> out;
        out.reserve(columns.size());
        for (const auto& c : columns) out.push_back(c.name);
        return out;
    }
};

struct LabelMap {
    std::set<std::string> positive;  // attack -> 1
    std::set<std::string> negative;  // normal -> 0

    void validate() const {
        for (const auto& p : positive)
            if (negative.count(p)) throw ConfigError("label '" + p + "' is listed as both normal and attack");
        if (positive.empty() || negative.empty()) throw ConfigError("label map needs at least one normal and one attack label");
    }
};

struct ColumnRange {
    std::string name;
    double min = 0.0;
    double max = 0.0;
};

struct Dataset {
    Matrix features;                  // n_rows x d
    std::vector<int> labels;          // 0 = normal, 1 = attack
    std::vector<std::string> feature_names;
    std::vector<std::size_t> row_ids; // time index: position in the source file
    std::optional<std::vector<ColumnRange>> normalizer;

    std::size_t size() const { return labels.size(); }
    std::size_t width() const { return features.cols; }

    std::size_t count(int label) const {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
    }

    // Rows in the given order (duplicates allowed).
    Dataset select(const std::vector<std::size_t>& idx) const {
        Dataset out;
        out.feature_names = feature_names;
        out.normalizer = normalizer;
        out.features = Matrix(idx.size(), features.cols);
        out.labels.reserve(idx.size());
        out.row_ids.reserve(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            auto src = features.row(idx[i]);
            std::copy(src.begin(), src.end(), out.features.row(i).begin());
            out.labels.push_back(labels[idx[i]]);
            out.row_ids.push_back(row_ids[idx[i]]);
        }
        return out;
    }

    // Fingerprint over row ids and labels; two splits with equal fingerprints hold the same rows.
    std::uint64_t fingerprint() const {
        std::uint64_t h = fnv1a(row_ids.data(), row_ids.size() * sizeof(std::size_t));
        return fnv1a(labels.data(), labels.size() * sizeof(int), h);
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Numeric cell parse. Empty cells read as NaN; "inf", "Infinity" and "nan" are numeric.
inline std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc::result_out_of_range) {
        // Saturate like strtod does.
        v = (s.front() == '-') ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        return v;
    }
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline void split_line(std::string_view line, char delim, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline void push_cell(RawColumn& col, std::string_view cell, std::size_t row, bool force_text) {
    auto num = force_text ? std::nullopt : parse_number(cell);
    if (num && !trim(cell).empty()) ++col.numeric_cells;
    if (!col.is_text) {
        if (num) {
            col.numbers.push_back(*num);
            return;
        }
        col.is_text = true;
        col.first_text_row = row;
        col.text.reserve(col.numbers.capacity());
        for (double v : col.numbers) col.text.push_back(format_double(v));
        col.numbers.clear();
        col.numbers.shrink_to_fit();
    }
    col.text.emplace_back(trim(cell));
}

}  // namespace detail

/// Reads a delimiter-separated file. The first line is the header unless
/// `column_names` is given, in which case every line is data.
inline RawTable load_table(const std::string& path, char delimiter, const std::string& label_column,
                           const std::vector<std::string>& column_names = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file '" + path + "'");

    RawTable t;
    std::string line;
    std::vector<std::string_view> cells;
    std::vector<std::string> names = column_names;
    if (names.empty()) {
        if (!std::getline(in, line)) throw DataError("dataset file '" + path + "' is empty");
        detail::split_line(line, delimiter, cells);
        for (auto c : cells) names.emplace_back(detail::trim(c));
    }
    auto it = std::find(names.begin(), names.end(), label_column);
    if (it == names.end()) throw ConfigError("label column '" + label_column + "' not found in '" + path + "'");
    t.label_index = static_cast<std::size_t>(it - names.begin());
    t.columns.resize(names.size());
    for (std::size_t j = 0; j < names.size(); ++j) t.columns[j].name = names[j];

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        detail::split_line(line, delimiter, cells);
        if (cells.size() != names.size())
            throw DataError("ragged row " + std::to_string(row) + ": expected " + std::to_string(names.size()) +
                            " cells, found " + std::to_string(cells.size()));
        for (std::size_t j = 0; j < cells.size(); ++j)
            detail::push_cell(t.columns[j], cells[j], row, j == t.label_index);
    }
    if (row == 0) throw DataError("dataset file '" + path + "' has no data rows");
    t.n_rows = row;
    return t;
}

/// Removes the named columns. Unknown names are a configuration error.
inline RawTable drop_columns(RawTable t, const std::vector<std::string>& names) {
    for (const auto& n : names) {
        auto it = std::find_if(t.columns.begin(), t.columns.end(), [&](const RawColumn& c) { return c.name == n; });
        if (it == t.columns.end()) throw ConfigError("cannot drop unknown column '" + n + "'");
        if (static_cast<std::size_t>(it - t.columns.begin()) == t.label_index)
            throw ConfigError("cannot drop the label column '" + n + "'");
        const std::string label = t.label().name;
        t.columns.erase(it);
        for (std::size_t j = 0; j < t.columns.size(); ++j)
            if (t.columns[j].name == label) t.label_index = j;
    }
    return t;
}

struct DroppedColumn {
    std::string name;
    std::string reason;  // "nan/inf" or "zero-fraction"
};

/// Drops numeric feature columns holding any NaN/inf cell, or whose fraction of
/// exact zeros is strictly greater than `zero_fraction_threshold`. Text columns
/// and the label column are never dropped here.
inline RawTable clean_columns(const RawTable& t, double zero_fraction_threshold,
                              std::vector<DroppedColumn>* audit = nullptr) {
    if (!(zero_fraction_threshold >= 0.0 && zero_fraction_threshold <= 1.0))
        throw ConfigError("zero-fraction threshold must lie in [0, 1]");
    RawTable out;
    out.n_rows = t.n_rows;
    std::size_t features_kept = 0;
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
        const auto& col = t.columns[j];
        if (j != t.label_index && !col.is_text) {
            bool non_finite = false;
            std::size_t zeros = 0;
            for (double v : col.numbers) {
                if (!std::isfinite(v)) non_finite = true;
                else if (v == 0.0) ++zeros;
            }
            const char* reason = nullptr;
            if (non_finite) reason = "nan/inf";
            else if (static_cast<double>(zeros) / static_cast<double>(t.n_rows) > zero_fraction_threshold)
                reason = "zero-fraction";
            if (reason) {
                if (audit) audit->push_back({col.name, reason});
                continue;
            }
        }
        if (j == t.label_index) out.label_index = out.columns.size();
        else ++features_kept;
        out.columns.push_back(col);
    }
    if (features_kept == 0) throw DataError("every feature column was dropped during cleaning; dataset is empty");
    return out;
}

/// Maps labels to {0,1} and parses features. Fully non-numeric feature columns
/// are integer-encoded by first appearance; a column mixing numbers and text is an error.
inline Dataset encode_labels(const RawTable& t, const LabelMap& map) {
    map.validate();
    Dataset d;
    const auto& lab = t.label();
    d.labels.reserve(t.n_rows);
    for (std::size_t i = 0; i < t.n_rows; ++i) {
        const std::string& v = lab.text[i];
        if (map.positive.count(v)) d.labels.push_back(1);
        else if (map.negative.count(v)) d.labels.push_back(0);
        else throw DataError("label value '" + v + "' (row " + std::to_string(i + 1) + ") is not in the label map");
    }

    std::vector<const RawColumn*> feats;
    for (std::size_t j = 0; j < t.columns.size(); ++j)
        if (j != t.label_index) feats.push_back(&t.columns[j]);
    d.features = Matrix(t.n_rows, feats.size());
    for (std::size_t j = 0; j < feats.size(); ++j) {
        const RawColumn& col = *feats[j];
        d.feature_names.push_back(col.name);
        if (!col.is_text) {
            for (std::size_t i = 0; i < t.n_rows; ++i) d.features(i, j) = col.numbers[i];
            continue;
        }
        if (col.numeric_cells != 0)
            throw DataError("column '" + col.name + "' mixes numbers and text: non-numeric cell '" +
                            col.text[col.first_text_row - 1] + "' at row " + std::to_string(col.first_text_row));
        std::unordered_map<std::string, double> codes;
        for (std::size_t i = 0; i < t.n_rows; ++i) {
            auto [it, inserted] = codes.emplace(col.text[i], static_cast<double>(codes.size()));
            d.features(i, j) = it->second;
        }
    }
    if (!all_finite(d.features.data))
        throw DataError("non-finite feature values remain after cleaning");
    d.row_ids.resize(t.n_rows);
    for (std::size_t i = 0; i < t.n_rows; ++i) d.row_ids[i] = i;
    return d;
}

/// Applies a stored normalizer. Values outside the fitted range are not clipped.
inline Dataset apply_normalizer(Dataset d, const std::vector<ColumnRange>& norm) {
    if (norm.size() != d.width())
        throw DimensionError("normalizer has " + std::to_string(norm.size()) + " columns, dataset has " +
                             std::to_string(d.width()));
    for (std::size_t j = 0; j < d.width(); ++j) {
        const double lo = norm[j].min, span = norm[j].max - norm[j].min;
        for (std::size_t i = 0; i < d.size(); ++i) {
            double& v = d.features(i, j);
            v = span > 0.0 ? (v - lo) / span : 0.0;
        }
    }
    d.normalizer = norm;
    return d;
}

inline std::vector<ColumnRange> fit_normalizer(const Dataset& d) {
    std::vector<ColumnRange> norm(d.width());
    for (std::size_t j = 0; j < d.width(); ++j) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < d.size(); ++i) {
            lo = std::min(lo, d.features(i, j));
            hi = std::max(hi, d.features(i, j));
        }
        if (d.size() == 0) lo = hi = 0.0;
        norm[j] = {d.feature_names.empty() ? std::string() : d.feature_names[j], lo, hi};
    }
    return norm;
}

/// (x - min) / (max - min) per column; constant columns map to 0.
inline Dataset minmax_normalize(Dataset d) {
    auto norm = fit_normalizer(d);
    return apply_normalizer(std::move(d), norm);
}

enum class Resample { undersample_majority, oversample_minority, none };

inline Resample parse_resample(const std::string& s) {
    if (s == "undersample" || s == "undersample-majority") return Resample::undersample_majority;
    if (s == "oversample" || s == "oversample-minority") return Resample::oversample_minority;
    if (s == "none") return Resample::none;
    throw ConfigError("unknown resample strategy '" + s + "'");
}

namespace detail {
inline std::vector<std::size_t> class_rows(const Dataset& d, int label) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d.labels[i] == label) idx.push_back(i);
    return idx;
}
}  // namespace detail

/// Equalizes class counts. Feature vectors are copied unchanged; output keeps source order.
inline Dataset rebalance(const Dataset& d, Resample strategy, std::uint64_t seed) {
    auto neg = detail::class_rows(d, 0), pos = detail::class_rows(d, 1);
    if (neg.empty() || pos.empty()) throw DataError("rebalance needs both classes present");
    if (strategy == Resample::none) return d;
    auto& major = neg.size() >= pos.size() ? neg : pos;
    auto& minor = neg.size() >= pos.size() ? pos : neg;
    Rng rng(seed);
    std::vector<std::size_t> keep;
    if (strategy == Resample::undersample_majority) {
        rng.shuffle(major);
        major.resize(minor.size());
        keep = minor;
        keep.insert(keep.end(), major.begin(), major.end());
    } else {
        keep = major;
        keep.insert(keep.end(), minor.begin(), minor.end());
        for (std::size_t extra = minor.size(); extra < major.size(); ++extra) keep.push_back(minor[rng.index(minor.size())]);
    }
    std::sort(keep.begin(), keep.end());
    return d.select(keep);
}

/// Per-class shuffled split; each class contributes round(n_c * test_fraction) test rows.
inline std::pair<Dataset, Dataset> stratified_split(const Dataset& d, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must lie in (0, 1)");
    Rng rng(seed);
    std::vector<std::size_t> train, test;
    for (int label : {0, 1}) {
        auto rows = detail::class_rows(d, label);
        const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * test_fraction));
        if (rows.size() < 2 || n_test == 0 || n_test >= rows.size())
            throw DataError("class " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                            " rows; too few to stratify at test fraction " + detail::format_double(test_fraction));
        rng.shuffle(rows);
        test.insert(test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
        train.insert(train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {d.select(train), d.select(test)};
}

/// Class-proportional random subsample of `n_rows` rows (no-op when the dataset is not larger).
inline Dataset stratified_subsample(const Dataset& d, std::size_t n_rows, std::uint64_t seed) {
    if (n_rows == 0 || n_rows >= d.size()) return d;
    Rng rng(seed);
    std::vector<std::size_t> keep;
    const double frac = static_cast<double>(n_rows) / static_cast<double>(d.size());
    auto neg = detail::class_rows(d, 0), pos = detail::class_rows(d, 1);
    auto n_pos = static_cast<std::size_t>(std::llround(static_cast<double>(pos.size()) * frac));
    n_pos = std::min(n_pos, pos.size());
    const std::size_t n_neg = std::min(n_rows - n_pos, neg.size());
    rng.shuffle(neg);
    rng.shuffle(pos);
    keep.insert(keep.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(n_neg));
    keep.insert(keep.end(), pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_pos));
    std::sort(keep.begin(), keep.end());
    return d.select(keep);
}

// ---------------------------------------------------------------------------
// Persistence of preprocessed splits: header of feature names plus "label",
// values printed with round-trip precision.

inline void write_dataset(const Dataset& d, const std::string& path, char delimiter = ',') {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    for (const auto& n : d.feature_names) out << n << delimiter;
    out << "label\n";
    std::string line;
    for (std::size_t i = 0; i < d.size(); ++i) {
        line.clear();
        for (std::size_t j = 0; j < d.width(); ++j) {
            line += detail::format_double(d.features(i, j));
            line += delimiter;
        }
        line += d.labels[i] ? '1' : '0';
        line += '\n';
        out << line;
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

inline Dataset load_dataset(const std::string& path, char delimiter = ',') {
    auto t = load_table(path, delimiter, "label");
    return encode_labels(t, LabelMap{{"1"}, {"0"}});
}

inline void write_normalizer(const std::vector<ColumnRange>& norm, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "name,min,max\n";
    for (const auto& c : norm)
        out << c.name << ',' << detail::format_double(c.min) << ',' << detail::format_double(c.max) << '\n';
}

inline std::vector<ColumnRange> read_normalizer(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open normalizer file '" + path + "'");
    std::string line;
    std::getline(in, line);
    std::vector<ColumnRange> norm;
    std::vector<std::string_view> cells;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        detail::split_line(line, ',', cells);
        if (cells.size() != 3) throw DataError("malformed normalizer line: " + line);
        auto lo = detail::parse_number(cells[1]), hi = detail::parse_number(cells[2]);
        if (!lo || !hi) throw DataError("malformed normalizer line: " + line);
        norm.push_back({std::string(cells[0]), *lo, *hi});
    }
    return norm;
}

}  // namespace lmfcc::dataio
