#pragma once

// Model artifact: a text header (magic, version, config snapshot, normalizer
// names, dimension table, payload size and checksum) followed by the arrays
// as little-endian IEEE-754 doubles in header order.
//
//   LMFCC-MODEL
//   version 1
//   config <n>            n snapshot lines follow
//   signal_length <T>
//   normalizer <n>        n column names follow
//   history_digest <hex>
//   arrays <n>            n lines "<name> <rows> <cols>" follow
//   payload_bytes <bytes>
//   checksum <hex>        FNV-1a over the lines above plus the payload
//   end

#include <bit>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "lmfcc/config.hpp"
#include "lmfcc/learn.hpp"

namespace lmfcc::model_io {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kMagic = "LMFCC-MODEL";

class ModelFormatError : public std::runtime_error {
public:
    enum class Kind { corrupt, truncated, version };
    ModelFormatError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
    Kind kind;
};

struct ModelArtifact {
    int version = kFormatVersion;
    config::RunConfig config;
    learn::Pipeline pipeline;
    learn::ParamSet params;
    std::vector<dataio::ColumnRange> normalizer;  // may be empty
    std::string history_digest;
};

namespace detail {

struct NamedArray {
    std::string name;
    std::size_t rows, cols;
    std::vector<double>* data;
};

inline std::vector<NamedArray> arrays_of(ModelArtifact& a, std::vector<double>& norm_min, std::vector<double>& norm_max,
                                         Vector& pca_var) {
    std::vector<NamedArray> out;
    learn::for_each_array(a.params, [&](const std::string& n, std::size_t r, std::size_t c, std::vector<double>& v) {
        out.push_back({n, r, c, &v});
    });
    if (a.pipeline.pca) {
        auto& p = *a.pipeline.pca;
        out.push_back({"pca.mean", p.mean.size(), 1, &p.mean});
        out.push_back({"pca.components", p.components.rows, p.components.cols, &p.components.data});
        pca_var = p.explained_variance;
        out.push_back({"pca.variance", pca_var.size(), 1, &pca_var});
    }
    out.push_back({"normalizer.min", norm_min.size(), 1, &norm_min});
    out.push_back({"normalizer.max", norm_max.size(), 1, &norm_max});
    return out;
}

inline void put_le(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

inline double get_le(const char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

inline std::string hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace detail

inline std::string serialize(const ModelArtifact& artifact) {
    ModelArtifact a = artifact;
    std::vector<double> nmin, nmax;
    for (const auto& c : a.normalizer) {
        nmin.push_back(c.min);
        nmax.push_back(c.max);
    }
    Vector pca_var;
    const auto arrays = detail::arrays_of(a, nmin, nmax, pca_var);

    std::string payload;
    for (const auto& arr : arrays)
        for (double v : *arr.data) detail::put_le(payload, v);

    const std::string snap = config::snapshot(a.config, false);
    std::size_t snap_lines = 0;
    for (char c : snap) snap_lines += c == '\n';

    std::ostringstream h;
    h << kMagic << '\n' << "version " << a.version << '\n' << "config " << snap_lines << '\n' << snap;
    h << "signal_length " << a.pipeline.signal_length << '\n';
    h << "normalizer " << a.normalizer.size() << '\n';
    for (const auto& c : a.normalizer) h << c.name << '\n';
    h << "history_digest " << (a.history_digest.empty() ? "-" : a.history_digest) << '\n';
    h << "arrays " << arrays.size() << '\n';
    for (const auto& arr : arrays) h << arr.name << ' ' << arr.rows << ' ' << arr.cols << '\n';
    h << "payload_bytes " << payload.size() << '\n';
    const std::string covered = h.str();
    h << "checksum " << detail::hex(fnv1a(covered + payload)) << '\n';
    h << "end\n";
    return h.str() + payload;
}

inline void save_model(const ModelArtifact& a, const std::string& path) {
    const std::string bytes = serialize(a);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write model file '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for model file '" + path + "'");
}

namespace detail {

// Line reader over the raw bytes; running out of input means truncation.
class HeaderReader {
public:
    explicit HeaderReader(const std::string& bytes) : bytes_(bytes) {}

    std::string line() {
        const auto nl = bytes_.find('\n', pos_);
        if (nl == std::string::npos)
            throw ModelFormatError(ModelFormatError::Kind::truncated, "model file ends inside its header");
        std::string l = bytes_.substr(pos_, nl - pos_);
        pos_ = nl + 1;
        return l;
    }

    // "<key> <value>"
    std::string field(const std::string& key) {
        const std::string l = line();
        if (l.rfind(key + " ", 0) != 0)
            throw ModelFormatError(ModelFormatError::Kind::corrupt, "model header: expected '" + key + "', found '" + l + "'");
        return l.substr(key.size() + 1);
    }

    std::size_t count(const std::string& key) {
        const std::string v = field(key);
        std::size_t n = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
        if (ec != std::errc() || p != v.data() + v.size())
            throw ModelFormatError(ModelFormatError::Kind::corrupt, "model header: bad number for '" + key + "'");
        return n;
    }

    std::size_t position() const { return pos_; }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline ModelArtifact deserialize(const std::string& bytes) {
    using Kind = ModelFormatError::Kind;
    detail::HeaderReader rd(bytes);
    if (bytes.rfind(kMagic, 0) != 0) {
        if (std::string(kMagic).rfind(bytes, 0) == 0)
            throw ModelFormatError(Kind::truncated, "model file ends inside its header");
        throw ModelFormatError(Kind::corrupt, "not a model file (bad magic)");
    }
    rd.line();
    const std::size_t version = rd.count("version");
    if (version != static_cast<std::size_t>(kFormatVersion))
        throw ModelFormatError(Kind::version, "model format version " + std::to_string(version) +
                                                  " is not supported; this build reads version " +
                                                  std::to_string(kFormatVersion));
    ModelArtifact a;
    const std::size_t snap_lines = rd.count("config");
    std::string snap;
    for (std::size_t i = 0; i < snap_lines; ++i) snap += rd.line() + '\n';
    try {
        a.config = config::parse_config(snap);
        a.config.validate();
    } catch (const ConfigError& e) {
        throw ModelFormatError(Kind::corrupt, std::string("model header: invalid configuration: ") + e.what());
    }
    const std::size_t signal_length = rd.count("signal_length");
    const std::size_t n_norm = rd.count("normalizer");
    std::vector<std::string> norm_names;
    for (std::size_t i = 0; i < n_norm; ++i) norm_names.push_back(rd.line());
    a.history_digest = rd.field("history_digest");
    if (a.history_digest == "-") a.history_digest.clear();
    const std::size_t n_arrays = rd.count("arrays");
    struct Dim {
        std::string name;
        std::size_t rows, cols;
    };
    std::vector<Dim> dims;
    for (std::size_t i = 0; i < n_arrays; ++i) {
        std::istringstream ls(rd.line());
        Dim d;
        if (!(ls >> d.name >> d.rows >> d.cols))
            throw ModelFormatError(Kind::corrupt, "model header: malformed dimension line " + std::to_string(i));
        dims.push_back(d);
    }
    const std::size_t payload_bytes = rd.count("payload_bytes");
    const std::size_t covered = rd.position();
    const std::string checksum = rd.field("checksum");
    if (rd.line() != "end") throw ModelFormatError(Kind::corrupt, "model header: missing 'end'");

    const std::size_t start = rd.position();
    if (bytes.size() - start < payload_bytes)
        throw ModelFormatError(Kind::truncated, "model payload truncated: " + std::to_string(bytes.size() - start) +
                                                    " of " + std::to_string(payload_bytes) + " bytes present");
    if (bytes.size() - start > payload_bytes)
        throw ModelFormatError(Kind::corrupt, "model file has trailing bytes after the payload");
    if (detail::hex(fnv1a(bytes.substr(0, covered) + bytes.substr(start))) != checksum)
        throw ModelFormatError(Kind::corrupt, "model checksum mismatch");

    // Rebuild the skeleton from the configuration, then check the table against it.
    try {
        a.pipeline = learn::make_pipeline(a.config.model, signal_length);
    } catch (const std::exception& e) {
        throw ModelFormatError(Kind::corrupt, std::string("model header: ") + e.what());
    }
    if (a.config.model.pca_components) {
        if (dims.size() < 5) throw ModelFormatError(Kind::corrupt, "model header: PCA arrays missing");
        const Dim& comp = dims[dims.size() - 4];
        a.pipeline.pca = pca::PcaModel{Vector(comp.cols), Matrix(comp.rows, comp.cols), Vector(comp.rows)};
    }
    try {
        a.params = learn::init_params(a.pipeline, 0);
    } catch (const std::exception& e) {
        throw ModelFormatError(Kind::corrupt, std::string("model header: ") + e.what());
    }
    std::vector<double> nmin(n_norm), nmax(n_norm);
    Vector pca_var;
    auto arrays = detail::arrays_of(a, nmin, nmax, pca_var);
    if (arrays.size() != dims.size())
        throw ModelFormatError(Kind::corrupt, "model header lists " + std::to_string(dims.size()) + " arrays, expected " +
                                                  std::to_string(arrays.size()));
    std::size_t expect_bytes = 0;
    for (std::size_t i = 0; i < arrays.size(); ++i) {
        if (arrays[i].name != dims[i].name || arrays[i].rows != dims[i].rows || arrays[i].cols != dims[i].cols)
            throw ModelFormatError(Kind::corrupt, "model array '" + dims[i].name + "' " + std::to_string(dims[i].rows) +
                                                      "x" + std::to_string(dims[i].cols) + " does not match expected '" +
                                                      arrays[i].name + "' " + std::to_string(arrays[i].rows) + "x" +
                                                      std::to_string(arrays[i].cols));
        expect_bytes += arrays[i].data->size() * 8;
    }
    if (expect_bytes != payload_bytes) throw ModelFormatError(Kind::corrupt, "model payload size disagrees with dimension table");

    const char* p = bytes.data() + start;
    for (auto& arr : arrays)
        for (double& v : *arr.data) {
            v = detail::get_le(p);
            p += 8;
        }
    if (a.pipeline.pca) a.pipeline.pca->explained_variance = pca_var;
    for (std::size_t i = 0; i < n_norm; ++i) a.normalizer.push_back({norm_names[i], nmin[i], nmax[i]});
    return a;
}

inline ModelArtifact load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize(ss.str());
}

}  // namespace lmfcc::model_io
