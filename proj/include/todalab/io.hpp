// Output plumbing: deterministic JSON/CSV emission (decimal, 17 significant
// digits), the binary field-cache format, gnuplot XYZ exports, FNV-1a
// checksums and atomic file writes (temp + rename).
//
// Field cache = a pair of files: <base>.json carries the header
// {"magic":"todalab-field","N":...,(optional keys)}, <base>.bin carries the
// interior node values as little-endian 64-bit floats, row-major with y
// outermost (the grid's native index order).

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "todalab/grid.hpp"

static_assert(std::endian::native == std::endian::little,
              "field cache assumes a little-endian host");

namespace todalab {

inline constexpr const char* kArtifactVersion = "0.1.0";

inline std::string format_g17(double x) {
    if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
    if (std::isnan(x)) return "\"nan\"";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Minimal ordered JSON writer; keys keep insertion order so reruns emit
/// byte-identical documents.
class JsonWriter {
  public:
    JsonWriter& begin_object() { return raw("{"), first_.push_back(true), *this; }
    JsonWriter& end_object() { first_.pop_back(); return raw("}"); }
    JsonWriter& begin_array() { return raw("["), first_.push_back(true), *this; }
    JsonWriter& end_array() { first_.pop_back(); return raw("]"); }

    JsonWriter& key(const std::string& k) {
        comma();
        raw("\"" + escape(k) + "\":");
        pending_value_ = true;
        return *this;
    }
    JsonWriter& value(double x) { return item(format_g17(x)); }
    JsonWriter& value(int x) { return item(std::to_string(x)); }
    JsonWriter& value(long long x) { return item(std::to_string(x)); }
    JsonWriter& value(unsigned long long x) { return item(std::to_string(x)); }
    JsonWriter& value(bool b) { return item(b ? "true" : "false"); }
    JsonWriter& value(const std::string& s) { return item("\"" + escape(s) + "\""); }
    JsonWriter& value(const char* s) { return value(std::string(s)); }

    std::string str() const { return out_.str(); }

  private:
    static std::string escape(const std::string& s) {
        std::string r;
        for (char c : s) {
            if (c == '"' || c == '\\') r.push_back('\\');
            if (c == '\n') { r += "\\n"; continue; }
            r.push_back(c);
        }
        return r;
    }
    void comma() {
        if (!first_.empty()) {
            if (!first_.back()) raw(",");
            first_.back() = false;
        }
    }
    JsonWriter& item(const std::string& text) {
        if (!pending_value_) comma();
        pending_value_ = false;
        return raw(text);
    }
    JsonWriter& raw(const std::string& text) {
        if (pending_value_ && (text == "{" || text == "[")) pending_value_ = false;
        out_ << text;
        return *this;
    }
    std::ostringstream out_;
    std::vector<bool> first_;
    bool pending_value_ = false;
};

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Write atomically: temp file in the same directory, then rename.
inline void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    const std::filesystem::path dir = path.parent_path().empty() ? "." : path.parent_path();
    std::filesystem::create_directories(dir);
    const std::filesystem::path tmp = dir / (".tmp-" + path.filename().string());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

struct FieldHeader {
    int n = 0;
    std::string kind = "field";        // "field" | "greens"
    std::map<std::string, double> extra;  // alpha, component, boundary_constant, p_i, p_j ...
};

inline void write_field_cache(const std::filesystem::path& base, const FieldHeader& hdr,
                              const Eigen::VectorXd& values) {
    JsonWriter jw;
    jw.begin_object();
    jw.key("magic").value("todalab-field");
    jw.key("version").value(1);
    jw.key("N").value(hdr.n);
    jw.key("kind").value(hdr.kind);
    jw.key("count").value(static_cast<long long>(values.size()));
    for (const auto& [k, v] : hdr.extra) jw.key(k).value(v);
    jw.end_object();
    atomic_write(base.string() + ".json", jw.str() + "\n");

    std::string bytes(reinterpret_cast<const char*>(values.data()),
                      static_cast<size_t>(values.size()) * sizeof(double));
    atomic_write(base.string() + ".bin", bytes);
}

struct LoadedField {
    FieldHeader header;
    Eigen::VectorXd values;
};

inline LoadedField read_field_cache(const std::filesystem::path& base) {
    const nlohmann::json j = nlohmann::json::parse(read_file(base.string() + ".json"));
    if (j.value("magic", "") != std::string("todalab-field"))
        throw std::runtime_error("not a field cache: " + base.string());
    LoadedField out;
    out.header.n = j.at("N").get<int>();
    out.header.kind = j.value("kind", "field");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it->is_number() && it.key() != "N" && it.key() != "version" && it.key() != "count")
            out.header.extra[it.key()] = it->get<double>();
    const std::string bytes = read_file(base.string() + ".bin");
    const size_t count = j.at("count").get<size_t>();
    if (bytes.size() != count * sizeof(double))
        throw std::runtime_error("field cache size mismatch: " + base.string());
    out.values.resize(static_cast<Eigen::Index>(count));
    std::memcpy(out.values.data(), bytes.data(), bytes.size());
    return out;
}

/// gnuplot-compatible XYZ triplets, blank line between grid rows.
inline std::string xyz_export(const DomainGrid& g, const GridField& f) {
    std::ostringstream os;
    for (int j = 1; j <= g.n; ++j) {
        for (int i = 1; i <= g.n; ++i) {
            const int k = g.index(i, j);
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", g.h * i, g.h * j, f.values[k]);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> columns) : cols_(std::move(columns)) {
        for (size_t i = 0; i < cols_.size(); ++i) out_ << (i ? "," : "") << cols_[i];
        out_ << "\n";
    }
    void cell(double x) { sep(); out_ << (std::isfinite(x) ? fmt(x) : (x > 0 ? "inf" : (std::isnan(x) ? "nan" : "-inf"))); }
    void cell(int x) { sep(); out_ << x; }
    void cell(const std::string& s) { sep(); out_ << s; }
    void end_row() { out_ << "\n"; col_ = 0; }
    std::string str() const { return out_.str(); }

  private:
    static std::string fmt(double x) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        return buf;
    }
    void sep() { if (col_++) out_ << ","; }
    std::vector<std::string> cols_;
    std::ostringstream out_;
    int col_ = 0;
};

}  // namespace todalab
