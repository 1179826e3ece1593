// Experiment configuration: a flat UTF-8 "key = value" file, '#' comments,
// unknown keys rejected, fully validated before any computation runs.
// serialize() followed by parse() reproduces the config exactly.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "todalab/cartan.hpp"

namespace todalab {

enum class RunMode { thresholds, solve, continuation, certify, sweep, deflate };

inline std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::thresholds: return "thresholds";
        case RunMode::solve: return "solve";
        case RunMode::continuation: return "continuation";
        case RunMode::certify: return "certify";
        case RunMode::sweep: return "sweep";
        case RunMode::deflate: return "deflate";
    }
    return "?";
}

struct SourceSpec {
    double x = 0.0, y = 0.0, alpha = 0.0;

    bool operator==(const SourceSpec&) const = default;
};

struct ExperimentConfig {
    RunMode mode = RunMode::solve;
    Family family = Family::A;
    int rank = 2;
    int grid_n = 63;
    std::vector<double> lambda;          // explicit lambda vector ...
    std::optional<double> s;             // ... or a fraction of the threshold box
    int steps = 8;                       // continuation steps
    int deflate_starts = 20;
    unsigned long long seed = 1;
    std::string out_dir = "out";
    std::string f_preset = "zero";       // zero | quadratic
    double f_coeff = 1.0;
    double f_center_x = 0.5, f_center_y = 0.5;
    std::vector<SourceSpec> sources;
    bool certify = false;                // run certificates during solve/continuation
    bool dump_fields = true;
    std::vector<double> s_grid;          // sweep mode
    int max_rank = 10;                   // thresholds mode
    std::vector<Family> families{Family::A, Family::B, Family::C, Family::D,
                                 Family::E, Family::F, Family::G};
    std::string manifest;                // certify mode: run manifest to read

    bool operator==(const ExperimentConfig& o) const = default;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

inline double parse_double(const std::string& s, const std::string& key) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw ConfigError("config: bad number '" + s + "' for key " + key);
    }
}

inline long long parse_int(const std::string& s, const std::string& key) {
    try {
        size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        throw ConfigError("config: bad integer '" + s + "' for key " + key);
    }
}

inline bool parse_bool(const std::string& s, const std::string& key) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("config: bad boolean '" + s + "' for key " + key);
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
    if (!is_valid(LieType{c.family, c.rank}))
        throw ConfigError("config: invalid family/rank " + LieType{c.family, c.rank}.name());
    if (c.grid_n < 7) throw ConfigError("config: grid_n must be >= 7");
    if (!c.lambda.empty() && c.s)
        throw ConfigError("config: lambda and s are mutually exclusive");
    if (!c.lambda.empty() && static_cast<int>(c.lambda.size()) != c.rank)
        throw ConfigError("config: lambda must have one entry per component");
    for (double l : c.lambda)
        if (l < 0.0) throw ConfigError("config: lambda entries must be nonnegative");
    if (c.s && !(*c.s >= 0.0 && *c.s <= 1.2))
        throw ConfigError("config: s must lie in [0, 1.2]");
    if (c.steps < 1) throw ConfigError("config: steps must be >= 1");
    if (c.deflate_starts < 0) throw ConfigError("config: deflate_starts must be >= 0");
    if (c.f_preset != "zero" && c.f_preset != "quadratic")
        throw ConfigError("config: f_preset must be zero or quadratic");
    if (c.f_preset == "quadratic" && c.f_coeff < 0.0)
        throw ConfigError("config: quadratic f must have nonnegative coefficient");
    for (const SourceSpec& s : c.sources) {
        if (!(s.alpha > 0.0)) throw ConfigError("config: source alpha must be positive");
        if (!(s.x > 0.0 && s.x < 1.0 && s.y > 0.0 && s.y < 1.0))
            throw ConfigError("config: source point must lie strictly inside the unit square");
    }
    for (double s : c.s_grid)
        if (!(s >= 0.0 && s <= 1.2))
            throw ConfigError("config: sweep s values must lie in [0, 1.2]");
    if (c.mode == RunMode::sweep && c.s_grid.empty())
        throw ConfigError("config: sweep mode needs s_grid");
    if (c.mode == RunMode::certify && c.manifest.empty())
        throw ConfigError("config: certify mode needs manifest");
    if (c.max_rank < 1) throw ConfigError("config: max_rank must be >= 1");
}

inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    c.lambda.clear();
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool saw_families = false;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));

        if (key == "mode") {
            if (val == "thresholds") c.mode = RunMode::thresholds;
            else if (val == "solve") c.mode = RunMode::solve;
            else if (val == "continuation") c.mode = RunMode::continuation;
            else if (val == "certify") c.mode = RunMode::certify;
            else if (val == "sweep") c.mode = RunMode::sweep;
            else if (val == "deflate") c.mode = RunMode::deflate;
            else throw ConfigError("config: unknown mode '" + val + "'");
        } else if (key == "family") {
            const auto f = val.size() == 1 ? family_from_letter(val[0]) : std::nullopt;
            if (!f) throw ConfigError("config: unknown family '" + val + "'");
            c.family = *f;
        } else if (key == "rank") {
            c.rank = static_cast<int>(detail::parse_int(val, key));
        } else if (key == "grid_n") {
            c.grid_n = static_cast<int>(detail::parse_int(val, key));
        } else if (key == "lambda") {
            for (const std::string& tok : detail::split(val, ','))
                c.lambda.push_back(detail::parse_double(tok, key));
        } else if (key == "s") {
            c.s = detail::parse_double(val, key);
        } else if (key == "steps") {
            c.steps = static_cast<int>(detail::parse_int(val, key));
        } else if (key == "deflate_starts") {
            c.deflate_starts = static_cast<int>(detail::parse_int(val, key));
        } else if (key == "seed") {
            c.seed = static_cast<unsigned long long>(detail::parse_int(val, key));
        } else if (key == "out_dir") {
            c.out_dir = val;
        } else if (key == "f_preset") {
            c.f_preset = val;
        } else if (key == "f_coeff") {
            c.f_coeff = detail::parse_double(val, key);
        } else if (key == "f_center") {
            const auto parts = detail::split(val, ',');
            if (parts.size() != 2) throw ConfigError("config: f_center needs x,y");
            c.f_center_x = detail::parse_double(parts[0], key);
            c.f_center_y = detail::parse_double(parts[1], key);
        } else if (key == "sources") {
            for (const std::string& group : detail::split(val, ';')) {
                if (group.empty()) continue;
                const auto parts = detail::split(group, ',');
                if (parts.size() != 3) throw ConfigError("config: each source needs x,y,alpha");
                c.sources.push_back({detail::parse_double(parts[0], key),
                                     detail::parse_double(parts[1], key),
                                     detail::parse_double(parts[2], key)});
            }
        } else if (key == "certify") {
            c.certify = detail::parse_bool(val, key);
        } else if (key == "dump_fields") {
            c.dump_fields = detail::parse_bool(val, key);
        } else if (key == "s_grid") {
            for (const std::string& tok : detail::split(val, ','))
                c.s_grid.push_back(detail::parse_double(tok, key));
        } else if (key == "max_rank") {
            c.max_rank = static_cast<int>(detail::parse_int(val, key));
        } else if (key == "families") {
            c.families.clear();
            saw_families = true;
            for (const std::string& tok : detail::split(val, ',')) {
                const auto f = tok.size() == 1 ? family_from_letter(tok[0]) : std::nullopt;
                if (!f) throw ConfigError("config: unknown family '" + tok + "'");
                c.families.push_back(*f);
            }
        } else if (key == "manifest") {
            c.manifest = val;
        } else {
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    (void)saw_families;
    validate(c);
    return c;
}

inline std::string serialize(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "mode = " << to_string(c.mode) << "\n";
    os << "family = " << family_letter(c.family) << "\n";
    os << "rank = " << c.rank << "\n";
    os << "grid_n = " << c.grid_n << "\n";
    if (!c.lambda.empty()) {
        os << "lambda = ";
        for (size_t i = 0; i < c.lambda.size(); ++i) os << (i ? ", " : "") << detail::fmt(c.lambda[i]);
        os << "\n";
    }
    if (c.s) os << "s = " << detail::fmt(*c.s) << "\n";
    os << "steps = " << c.steps << "\n";
    os << "deflate_starts = " << c.deflate_starts << "\n";
    os << "seed = " << c.seed << "\n";
    os << "out_dir = " << c.out_dir << "\n";
    os << "f_preset = " << c.f_preset << "\n";
    os << "f_coeff = " << detail::fmt(c.f_coeff) << "\n";
    os << "f_center = " << detail::fmt(c.f_center_x) << ", " << detail::fmt(c.f_center_y) << "\n";
    if (!c.sources.empty()) {
        os << "sources = ";
        for (size_t i = 0; i < c.sources.size(); ++i)
            os << (i ? " ; " : "") << detail::fmt(c.sources[i].x) << ", " << detail::fmt(c.sources[i].y)
               << ", " << detail::fmt(c.sources[i].alpha);
        os << "\n";
    }
    os << "certify = " << (c.certify ? "true" : "false") << "\n";
    os << "dump_fields = " << (c.dump_fields ? "true" : "false") << "\n";
    if (!c.s_grid.empty()) {
        os << "s_grid = ";
        for (size_t i = 0; i < c.s_grid.size(); ++i) os << (i ? ", " : "") << detail::fmt(c.s_grid[i]);
        os << "\n";
    }
    os << "max_rank = " << c.max_rank << "\n";
    os << "families = ";
    for (size_t i = 0; i < c.families.size(); ++i)
        os << (i ? ", " : "") << family_letter(c.families[i]);
    os << "\n";
    if (!c.manifest.empty()) os << "manifest = " << c.manifest << "\n";
    return os.str();
}

}  // namespace todalab
