#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dwarfeval/analytics/series.hpp"
#include "dwarfeval/error.hpp"

namespace dwarfeval::io {

using Json = nlohmann::ordered_json;

inline constexpr int schema_version = 1;
inline constexpr const char* series_schema = "dwarfeval.series";

// Results files are JSON Lines. A "series" record opens a series; the
// "point" and "gap" records after it belong to it. Blank lines and lines
// starting with '#' are ignored, so fixtures can carry comments.

namespace detail {

/// Typed field access that reports the line and field on failure.
class Fields {
public:
    Fields(const Json& obj, std::size_t line) : obj_(obj), line_(line) {}

    bool has(const char* name) const { return obj_.contains(name); }

    std::string str(const char* name) const {
        const auto& v = at(name);
        if (!v.is_string()) throw ParseError(line_, name, "expected a string");
        return v.get<std::string>();
    }

    double num(const char* name) const {
        const auto& v = at(name);
        if (!v.is_number()) throw ParseError(line_, name, "expected a number");
        return v.get<double>();
    }

    double num_or(const char* name, double fallback) const { return has(name) ? num(name) : fallback; }

    std::uint64_t count(const char* name) const {
        const auto& v = at(name);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw ParseError(line_, name, "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool flag_or(const char* name, bool fallback) const {
        if (!has(name)) return fallback;
        const auto& v = obj_.at(name);
        if (!v.is_boolean()) throw ParseError(line_, name, "expected true or false");
        return v.get<bool>();
    }

    const Json& at(const char* name) const {
        if (!obj_.contains(name)) throw ParseError(line_, name, "missing field");
        return obj_.at(name);
    }

    std::size_t line() const { return line_; }

private:
    const Json& obj_;
    std::size_t line_;
};

inline void check_schema(const Fields& f, const char* expected) {
    const std::string schema = f.str("schema");
    if (schema != expected) throw ParseError(f.line(), "schema", "expected '" + std::string(expected) + "', got '" + schema + "'");
    const auto& v = f.at("schema_version");
    if (!v.is_number_integer() || v.get<int>() != schema_version)
        throw ParseError(f.line(), "schema_version", "unsupported schema version " + v.dump());
}

inline std::map<std::string, std::string> string_map(const Fields& f, const char* name) {
    std::map<std::string, std::string> out;
    if (!f.has(name)) return out;
    const auto& obj = f.at(name);
    if (!obj.is_object()) throw ParseError(f.line(), name, "expected an object");
    for (const auto& [k, v] : obj.items()) {
        if (!v.is_string()) throw ParseError(f.line(), std::string(name) + "." + k, "expected a string");
        out[k] = v.get<std::string>();
    }
    return out;
}

/// Non-blank, non-comment lines as (line number, parsed object).
template <class Fn>
void for_each_record(std::istream& in, Fn&& fn) {
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        const auto start = text.find_first_not_of(" \t\r");
        if (start == std::string::npos || text[start] == '#') continue;
        Json obj;
        try {
            obj = Json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line, "", std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(line, "", "expected a JSON object");
        Fields f(obj, line);
        fn(f, f.str("record"));
    }
}

} // namespace detail

inline Json point_to_json(const analytics::SeriesPoint& p) {
    Json j;
    j["record"] = "point";
    j["size"] = p.size;
    j["n"] = p.n;
    j["mean_wall_ms"] = p.mean_wall_ms;
    j["std_wall_ms"] = p.std_wall_ms;
    j["ci_halfwidth_ms"] = p.ci_halfwidth_ms;
    j["cpu_pct"] = p.cpu_pct;
    j["io_pct"] = p.io_pct;
    j["mem_pct"] = p.mem_pct;
    j["other_pct"] = p.other_pct;
    j["std_cpu_pct"] = p.std_cpu_pct;
    j["std_io_pct"] = p.std_io_pct;
    j["std_mem_pct"] = p.std_mem_pct;
    j["std_other_pct"] = p.std_other_pct;
    j["wide_ci"] = p.wide_ci;
    j["partial"] = p.partial;
    if (!p.checksum.empty()) j["checksum"] = p.checksum;
    return j;
}

inline void write_series(std::ostream& out, const analytics::SweepSeries& s) {
    Json head;
    head["record"] = "series";
    head["schema"] = series_schema;
    head["schema_version"] = schema_version;
    head["kernel"] = std::string(to_string(s.labels.kernel));
    head["dwarf"] = std::string(to_string(s.labels.dwarf));
    head["toolchain"] = s.labels.toolchain;
    head["config"] = s.labels.config;
    head["metadata"] = Json::object();
    for (const auto& [k, v] : s.metadata) head["metadata"][k] = v;
    out << head.dump() << '\n';

    // Points and gaps interleaved by size.
    std::size_t gi = 0;
    auto gaps = s.gaps;
    std::sort(gaps.begin(), gaps.end(), [](const auto& a, const auto& b) { return a.size < b.size; });
    for (const auto& p : s.points) {
        for (; gi < gaps.size() && gaps[gi].size < p.size; ++gi)
            out << Json{{"record", "gap"}, {"size", gaps[gi].size}, {"reason", gaps[gi].reason}}.dump() << '\n';
        out << point_to_json(p).dump() << '\n';
    }
    for (; gi < gaps.size(); ++gi)
        out << Json{{"record", "gap"}, {"size", gaps[gi].size}, {"reason", gaps[gi].reason}}.dump() << '\n';
}

inline std::string render_series(const std::vector<analytics::SweepSeries>& set) {
    std::ostringstream out;
    for (const auto& s : set) write_series(out, s);
    return out.str();
}

inline analytics::SeriesPoint point_from_json(const detail::Fields& f) {
    analytics::SeriesPoint p;
    p.size = f.count("size");
    if (p.size == 0) throw ParseError(f.line(), "size", "must be positive");
    p.n = f.count("n");
    if (p.n == 0) throw ParseError(f.line(), "n", "must be positive");
    p.mean_wall_ms = f.num("mean_wall_ms");
    if (!(p.mean_wall_ms > 0.0)) throw ParseError(f.line(), "mean_wall_ms", "wall time must be positive");
    p.std_wall_ms = f.num_or("std_wall_ms", 0.0);
    if (!(p.std_wall_ms >= 0.0)) throw ParseError(f.line(), "std_wall_ms", "must be non-negative");
    p.ci_halfwidth_ms = f.num_or("ci_halfwidth_ms", 0.0);
    if (!(p.ci_halfwidth_ms >= 0.0)) throw ParseError(f.line(), "ci_halfwidth_ms", "must be non-negative");
    const char* pct_fields[] = {"cpu_pct", "io_pct", "mem_pct", "other_pct"};
    double* pct_values[] = {&p.cpu_pct, &p.io_pct, &p.mem_pct, &p.other_pct};
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) {
        *pct_values[i] = f.num(pct_fields[i]);
        if (!(*pct_values[i] >= 0.0 && *pct_values[i] <= 100.0))
            throw ParseError(f.line(), pct_fields[i], "percentage outside [0, 100]");
        sum += *pct_values[i];
    }
    if (std::abs(sum - 100.0) > 0.1) throw ParseError(f.line(), "other_pct", "percentages do not sum to 100");
    p.std_cpu_pct = f.num_or("std_cpu_pct", 0.0);
    p.std_io_pct = f.num_or("std_io_pct", 0.0);
    p.std_mem_pct = f.num_or("std_mem_pct", 0.0);
    p.std_other_pct = f.num_or("std_other_pct", 0.0);
    p.wide_ci = f.flag_or("wide_ci", false);
    p.partial = f.flag_or("partial", false);
    if (f.has("checksum")) p.checksum = f.str("checksum");
    return p;
}

/// Parses every series in a results stream.
inline std::vector<analytics::SweepSeries> parse_series(std::istream& in) {
    std::vector<analytics::SweepSeries> out;
    std::vector<std::size_t> header_lines;
    std::vector<std::uint64_t> last_size;
    detail::for_each_record(in, [&](const detail::Fields& f, const std::string& record) {
        if (record == "series") {
            detail::check_schema(f, series_schema);
            analytics::SweepSeries s;
            const auto kernel = parse_kernel(f.str("kernel"));
            if (!kernel) throw ParseError(f.line(), "kernel", "unknown kernel");
            const auto dwarf = parse_dwarf(f.str("dwarf"));
            if (!dwarf) throw ParseError(f.line(), "dwarf", "unknown dwarf class");
            if (*dwarf != dwarf_of(*kernel)) throw ParseError(f.line(), "dwarf", "does not match kernel");
            s.labels = {*kernel, *dwarf, f.str("toolchain"), f.str("config")};
            s.metadata = detail::string_map(f, "metadata");
            out.push_back(std::move(s));
            header_lines.push_back(f.line());
            last_size.push_back(0);
            return;
        }
        if (out.empty()) throw ParseError(f.line(), "record", "'" + record + "' before any series record");
        auto& s = out.back();
        std::uint64_t size = 0;
        if (record == "point") {
            auto p = point_from_json(f);
            size = p.size;
            s.points.push_back(std::move(p));
        } else if (record == "gap") {
            size = f.count("size");
            s.gaps.push_back({size, f.str("reason")});
        } else {
            throw ParseError(f.line(), "record", "unknown record type '" + record + "'");
        }
        // Points and gaps together must strictly ascend in size.
        if (size <= last_size.back())
            throw ParseError(f.line(), "size", "sizes must be strictly ascending within a series");
        last_size.back() = size;
    });
    for (std::size_t i = 0; i < out.size(); ++i) {
        try {
            out[i].validate();
        } catch (const Error& e) {
            throw ParseError(header_lines[i], "", e.what());
        }
    }
    return out;
}

inline std::vector<analytics::SweepSeries> read_series_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
    try {
        auto set = parse_series(in);
        if (set.empty()) throw ParseError(1, "", "file contains no series");
        return set;
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.field(), path + ": " + e.detail());
    }
}

/// Imports a file holding exactly one series.
inline analytics::SweepSeries import_series(const std::string& path) {
    auto set = read_series_file(path);
    if (set.size() != 1)
        throw ParseError(1, "", path + ": expected one series, found " + std::to_string(set.size()));
    return std::move(set.front());
}

inline void write_series_file(const std::string& path, const std::vector<analytics::SweepSeries>& set) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    out << render_series(set);
    if (!out) throw Error(ErrorKind::io, "write failed for '" + path + "'");
}

} // namespace dwarfeval::io
