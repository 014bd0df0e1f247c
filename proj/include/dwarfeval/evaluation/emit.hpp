#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dwarfeval/error.hpp"
#include "dwarfeval/evaluation/compare.hpp"
#include "dwarfeval/evaluation/moe.hpp"
#include "dwarfeval/io/series_io.hpp"

namespace dwarfeval::evaluation {

enum class Format { tabular_text, structured_records, delimited_values };

inline std::string_view to_string(Format f) {
    switch (f) {
    case Format::tabular_text: return "tabular-text";
    case Format::structured_records: return "structured-records";
    case Format::delimited_values: return "delimited-values";
    }
    return "?";
}

inline std::optional<Format> parse_format(std::string_view s) {
    for (auto f : {Format::tabular_text, Format::structured_records, Format::delimited_values})
        if (s == to_string(f)) return f;
    return std::nullopt;
}

inline std::string_view file_extension(Format f) {
    switch (f) {
    case Format::tabular_text: return ".txt";
    case Format::structured_records: return ".jsonl";
    case Format::delimited_values: return ".csv";
    }
    return "";
}

inline constexpr const char* report_schema = "dwarfeval.report";

// Fixed number formatting keeps every format byte-reproducible.

inline std::string format_ms(double ms) { return std::to_string(std::llround(ms)); }

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

inline std::string format_pct(double v) { return format_fixed(v, 1); }
inline std::string format_ratio(double v) { return format_fixed(v, 2); }

inline std::string format_metric(Metric m, double v) {
    switch (m) {
    case Metric::mean_wall_ms: return format_ms(v);
    case Metric::cpu_pct:
    case Metric::mem_pct:
    case Metric::io_pct: return format_pct(v);
    case Metric::speedup_vs_baseline: return format_ratio(v);
    }
    return "";
}

inline std::string_view to_string(analytics::Side s) {
    switch (s) {
    case analytics::Side::first: return "first";
    case analytics::Side::second: return "second";
    case analytics::Side::tie: return "tie";
    }
    return "?";
}

inline std::optional<analytics::Side> parse_side(std::string_view s) {
    for (auto v : {analytics::Side::first, analytics::Side::second, analytics::Side::tie})
        if (s == to_string(v)) return v;
    return std::nullopt;
}

namespace detail {

/// Plain-text table with per-column alignment.
class TextTable {
public:
    explicit TextTable(std::vector<std::string> header, std::vector<bool> right_aligned)
        : right_(std::move(right_aligned)) {
        rows_.push_back(std::move(header));
    }

    void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

    void render(std::ostream& out, const std::string& indent = "") const {
        std::vector<std::size_t> width(rows_.front().size(), 0);
        for (const auto& r : rows_)
            for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
        auto line = [&](const std::vector<std::string>& r) {
            std::string s = indent;
            for (std::size_t i = 0; i < r.size(); ++i) {
                const std::string pad(width[i] - r[i].size(), ' ');
                s += right_[i] ? pad + r[i] : r[i] + pad;
                if (i + 1 < r.size()) s += "  ";
            }
            while (!s.empty() && s.back() == ' ') s.pop_back();
            out << s << '\n';
        };
        line(rows_.front());
        std::vector<std::string> rule;
        for (auto w : width) rule.emplace_back(w, '-');
        line(rule);
        for (std::size_t i = 1; i < rows_.size(); ++i) line(rows_[i]);
    }

private:
    std::vector<std::vector<std::string>> rows_;
    std::vector<bool> right_;
};

inline std::string or_dash(const std::string& s) { return s.empty() ? "-" : s; }

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

inline void csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << csv_field(fields[i]);
    }
    out << '\n';
}

inline std::string segment_label(const analytics::TrackSegment& s) {
    return s.statistical_tie ? "statistical tie" : s.winner_label;
}

} // namespace detail

namespace detail {

inline const char* const delimited_header[] = {"record", "kernel", "dwarf",  "config", "toolchain", "size_lo", "size_hi",
                                               "points", "value",  "ci",     "marker", "status",    "source",  "detail"};

inline std::string pair_label(const TrackPair& t) { return t.first + " vs " + t.second; }

/// Splits "first vs second"; the second name starts with the kernel name,
/// which disambiguates labels that themselves contain " vs ".
inline std::optional<std::pair<std::string, std::string>> split_pair(const std::string& s, Kernel k) {
    const std::string sep = " vs " + std::string(to_string(k)) + "/";
    const auto at = s.rfind(sep);
    if (at == std::string::npos) return std::nullopt;
    return std::pair{s.substr(0, at), s.substr(at + 4)};
}

inline std::string baseline_text(const std::optional<BaselineSelector>& b) {
    if (!b) return "-";
    std::string s;
    if (b->toolchain) s += "toolchain=" + *b->toolchain;
    if (b->config) s += std::string(s.empty() ? "" : " ") + "config=" + *b->config;
    return s;
}

} // namespace detail

inline void write_tabular(std::ostream& out, const ComparisonReport& rep) {
    out << "COMPARISON REPORT (" << report_schema << " schema_version " << io::schema_version << ")\n\n";
    out << "Mean wall time (ms) at the largest size common to the row; * marks the best in each row.\n\n";

    std::vector<std::string> header{"kernel", "dwarf", "config", "size"};
    std::vector<bool> right{false, false, false, true};
    for (const auto& c : rep.columns) {
        header.push_back(c);
        right.push_back(true);
    }
    for (const char* h : {"best", "speedup", "status"}) {
        header.emplace_back(h);
        right.push_back(std::string_view(h) == "speedup");
    }
    detail::TextTable grid(header, right);
    for (const auto& r : rep.rows) {
        std::vector<std::string> line{std::string(to_string(r.kernel)), std::string(to_string(r.dwarf)), r.config,
                                      r.size ? std::to_string(*r.size) : "-"};
        for (const auto& col : rep.columns) {
            const auto* c = r.cell(col);
            if (!c) line.emplace_back("-");
            else if (r.status == RowStatus::incomparable) line.emplace_back("n/a");
            else line.push_back(format_ms(c->mean_wall_ms) + (c->best ? "*" : " "));
        }
        const auto* b = r.best();
        line.push_back(b ? b->toolchain : "-");
        line.push_back(r.speedup ? format_ratio(*r.speedup) : "-");
        line.emplace_back(to_string(r.status));
        grid.add(std::move(line));
    }
    grid.render(out);

    if (!rep.tracks.empty()) {
        out << "\nPerformance tracks (mean ratio = slower / faster mean wall time)\n";
        for (const auto& t : rep.tracks) {
            out << "\n  " << t.first << " vs " << t.second << "\n";
            detail::TextTable seg({"sizes", "points", "winner", "mean ratio"}, {false, true, false, true});
            for (const auto& s : t.segments)
                seg.add({std::to_string(s.lo) + ".." + std::to_string(s.hi), std::to_string(s.points),
                         detail::segment_label(s), format_ratio(s.mean_ratio)});
            seg.render(out, "  ");
        }
    }

    if (!rep.moes.empty()) {
        out << "\nMeasures of effectiveness (" << rep.moes_passed() << " of " << rep.moes.size() << " passed)\n\n";
        detail::TextTable m({"id", "metric", "direction", "threshold", "measured", "verdict", "scope", "baseline"},
                            {false, false, false, true, true, false, false, false});
        for (const auto& r : rep.moes)
            m.add({r.moe.id, std::string(to_string(r.moe.metric)), std::string(to_string(r.moe.direction)),
                   format_metric(r.moe.metric, r.moe.threshold),
                   r.measured ? format_metric(r.moe.metric, *r.measured) : "-", std::string(to_string(r.verdict)),
                   r.moe.scope.describe(), detail::baseline_text(r.moe.baseline)});
        m.render(out);
    }

    out << "\nSources\n\n";
    detail::TextTable src({"series", "file", "backend", "host", "created"}, {false, false, false, false, false});
    for (const auto& s : rep.sources)
        src.add({s.series, detail::or_dash(s.file), detail::or_dash(s.backend), detail::or_dash(s.host),
                 detail::or_dash(s.created)});
    src.render(out);
}

inline void write_records(std::ostream& out, const ComparisonReport& rep) {
    using io::Json;
    Json head;
    head["record"] = "report";
    head["schema"] = report_schema;
    head["schema_version"] = io::schema_version;
    head["columns"] = rep.columns;
    out << head.dump() << '\n';
    for (const auto& s : rep.sources)
        out << Json{{"record", "source"}, {"series", s.series}, {"file", s.file}, {"backend", s.backend},
                    {"host", s.host}, {"created", s.created}}
                   .dump()
            << '\n';
    for (const auto& r : rep.rows) {
        Json j;
        j["record"] = "row";
        j["kernel"] = std::string(to_string(r.kernel));
        j["dwarf"] = std::string(to_string(r.dwarf));
        j["config"] = r.config;
        j["status"] = std::string(to_string(r.status));
        if (r.size) j["size"] = *r.size;
        if (r.speedup) j["speedup"] = *r.speedup;
        j["cells"] = Json::array();
        for (const auto& c : r.cells)
            j["cells"].push_back(Json{{"toolchain", c.toolchain}, {"mean_wall_ms", c.mean_wall_ms},
                                      {"ci_halfwidth_ms", c.ci_halfwidth_ms}, {"best", c.best}, {"source", c.source}});
        out << j.dump() << '\n';
    }
    for (const auto& t : rep.tracks) {
        Json j;
        j["record"] = "tracks";
        j["kernel"] = std::string(to_string(t.kernel));
        j["first"] = t.first;
        j["second"] = t.second;
        j["segments"] = Json::array();
        for (const auto& s : t.segments)
            j["segments"].push_back(Json{{"winner", std::string(to_string(s.winner))}, {"winner_label", s.winner_label},
                                         {"lo", s.lo}, {"hi", s.hi}, {"points", s.points}, {"mean_ratio", s.mean_ratio},
                                         {"statistical_tie", s.statistical_tie}});
        out << j.dump() << '\n';
    }
    for (const auto& r : rep.moes) {
        Json j;
        j["record"] = "moe";
        j["moe"] = moe_to_json(r.moe);
        j["verdict"] = std::string(to_string(r.verdict));
        if (r.measured) j["measured"] = *r.measured;
        j["observations"] = r.observations;
        j["detail"] = r.detail;
        out << j.dump() << '\n';
    }
}

inline void write_delimited(std::ostream& out, const ComparisonReport& rep) {
    using io::Json;
    out << "# " << report_schema << " schema_version=" << io::schema_version << '\n';
    detail::csv_row(out, {std::begin(detail::delimited_header), std::end(detail::delimited_header)});
    for (const auto& c : rep.columns) detail::csv_row(out, {"column", "", "", "", c, "", "", "", "", "", "", "", "", ""});
    for (const auto& s : rep.sources)
        detail::csv_row(out, {"source", "", "", "", "", "", "", "", "", "", "", "", s.series,
                              Json{{"file", s.file}, {"backend", s.backend}, {"host", s.host}, {"created", s.created}}.dump()});
    for (const auto& r : rep.rows) {
        const std::string kernel(to_string(r.kernel)), dwarf(to_string(r.dwarf)), status(to_string(r.status));
        const std::string size = r.size ? std::to_string(*r.size) : "";
        const bool has_value = r.status != RowStatus::incomparable;
        for (const auto& c : r.cells)
            detail::csv_row(out, {"cell", kernel, dwarf, r.config, c.toolchain, size, size, "",
                                  has_value ? format_ms(c.mean_wall_ms) : "", has_value ? format_ms(c.ci_halfwidth_ms) : "",
                                  c.best ? "*" : "", status, c.source, ""});
        if (r.speedup)
            detail::csv_row(out, {"speedup", kernel, dwarf, r.config, r.best()->toolchain, size, size, "",
                                  format_ratio(*r.speedup), "", "", status, "", "runner-up / best"});
    }
    for (const auto& t : rep.tracks) {
        for (const auto& s : t.segments)
            detail::csv_row(out, {"track", std::string(to_string(t.kernel)), std::string(to_string(dwarf_of(t.kernel))), "",
                                  "", std::to_string(s.lo), std::to_string(s.hi), std::to_string(s.points),
                                  format_ratio(s.mean_ratio), "", std::string(to_string(s.winner)), "", s.winner_label,
                                  detail::pair_label(t)});
    }
    for (const auto& r : rep.moes) {
        const auto& sc = r.moe.scope;
        detail::csv_row(out, {"moe", sc.kernel ? std::string(to_string(*sc.kernel)) : "",
                              sc.dwarf ? std::string(to_string(*sc.dwarf)) : "", sc.config.value_or(""),
                              sc.toolchain.value_or(""), "", "", std::to_string(r.observations),
                              r.measured ? format_metric(r.moe.metric, *r.measured) : "", "",
                              std::string(to_string(r.verdict)), "", r.moe.id,
                              Json{{"moe", moe_to_json(r.moe)}, {"detail", r.detail}}.dump()});
    }
}

inline std::string render_report(const ComparisonReport& rep, Format f) {
    std::ostringstream out;
    switch (f) {
    case Format::tabular_text: write_tabular(out, rep); break;
    case Format::structured_records: write_records(out, rep); break;
    case Format::delimited_values: write_delimited(out, rep); break;
    }
    return out.str();
}

/// Writes the report to `path`; I/O errors name the path.
inline void emit_report(const ComparisonReport& rep, Format f, const std::string& path) {
    rep.validate();
    const std::string text = render_report(rep, f);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorKind::io, "write failed for '" + path + "'");
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto a = s.find_first_not_of(' ');
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(' ');
    return std::string(s.substr(a, b - a + 1));
}

inline double parse_number(const std::string& s, std::size_t line, const std::string& field) {
    double v = 0.0;
    std::size_t used = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(v)) throw ParseError(line, field, "expected a number, got '" + s + "'");
    return v;
}

inline std::uint64_t parse_count(const std::string& s, std::size_t line, const std::string& field) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError(line, field, "expected a non-negative integer, got '" + s + "'");
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        throw ParseError(line, field, "integer out of range");
    }
}

inline Kernel need_kernel(const std::string& s, std::size_t line) {
    const auto k = parse_kernel(s);
    if (!k) throw ParseError(line, "kernel", "unknown kernel '" + s + "'");
    return *k;
}

inline void finish_report(ComparisonReport& rep) {
    try {
        rep.validate();
    } catch (const Error& e) {
        throw ParseError(1, "", e.what());
    }
}

inline ComparisonReport parse_records(std::istream& in) {
    ComparisonReport rep;
    bool have_header = false;
    auto need_string = [](const io::Json& obj, const char* key, std::size_t line) {
        if (!obj.contains(key) || !obj[key].is_string()) throw ParseError(line, key, "expected a string");
        return obj[key].get<std::string>();
    };
    auto need_number = [](const io::Json& obj, const char* key, std::size_t line) {
        if (!obj.contains(key) || !obj[key].is_number()) throw ParseError(line, key, "expected a number");
        return obj[key].get<double>();
    };
    auto need_count = [](const io::Json& obj, const char* key, std::size_t line) {
        if (!obj.contains(key) || !obj[key].is_number_unsigned()) throw ParseError(line, key, "expected a non-negative integer");
        return obj[key].get<std::uint64_t>();
    };
    auto need_bool = [](const io::Json& obj, const char* key, std::size_t line) {
        if (!obj.contains(key) || !obj[key].is_boolean()) throw ParseError(line, key, "expected true or false");
        return obj[key].get<bool>();
    };

    io::detail::for_each_record(in, [&](const io::detail::Fields& f, const std::string& record) {
        const std::size_t line = f.line();
        if (record == "report") {
            if (have_header) throw ParseError(line, "record", "second report header");
            io::detail::check_schema(f, report_schema);
            const auto& cols = f.at("columns");
            if (!cols.is_array()) throw ParseError(line, "columns", "expected an array");
            for (const auto& c : cols) {
                if (!c.is_string()) throw ParseError(line, "columns", "expected strings");
                rep.columns.push_back(c.get<std::string>());
            }
            have_header = true;
            return;
        }
        if (!have_header) throw ParseError(line, "record", "'" + record + "' before the report header");
        if (record == "source") {
            rep.sources.push_back({f.str("series"), f.str("file"), f.str("backend"), f.str("host"), f.str("created")});
        } else if (record == "row") {
            Row r;
            r.kernel = need_kernel(f.str("kernel"), line);
            const auto dwarf = parse_dwarf(f.str("dwarf"));
            if (!dwarf || *dwarf != dwarf_of(r.kernel)) throw ParseError(line, "dwarf", "unknown or mismatched dwarf");
            r.dwarf = *dwarf;
            r.config = f.str("config");
            const auto status = parse_row_status(f.str("status"));
            if (!status) throw ParseError(line, "status", "unknown row status");
            r.status = *status;
            if (f.has("size")) r.size = f.count("size");
            if (f.has("speedup")) r.speedup = f.num("speedup");
            const auto& cells = f.at("cells");
            if (!cells.is_array()) throw ParseError(line, "cells", "expected an array");
            for (const auto& c : cells) {
                if (!c.is_object()) throw ParseError(line, "cells", "expected objects");
                r.cells.push_back({need_string(c, "toolchain", line), need_number(c, "mean_wall_ms", line),
                                   need_number(c, "ci_halfwidth_ms", line), need_bool(c, "best", line),
                                   need_string(c, "source", line)});
            }
            rep.rows.push_back(std::move(r));
        } else if (record == "tracks") {
            TrackPair t;
            t.kernel = need_kernel(f.str("kernel"), line);
            t.first = f.str("first");
            t.second = f.str("second");
            const auto& segs = f.at("segments");
            if (!segs.is_array()) throw ParseError(line, "segments", "expected an array");
            for (const auto& s : segs) {
                if (!s.is_object()) throw ParseError(line, "segments", "expected objects");
                analytics::TrackSegment seg;
                const auto side = parse_side(need_string(s, "winner", line));
                if (!side) throw ParseError(line, "winner", "expected first, second or tie");
                seg.winner = *side;
                seg.winner_label = need_string(s, "winner_label", line);
                seg.lo = need_count(s, "lo", line);
                seg.hi = need_count(s, "hi", line);
                seg.points = need_count(s, "points", line);
                seg.mean_ratio = need_number(s, "mean_ratio", line);
                seg.statistical_tie = need_bool(s, "statistical_tie", line);
                t.segments.push_back(std::move(seg));
            }
            rep.tracks.push_back(std::move(t));
        } else if (record == "moe") {
            MoeResult r;
            try {
                r.moe = moe_from_json(f.at("moe"));
            } catch (const ParseError&) {
                throw;
            } catch (const Error& e) {
                throw ParseError(line, "moe", e.what());
            }
            const auto verdict = parse_verdict(f.str("verdict"));
            if (!verdict) throw ParseError(line, "verdict", "unknown verdict");
            r.verdict = *verdict;
            if (f.has("measured")) r.measured = f.num("measured");
            r.observations = f.count("observations");
            r.detail = f.str("detail");
            rep.moes.push_back(std::move(r));
        } else {
            throw ParseError(line, "record", "unknown record type '" + record + "'");
        }
    });
    if (!have_header) throw ParseError(1, "record", "no report header");
    finish_report(rep);
    return rep;
}

/// RFC 4180 style records; quoted fields may span lines. Each record comes
/// with the line it starts on.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> csv_records(const std::string& text) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> out;
    std::vector<std::string> fields;
    std::string field;
    std::size_t line = 1, start = 1;
    bool quoted = false, in_record = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (!in_record) {
            start = line;
            in_record = true;
        }
        if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            field.clear();
            out.emplace_back(start, std::move(fields));
            fields.clear();
            in_record = false;
            ++line;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (quoted) throw ParseError(start, "", "unterminated quoted field");
    if (in_record) {
        fields.push_back(std::move(field));
        out.emplace_back(start, std::move(fields));
    }
    return out;
}

inline ComparisonReport parse_delimited(const std::string& text) {
    const auto records = csv_records(text);
    std::size_t i = 0;
    if (records.empty() || records[0].second.size() != 1 ||
        records[0].second[0] != "# " + std::string(report_schema) + " schema_version=" + std::to_string(io::schema_version))
        throw ParseError(1, "schema", "expected '# " + std::string(report_schema) + " schema_version=" +
                                          std::to_string(io::schema_version) + "'");
    ++i;
    const std::vector<std::string> header(std::begin(delimited_header), std::end(delimited_header));
    if (i >= records.size() || records[i].second != header) throw ParseError(i + 1, "", "unexpected column header");
    ++i;

    ComparisonReport rep;
    for (; i < records.size(); ++i) {
        const auto& [line, f] = records[i];
        if (f.size() == 1 && f[0].empty()) continue;
        if (f.size() != header.size())
            throw ParseError(line, "", "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
        auto col = [&](const char* name) -> const std::string& {
            return f[std::find(header.begin(), header.end(), name) - header.begin()];
        };
        const std::string& record = col("record");
        if (record == "column") {
            rep.columns.push_back(col("toolchain"));
        } else if (record == "source") {
            io::Json d;
            try {
                d = io::Json::parse(col("detail"));
            } catch (const std::exception&) {
                throw ParseError(line, "detail", "expected a JSON object");
            }
            SourceInfo s{col("source"), "", "", "", ""};
            for (auto [key, dst] : {std::pair{"file", &s.file}, {"backend", &s.backend}, {"host", &s.host}, {"created", &s.created}}) {
                if (!d.is_object() || !d.contains(key) || !d[key].is_string())
                    throw ParseError(line, std::string("detail.") + key, "expected a string");
                *dst = d[key].get<std::string>();
            }
            rep.sources.push_back(std::move(s));
        } else if (record == "cell") {
            const Kernel k = need_kernel(col("kernel"), line);
            const auto status = parse_row_status(col("status"));
            if (!status) throw ParseError(line, "status", "unknown row status");
            if (rep.rows.empty() || rep.rows.back().kernel != k || rep.rows.back().config != col("config")) {
                Row r;
                r.kernel = k;
                r.dwarf = dwarf_of(k);
                r.config = col("config");
                r.status = *status;
                if (!col("size_lo").empty()) r.size = parse_count(col("size_lo"), line, "size_lo");
                rep.rows.push_back(std::move(r));
            }
            if (col("dwarf") != to_string(dwarf_of(k))) throw ParseError(line, "dwarf", "unknown or mismatched dwarf");
            Cell c;
            c.toolchain = col("toolchain");
            if (!col("value").empty()) c.mean_wall_ms = parse_number(col("value"), line, "value");
            if (!col("ci").empty()) c.ci_halfwidth_ms = parse_number(col("ci"), line, "ci");
            c.best = col("marker") == "*";
            c.source = col("source");
            rep.rows.back().cells.push_back(std::move(c));
        } else if (record == "speedup") {
            if (rep.rows.empty()) throw ParseError(line, "record", "speedup before any cell");
            rep.rows.back().speedup = parse_number(col("value"), line, "value");
        } else if (record == "track") {
            const Kernel k = need_kernel(col("kernel"), line);
            const auto names = split_pair(col("detail"), k);
            if (!names) throw ParseError(line, "detail", "expected '<first> vs <second>'");
            if (rep.tracks.empty() || rep.tracks.back().kernel != k || rep.tracks.back().first != names->first ||
                rep.tracks.back().second != names->second)
                rep.tracks.push_back({k, names->first, names->second, {}});
            analytics::TrackSegment s;
            const auto side = parse_side(col("marker"));
            if (!side) throw ParseError(line, "marker", "expected first, second or tie");
            s.winner = *side;
            s.statistical_tie = *side == analytics::Side::tie;
            s.winner_label = col("source");
            s.lo = parse_count(col("size_lo"), line, "size_lo");
            s.hi = parse_count(col("size_hi"), line, "size_hi");
            s.points = parse_count(col("points"), line, "points");
            s.mean_ratio = parse_number(col("value"), line, "value");
            rep.tracks.back().segments.push_back(std::move(s));
        } else if (record == "moe") {
            io::Json d;
            try {
                d = io::Json::parse(col("detail"));
            } catch (const std::exception&) {
                throw ParseError(line, "detail", "expected a JSON object");
            }
            if (!d.is_object() || !d.contains("moe") || !d.contains("detail") || !d["detail"].is_string())
                throw ParseError(line, "detail", "expected {\"moe\": ..., \"detail\": ...}");
            MoeResult r;
            try {
                r.moe = moe_from_json(d["moe"]);
            } catch (const Error& e) {
                throw ParseError(line, "detail.moe", e.what());
            }
            const auto verdict = parse_verdict(col("marker"));
            if (!verdict) throw ParseError(line, "marker", "unknown verdict");
            r.verdict = *verdict;
            if (!col("value").empty()) r.measured = parse_number(col("value"), line, "value");
            r.observations = parse_count(col("points"), line, "points");
            r.detail = d["detail"].get<std::string>();
            rep.moes.push_back(std::move(r));
        } else {
            throw ParseError(line, "record", "unknown record type '" + record + "'");
        }
    }
    finish_report(rep);
    return rep;
}

/// A rendered TextTable: header, dashed rule, rows up to a blank line.
/// Column extents come from the rule, so cells may contain spaces.
struct TextBlock {
    std::vector<std::string> header;
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

inline TextBlock read_text_table(const std::vector<std::string>& lines, std::size_t& i) {
    if (i + 1 >= lines.size()) throw ParseError(i + 1, "", "table expected");
    const std::string& rule = lines[i + 1];
    std::vector<std::pair<std::size_t, std::size_t>> extent;
    for (std::size_t p = 0; p < rule.size();) {
        if (rule[p] != '-') {
            ++p;
            continue;
        }
        const std::size_t start = p;
        while (p < rule.size() && rule[p] == '-') ++p;
        extent.emplace_back(start, p - start);
    }
    if (extent.empty()) throw ParseError(i + 2, "", "table rule expected");
    auto cut = [&](const std::string& s) {
        std::vector<std::string> out;
        for (auto [start, len] : extent) out.push_back(start < s.size() ? trim(s.substr(start, len)) : std::string());
        return out;
    };
    TextBlock t;
    t.header = cut(lines[i]);
    i += 2;
    for (; i < lines.size() && !lines[i].empty(); ++i) t.rows.emplace_back(i + 1, cut(lines[i]));
    return t;
}

inline std::string undash(const std::string& s) { return s == "-" ? std::string() : s; }

/// Reads "key=value key=value" where values run up to the next known key.
inline std::map<std::string, std::string> key_values(const std::string& s, std::initializer_list<const char*> keys,
                                                     std::size_t line, const std::string& field) {
    std::vector<std::pair<std::size_t, std::string>> found;
    for (const char* k : keys) {
        const std::string token = std::string(k) + "=";
        std::size_t at = s.rfind(" " + token);
        if (at != std::string::npos) ++at;
        else if (s.rfind(token, 0) == 0) at = 0;
        else continue;
        found.emplace_back(at, k);
    }
    std::sort(found.begin(), found.end());
    std::map<std::string, std::string> out;
    for (std::size_t j = 0; j < found.size(); ++j) {
        const auto begin = found[j].first + found[j].second.size() + 1;
        const auto end = j + 1 < found.size() ? found[j + 1].first - 1 : s.size();
        out[found[j].second] = s.substr(begin, end - begin);
    }
    if (!found.empty() && found.front().first != 0) throw ParseError(line, field, "unexpected text '" + s + "'");
    return out;
}

inline ComparisonReport parse_tabular(const std::string& text) {
    std::vector<std::string> lines;
    {
        std::istringstream in(text);
        for (std::string l; std::getline(in, l);) lines.push_back(l);
    }
    const std::string title =
        "COMPARISON REPORT (" + std::string(report_schema) + " schema_version " + std::to_string(io::schema_version) + ")";
    if (lines.empty() || lines[0] != title) throw ParseError(1, "schema", "expected '" + title + "'");
    std::size_t i = 1;
    while (i < lines.size() && (lines[i].empty() || lines[i].rfind("Mean wall time", 0) == 0)) ++i;

    ComparisonReport rep;
    const auto grid = read_text_table(lines, i);
    if (grid.header.size() < 7) throw ParseError(i, "", "comparison grid has too few columns");
    const std::size_t ncols = grid.header.size() - 7;
    rep.columns.assign(grid.header.begin() + 4, grid.header.begin() + 4 + static_cast<std::ptrdiff_t>(ncols));
    for (const auto& [line, f] : grid.rows) {
        Row r;
        r.kernel = need_kernel(f[0], line);
        r.dwarf = dwarf_of(r.kernel);
        if (f[1] != to_string(r.dwarf)) throw ParseError(line, "dwarf", "unknown or mismatched dwarf");
        r.config = f[2];
        if (f[3] != "-") r.size = parse_count(f[3], line, "size");
        const auto status = parse_row_status(f[6 + ncols]);
        if (!status) throw ParseError(line, "status", "unknown row status");
        r.status = *status;
        for (std::size_t c = 0; c < ncols; ++c) {
            std::string v = f[4 + c];
            if (v == "-") continue;
            Cell cell;
            cell.toolchain = rep.columns[c];
            cell.source = std::string(to_string(r.kernel)) + "/" + cell.toolchain + "/" + r.config;
            if (v != "n/a") {
                if (!v.empty() && v.back() == '*') {
                    cell.best = true;
                    v.pop_back();
                }
                cell.mean_wall_ms = parse_number(v, line, rep.columns[c]);
            }
            r.cells.push_back(std::move(cell));
        }
        if (f[5 + ncols] != "-") r.speedup = parse_number(f[5 + ncols], line, "speedup");
        rep.rows.push_back(std::move(r));
    }

    auto skip_blank = [&] {
        while (i < lines.size() && lines[i].empty()) ++i;
    };
    skip_blank();
    if (i < lines.size() && lines[i].rfind("Performance tracks", 0) == 0) {
        ++i;
        for (skip_blank(); i < lines.size() && lines[i].rfind("  ", 0) == 0 && lines[i].find(" vs ") != std::string::npos;
             skip_blank()) {
            const std::size_t line = i + 1;
            const std::string pair = lines[i].substr(2);
            const auto slash = pair.find('/');
            if (slash == std::string::npos) throw ParseError(line, "tracks", "expected '<first> vs <second>'");
            const Kernel k = need_kernel(pair.substr(0, slash), line);
            const auto names = split_pair(pair, k);
            if (!names) throw ParseError(line, "tracks", "expected '<first> vs <second>'");
            TrackPair t{k, names->first, names->second, {}};
            ++i;
            const auto seg = read_text_table(lines, i);
            for (const auto& [sline, f] : seg.rows) {
                analytics::TrackSegment s;
                const auto dots = f[0].find("..");
                if (dots == std::string::npos) throw ParseError(sline, "sizes", "expected lo..hi");
                s.lo = parse_count(f[0].substr(0, dots), sline, "sizes");
                s.hi = parse_count(f[0].substr(dots + 2), sline, "sizes");
                s.points = parse_count(f[1], sline, "points");
                s.statistical_tie = f[2] == "statistical tie";
                s.winner = s.statistical_tie ? analytics::Side::tie
                           : f[2] == t.first ? analytics::Side::first
                                             : analytics::Side::second;
                s.winner_label = s.statistical_tie ? "tie" : f[2];
                s.mean_ratio = parse_number(f[3], sline, "mean ratio");
                t.segments.push_back(std::move(s));
            }
            rep.tracks.push_back(std::move(t));
        }
    }

    skip_blank();
    if (i < lines.size() && lines[i].rfind("Measures of effectiveness", 0) == 0) {
        ++i;
        skip_blank();
        const auto m = read_text_table(lines, i);
        for (const auto& [line, f] : m.rows) {
            MoeResult r;
            r.moe.id = f[0];
            const auto metric = parse_metric(f[1]);
            if (!metric) throw ParseError(line, "metric", "unknown metric");
            r.moe.metric = *metric;
            const auto dir = parse_direction(f[2]);
            if (!dir) throw ParseError(line, "direction", "unknown direction");
            r.moe.direction = *dir;
            r.moe.threshold = parse_number(f[3], line, "threshold");
            if (f[4] != "-") r.measured = parse_number(f[4], line, "measured");
            const auto verdict = parse_verdict(f[5]);
            if (!verdict) throw ParseError(line, "verdict", "unknown verdict");
            r.verdict = *verdict;
            const auto scope = key_values(f[6], {"kernel", "dwarf", "toolchain", "config", "sizes"}, line, "scope");
            if (scope.count("kernel")) r.moe.scope.kernel = need_kernel(scope.at("kernel"), line);
            if (scope.count("dwarf")) {
                r.moe.scope.dwarf = parse_dwarf(scope.at("dwarf"));
                if (!r.moe.scope.dwarf) throw ParseError(line, "scope", "unknown dwarf");
            }
            if (scope.count("toolchain")) r.moe.scope.toolchain = scope.at("toolchain");
            if (scope.count("config")) r.moe.scope.config = scope.at("config");
            const std::string sizes = scope.count("sizes") ? scope.at("sizes") : "largest";
            if (sizes == "all") r.moe.scope.sizes = {SizeSelector::Mode::all, 0};
            else if (sizes != "largest") r.moe.scope.sizes = {SizeSelector::Mode::exact, parse_count(sizes, line, "scope")};
            if (f[7] != "-") {
                const auto b = key_values(f[7], {"toolchain", "config"}, line, "baseline");
                BaselineSelector sel;
                if (b.count("toolchain")) sel.toolchain = b.at("toolchain");
                if (b.count("config")) sel.config = b.at("config");
                r.moe.baseline = sel;
            }
            rep.moes.push_back(std::move(r));
        }
    }

    skip_blank();
    if (i >= lines.size() || lines[i] != "Sources") throw ParseError(i + 1, "", "Sources section expected");
    ++i;
    skip_blank();
    const auto src = read_text_table(lines, i);
    for (const auto& [line, f] : src.rows) rep.sources.push_back({f[0], undash(f[1]), undash(f[2]), undash(f[3]), undash(f[4])});
    skip_blank();
    if (i < lines.size()) throw ParseError(i + 1, "", "unexpected trailing text");
    finish_report(rep);
    return rep;
}

} // namespace detail

/// Reads a report in any of the three formats, recognized by its first
/// line. Structured records restore every value; tabular text and
/// delimited values restore what they print, at their display precision.
inline ComparisonReport parse_report(std::istream& in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (text.rfind("COMPARISON REPORT", 0) == 0) return detail::parse_tabular(text);
    if (text.rfind("# " + std::string(report_schema) + " ", 0) == 0) return detail::parse_delimited(text);
    std::istringstream records(text);
    return detail::parse_records(records);
}
inline ComparisonReport import_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
    try {
        return parse_report(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.field(), path + ": " + e.detail());
    }
}

enum class PlotKind { resource_stack, time_vs_size };

inline std::string_view to_string(PlotKind k) { return k == PlotKind::resource_stack ? "resource_stack" : "time_vs_size"; }

inline std::optional<PlotKind> parse_plot_kind(std::string_view s) {
    if (s == "resource_stack") return PlotKind::resource_stack;
    if (s == "time_vs_size") return PlotKind::time_vs_size;
    return std::nullopt;
}

/// Figure data as delimited values: size, then one column per series (or
/// per series component for resource stacks). Sizes missing from a series
/// leave its cells empty.
inline std::string plot_data(const std::vector<analytics::SweepSeries>& set, PlotKind kind) {
    if (set.empty()) throw Error(ErrorKind::usage, "plot data needs at least one series");
    for (const auto& s : set) {
        if (s.labels.kernel != set.front().labels.kernel)
            throw Error(ErrorKind::usage, "plot data mixes kernels " + std::string(to_string(set.front().labels.kernel)) +
                                              " and " + std::string(to_string(s.labels.kernel)));
        if (s.points.empty()) throw Error(ErrorKind::empty_series, "series " + s.display_name() + " has no points");
    }

    std::vector<std::uint64_t> sizes;
    for (const auto& s : set)
        for (const auto& p : s.points) sizes.push_back(p.size);
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

    std::ostringstream out;
    out << "# dwarfeval.plot schema_version=" << io::schema_version << '\n';
    out << "# kind=" << to_string(kind) << '\n';
    out << "# log_scale=" << (kind == PlotKind::time_vs_size ? "x,y" : "x") << '\n';
    out << "# value=" << (kind == PlotKind::time_vs_size ? "mean wall time (ms)" : "percent of wall time") << '\n';

    const bool single = set.size() == 1;
    std::vector<std::string> header{"size"};
    for (const auto& s : set) {
        if (kind == PlotKind::time_vs_size) {
            header.push_back(s.display_name());
        } else {
            for (const char* c : {"cpu", "io", "mem", "other"})
                header.push_back(single ? std::string(c) : s.display_name() + ":" + c);
        }
    }
    detail::csv_row(out, header);
    for (auto size : sizes) {
        std::vector<std::string> row{std::to_string(size)};
        for (const auto& s : set) {
            const auto* p = s.find(size);
            if (kind == PlotKind::time_vs_size) {
                row.push_back(p ? format_fixed(p->mean_wall_ms, 3) : "");
            } else {
                for (double v : {p ? p->cpu_pct : 0.0, p ? p->io_pct : 0.0, p ? p->mem_pct : 0.0, p ? p->other_pct : 0.0})
                    row.push_back(p ? format_pct(v) : "");
            }
        }
        detail::csv_row(out, row);
    }
    return out.str();
}

} // namespace dwarfeval::evaluation
