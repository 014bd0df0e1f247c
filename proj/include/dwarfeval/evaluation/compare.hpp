#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dwarfeval/analytics/series.hpp"
#include "dwarfeval/analytics/tracks.hpp"
#include "dwarfeval/error.hpp"
#include "dwarfeval/evaluation/moe.hpp"

namespace dwarfeval::evaluation {

enum class RowStatus { compared, uncontested, incomparable };

inline std::string_view to_string(RowStatus s) {
    switch (s) {
    case RowStatus::compared: return "compared";
    case RowStatus::uncontested: return "uncontested";
    case RowStatus::incomparable: return "incomparable";
    }
    return "?";
}

inline std::optional<RowStatus> parse_row_status(std::string_view s) {
    for (auto v : {RowStatus::compared, RowStatus::uncontested, RowStatus::incomparable})
        if (s == to_string(v)) return v;
    return std::nullopt;
}

/// Where a compared series came from.
struct SourceInfo {
    std::string series;      // display name
    std::string file;        // path it was read from, empty for in-memory series
    std::string backend;     // sampler backend, when recorded
    std::string host;        // host descriptor, when recorded
    std::string created;     // creation date, when recorded

    friend bool operator==(const SourceInfo&, const SourceInfo&) = default;
};

struct Cell {
    std::string toolchain;
    double mean_wall_ms = 0.0;
    double ci_halfwidth_ms = 0.0;
    bool best = false;
    std::string source; // display name of the series the value came from

    friend bool operator==(const Cell&, const Cell&) = default;
};

/// One (kernel, config) pair; cells in column order for the toolchains
/// present in the row.
struct Row {
    Kernel kernel = Kernel::lud;
    Dwarf dwarf = Dwarf::dla;
    std::string config;
    RowStatus status = RowStatus::incomparable;
    std::optional<std::uint64_t> size; // largest size measured by every series of the row
    std::vector<Cell> cells;
    /// Runner-up mean over best mean; set when the row has two or more cells.
    std::optional<double> speedup;

    const Cell* best() const {
        for (const auto& c : cells)
            if (c.best) return &c;
        return nullptr;
    }

    const Cell* cell(std::string_view toolchain) const {
        for (const auto& c : cells)
            if (c.toolchain == toolchain) return &c;
        return nullptr;
    }

    friend bool operator==(const Row&, const Row&) = default;
};

/// Performance tracks between two series of the same kernel.
struct TrackPair {
    Kernel kernel = Kernel::lud;
    std::string first;
    std::string second;
    std::vector<analytics::TrackSegment> segments;

    friend bool operator==(const TrackPair&, const TrackPair&) = default;
};

struct ComparisonReport {
    std::vector<std::string> columns; // toolchains, first-appearance order
    std::vector<Row> rows;
    std::vector<TrackPair> tracks;
    std::vector<MoeResult> moes;
    std::vector<SourceInfo> sources;

    std::size_t moes_passed() const {
        return static_cast<std::size_t>(
            std::count_if(moes.begin(), moes.end(), [](const MoeResult& r) { return r.verdict == Verdict::pass; }));
    }

    /// Throws unless every compared row carries exactly one best marker on
    /// its minimal mean and every cell names a known source.
    void validate() const {
        for (const auto& r : rows) {
            const auto markers = std::count_if(r.cells.begin(), r.cells.end(), [](const Cell& c) { return c.best; });
            if (r.status == RowStatus::incomparable) {
                if (markers != 0 || r.size) throw Error(ErrorKind::invalid_input, "incomparable row carries a result");
                continue;
            }
            if (markers != 1) throw Error(ErrorKind::invalid_input, "row must carry exactly one best marker");
            if (!r.size) throw Error(ErrorKind::invalid_input, "compared row lacks its comparison size");
            const double best = r.best()->mean_wall_ms;
            for (const auto& c : r.cells) {
                if (c.mean_wall_ms < best) throw Error(ErrorKind::invalid_input, "best marker is not on the row minimum");
                if (std::find(columns.begin(), columns.end(), c.toolchain) == columns.end())
                    throw Error(ErrorKind::invalid_input, "cell toolchain '" + c.toolchain + "' is not a column");
                const bool known = std::any_of(sources.begin(), sources.end(),
                                               [&](const SourceInfo& s) { return s.series == c.source; });
                if (!known) throw Error(ErrorKind::invalid_input, "cell source '" + c.source + "' is not listed");
            }
        }
    }

    friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

namespace detail {

inline std::string meta(const analytics::SweepSeries& s, const char* key) {
    const auto it = s.metadata.find(key);
    return it == s.metadata.end() ? std::string() : it->second;
}

} // namespace detail

/// Builds the cross-configuration table. Rows are (kernel, config) pairs in
/// first-appearance order; within a row the best cell has the minimal mean
/// wall time at the largest size every series of the row measured (ties go
/// to the earlier column). `files` optionally names each series' source.
inline ComparisonReport compare(const std::vector<analytics::SweepSeries>& set, const std::vector<MOE>& moes = {},
                                const std::vector<std::string>& files = {}) {
    if (set.size() < 2) throw Error(ErrorKind::usage, "compare needs at least 2 series, got " + std::to_string(set.size()));
    if (!files.empty() && files.size() != set.size())
        throw Error(ErrorKind::invalid_input, "one source file name per series expected");
    for (std::size_t i = 0; i < set.size(); ++i) {
        set[i].validate();
        for (std::size_t j = 0; j < i; ++j) {
            if (set[i].labels.kernel == set[j].labels.kernel && set[i].labels.config == set[j].labels.config &&
                set[i].labels.toolchain == set[j].labels.toolchain)
                throw Error(ErrorKind::configuration, "duplicate series " + set[i].display_name());
        }
    }

    ComparisonReport rep;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& s = set[i];
        rep.sources.push_back({s.display_name(), files.empty() ? std::string() : files[i], detail::meta(s, "sampler_backend"),
                               detail::meta(s, "host_cpu"), detail::meta(s, "created")});
        if (std::find(rep.columns.begin(), rep.columns.end(), s.labels.toolchain) == rep.columns.end())
            rep.columns.push_back(s.labels.toolchain);
    }

    struct Group {
        Kernel kernel;
        std::string config;
        std::vector<const analytics::SweepSeries*> members;
    };
    std::vector<Group> groups;
    for (const auto& s : set) {
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const Group& g) { return g.kernel == s.labels.kernel && g.config == s.labels.config; });
        if (it == groups.end()) groups.push_back({s.labels.kernel, s.labels.config, {&s}});
        else it->members.push_back(&s);
    }

    for (const auto& g : groups) {
        Row row;
        row.kernel = g.kernel;
        row.dwarf = dwarf_of(g.kernel);
        row.config = g.config;
        // Members in column order.
        auto members = g.members;
        auto col = [&](const analytics::SweepSeries* s) {
            return std::find(rep.columns.begin(), rep.columns.end(), s->labels.toolchain) - rep.columns.begin();
        };
        std::stable_sort(members.begin(), members.end(), [&](auto* a, auto* b) { return col(a) < col(b); });

        std::optional<std::uint64_t> largest;
        for (auto it = members.front()->points.rbegin(); it != members.front()->points.rend(); ++it) {
            const bool everywhere = std::all_of(members.begin(), members.end(), [&](auto* s) { return s->find(it->size); });
            if (everywhere) {
                largest = it->size;
                break;
            }
        }
        if (!largest) {
            row.status = RowStatus::incomparable;
            for (auto* s : members) row.cells.push_back({s->labels.toolchain, 0.0, 0.0, false, s->display_name()});
            rep.rows.push_back(std::move(row));
            continue;
        }
        row.size = largest;
        row.status = members.size() == 1 ? RowStatus::uncontested : RowStatus::compared;
        for (auto* s : members) {
            const auto* p = s->find(*largest);
            row.cells.push_back({s->labels.toolchain, p->mean_wall_ms, p->ci_halfwidth_ms, false, s->display_name()});
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < row.cells.size(); ++i)
            if (row.cells[i].mean_wall_ms < row.cells[best].mean_wall_ms) best = i;
        row.cells[best].best = true;
        if (row.cells.size() >= 2) {
            double runner_up = 0.0;
            bool have = false;
            for (std::size_t i = 0; i < row.cells.size(); ++i) {
                if (i == best) continue;
                if (!have || row.cells[i].mean_wall_ms < runner_up) runner_up = row.cells[i].mean_wall_ms;
                have = true;
            }
            row.speedup = runner_up / row.cells[best].mean_wall_ms;
        }
        rep.rows.push_back(std::move(row));
    }

    for (std::size_t i = 0; i < set.size(); ++i) {
        for (std::size_t j = i + 1; j < set.size(); ++j) {
            if (set[i].labels.kernel != set[j].labels.kernel) continue;
            if (analytics::common_sizes(set[i], set[j]).size() < 2) continue;
            rep.tracks.push_back({set[i].labels.kernel, set[i].display_name(), set[j].display_name(), analytics::detect_tracks(set[i], set[j])});
        }
    }

    rep.moes = evaluate_moes(moes, set);
    return rep;
}

} // namespace dwarfeval::evaluation
