#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dwarfeval/analytics/series.hpp"
#include "dwarfeval/error.hpp"
#include "dwarfeval/types.hpp"

namespace dwarfeval::analytics {

enum class Bound { cpu_bound, memory_bound, io_bound, mixed };

inline std::string_view to_string(Bound b) {
    switch (b) {
    case Bound::cpu_bound: return "cpu_bound";
    case Bound::memory_bound: return "memory_bound";
    case Bound::io_bound: return "io_bound";
    case Bound::mixed: return "mixed";
    }
    return "?";
}

/// Minimum lead, in percentage points, of the dominant resource over the
/// runner-up for a non-mixed label.
inline constexpr double margin_threshold_pct = 10.0;

struct BoundednessLabel {
    Bound label = Bound::mixed;
    double dominant_pct = 0.0;
    double margin_pct = 0.0;
};

inline BoundednessLabel classify_boundedness(double cpu_pct, double io_pct, double mem_pct) {
    struct Entry {
        Bound bound;
        double pct;
    };
    std::array<Entry, 3> e{{{Bound::cpu_bound, cpu_pct}, {Bound::memory_bound, mem_pct}, {Bound::io_bound, io_pct}}};
    // Stable selection: on equal shares the earlier entry stays first.
    std::stable_sort(e.begin(), e.end(), [](const Entry& a, const Entry& b) { return a.pct > b.pct; });
    BoundednessLabel out;
    out.dominant_pct = e[0].pct;
    out.margin_pct = e[0].pct - e[1].pct;
    out.label = out.margin_pct >= margin_threshold_pct ? e[0].bound : Bound::mixed;
    return out;
}

inline BoundednessLabel classify_boundedness(const SeriesPoint& p) {
    return classify_boundedness(p.cpu_pct, p.io_pct, p.mem_pct);
}

struct Transition {
    std::uint64_t from_size = 0;
    std::uint64_t to_size = 0;
    Bound from = Bound::mixed;
    Bound to = Bound::mixed;
};

struct SeriesClassification {
    std::vector<std::pair<std::uint64_t, BoundednessLabel>> points;
    std::vector<Transition> transitions;
    /// Set when every point carries the same label.
    std::optional<Bound> stable;

    std::string summary() const {
        if (stable) return std::string(to_string(*stable)) + ", no transitions";
        std::string s;
        for (const auto& t : transitions) {
            if (!s.empty()) s += "; ";
            s += std::string(to_string(t.from)) + " -> " + std::string(to_string(t.to)) + " at size " +
                 std::to_string(t.to_size);
        }
        return s;
    }
};

inline SeriesClassification classify_series(const SweepSeries& series) {
    SeriesClassification out;
    for (const auto& p : series.points) {
        const auto label = classify_boundedness(p);
        if (!out.points.empty() && out.points.back().second.label != label.label)
            out.transitions.push_back({out.points.back().first, p.size, out.points.back().second.label, label.label});
        out.points.emplace_back(p.size, label);
    }
    if (!out.points.empty() && out.transitions.empty()) out.stable = out.points.front().second.label;
    return out;
}

/// Resource bounds a dwarf class is expected to exhibit.
inline std::set<Bound> expected_boundedness(Dwarf d) {
    switch (d) {
    case Dwarf::dla: return {Bound::cpu_bound};
    case Dwarf::gt: return {Bound::memory_bound, Bound::io_bound};
    }
    throw Error(ErrorKind::domain, "unknown dwarf class");
}

inline std::set<Bound> expected_boundedness(std::string_view dwarf) {
    const auto d = parse_dwarf(dwarf);
    if (!d) throw Error(ErrorKind::domain, "unknown dwarf class '" + std::string(dwarf) + "'");
    return expected_boundedness(*d);
}

enum class Consistency { consistent, anomaly, inconclusive };

inline std::string_view to_string(Consistency c) {
    switch (c) {
    case Consistency::consistent: return "consistent";
    case Consistency::anomaly: return "anomaly";
    case Consistency::inconclusive: return "inconclusive";
    }
    return "?";
}

struct ConsistencyReport {
    Consistency verdict = Consistency::inconclusive;
    Dwarf dwarf = Dwarf::dla;
    /// Points whose (non-mixed) label is outside the expected set.
    std::vector<std::pair<std::uint64_t, Bound>> anomalies;
    SeriesClassification classification;

    std::string describe() const {
        const std::string cls(to_string(dwarf));
        switch (verdict) {
        case Consistency::consistent: return "consistent with " + cls;
        case Consistency::inconclusive: return "inconclusive for " + cls + " (no dominant resource)";
        case Consistency::anomaly: {
            std::string s = "class anomaly for " + cls + ":";
            for (const auto& [size, b] : anomalies) s += " " + std::string(to_string(b)) + "@" + std::to_string(size);
            return s;
        }
        }
        return "?";
    }
};

/// Compares observed labels with the dwarf's expected bounds. Mixed points
/// are neutral; a series with only mixed points is inconclusive.
inline ConsistencyReport consistency_check(const SweepSeries& series) {
    ConsistencyReport r;
    r.dwarf = series.labels.dwarf;
    r.classification = classify_series(series);
    const auto expected = expected_boundedness(r.dwarf);
    bool any_decided = false;
    for (const auto& [size, label] : r.classification.points) {
        if (label.label == Bound::mixed) continue;
        any_decided = true;
        if (!expected.contains(label.label)) r.anomalies.emplace_back(size, label.label);
    }
    if (!r.anomalies.empty()) r.verdict = Consistency::anomaly;
    else if (any_decided) r.verdict = Consistency::consistent;
    else r.verdict = Consistency::inconclusive;
    return r;
}

} // namespace dwarfeval::analytics
