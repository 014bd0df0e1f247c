#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dwarfeval/analytics/series.hpp"
#include "dwarfeval/error.hpp"

namespace dwarfeval::analytics {

enum class Side { first, second, tie };

struct TrackSegment {
    Side winner = Side::tie;
    std::string winner_label; // display name of the winning series, or "tie"
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    std::size_t points = 0;
    /// Mean over the segment's sizes of loser/winner mean wall time. For a
    /// statistical tie, mean of second/first.
    double mean_ratio = 1.0;
    bool statistical_tie = false;

    friend bool operator==(const TrackSegment&, const TrackSegment&) = default;
};

/// Sizes present in both series, ascending.
inline std::vector<std::uint64_t> common_sizes(const SweepSeries& a, const SweepSeries& b) {
    std::vector<std::uint64_t> out;
    for (const auto& p : a.points) {
        if (b.find(p.size)) out.push_back(p.size);
    }
    return out;
}

/// Pointwise comparison at one size: which side is faster, or tie when the
/// confidence intervals overlap (equal means always tie).
inline Side pointwise_winner(const SeriesPoint& a, const SeriesPoint& b) {
    const double gap = std::abs(a.mean_wall_ms - b.mean_wall_ms);
    if (gap <= a.ci_halfwidth_ms + b.ci_halfwidth_ms) return Side::tie;
    return a.mean_wall_ms < b.mean_wall_ms ? Side::first : Side::second;
}

/// Splits the common size axis into maximal runs with a constant winner.
/// A tie joins the segment before it; ties before the first decided size
/// join the first decided segment. All-tie input yields one segment
/// flagged as a statistical tie.
inline std::vector<TrackSegment> detect_tracks(const SweepSeries& a, const SweepSeries& b) {
    const auto sizes = common_sizes(a, b);
    if (sizes.size() < 2)
        throw Error(ErrorKind::insufficient_overlap, "track detection needs at least 2 common sizes, found " +
                                                         std::to_string(sizes.size()));

    std::vector<Side> side(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) side[i] = pointwise_winner(*a.find(sizes[i]), *b.find(sizes[i]));

    std::size_t first_decided = 0;
    while (first_decided < side.size() && side[first_decided] == Side::tie) ++first_decided;
    if (first_decided == side.size()) {
        TrackSegment s;
        s.winner = Side::tie;
        s.winner_label = "tie";
        s.lo = sizes.front();
        s.hi = sizes.back();
        s.points = sizes.size();
        s.statistical_tie = true;
        double ratio = 0.0;
        for (auto sz : sizes) ratio += b.find(sz)->mean_wall_ms / a.find(sz)->mean_wall_ms;
        s.mean_ratio = ratio / static_cast<double>(sizes.size());
        return {s};
    }
    for (std::size_t i = 0; i < first_decided; ++i) side[i] = side[first_decided];
    for (std::size_t i = first_decided + 1; i < side.size(); ++i) {
        if (side[i] == Side::tie) side[i] = side[i - 1];
    }

    std::vector<TrackSegment> out;
    double ratio_sum = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const auto& pa = *a.find(sizes[i]);
        const auto& pb = *b.find(sizes[i]);
        const double ratio =
            side[i] == Side::first ? pb.mean_wall_ms / pa.mean_wall_ms : pa.mean_wall_ms / pb.mean_wall_ms;
        if (out.empty() || out.back().winner != side[i]) {
            if (!out.empty()) out.back().mean_ratio = ratio_sum / static_cast<double>(out.back().points);
            TrackSegment s;
            s.winner = side[i];
            s.winner_label = side[i] == Side::first ? a.display_name() : b.display_name();
            s.lo = sizes[i];
            out.push_back(s);
            ratio_sum = 0.0;
        }
        out.back().hi = sizes[i];
        ++out.back().points;
        ratio_sum += ratio;
    }
    out.back().mean_ratio = ratio_sum / static_cast<double>(out.back().points);
    return out;
}

/// b.mean / a.mean at equal size; above 1 means `a` is faster.
inline double speedup(const SeriesPoint& a, const SeriesPoint& b) {
    if (a.size != b.size) throw Error(ErrorKind::invalid_input, "speedup needs points of equal size");
    if (!(a.mean_wall_ms > 0.0) || !(b.mean_wall_ms > 0.0))
        throw Error(ErrorKind::invalid_input, "speedup needs positive mean wall times");
    return b.mean_wall_ms / a.mean_wall_ms;
}

} // namespace dwarfeval::analytics
