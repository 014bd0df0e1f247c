#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dwarfeval/error.hpp"
#include "dwarfeval/types.hpp"

namespace dwarfeval::analytics {

/// Aggregated statistics for one problem size.
struct SeriesPoint {
    std::uint64_t size = 0;
    std::size_t n = 0;
    double mean_wall_ms = 0.0;
    double std_wall_ms = 0.0;
    double ci_halfwidth_ms = 0.0;
    double cpu_pct = 0.0;
    double io_pct = 0.0;
    double mem_pct = 0.0;
    double other_pct = 0.0;
    double std_cpu_pct = 0.0;
    double std_io_pct = 0.0;
    double std_mem_pct = 0.0;
    double std_other_pct = 0.0;
    bool wide_ci = false; // ci_halfwidth / mean > 1 %
    bool partial = false; // some sampler capability was missing
    std::string checksum; // kernel output checksum, when the harness computed one

    friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

/// A size with no usable measurement, kept so sweeps show their holes.
struct SeriesGap {
    std::uint64_t size = 0;
    std::string reason;

    friend bool operator==(const SeriesGap&, const SeriesGap&) = default;
};

struct SeriesLabels {
    Kernel kernel = Kernel::lud;
    Dwarf dwarf = Dwarf::dla;
    std::string toolchain;
    std::string config;

    friend bool operator==(const SeriesLabels&, const SeriesLabels&) = default;
};

/// Size-ordered statistics for one kernel/toolchain/config combination.
struct SweepSeries {
    SeriesLabels labels;
    std::vector<SeriesPoint> points;
    std::vector<SeriesGap> gaps;
    /// Free-form provenance: host, backend, affinity outcome, parameters.
    std::map<std::string, std::string> metadata;

    std::string display_name() const {
        return std::string(to_string(labels.kernel)) + "/" + labels.toolchain + "/" + labels.config;
    }

    const SeriesPoint* find(std::uint64_t size) const {
        for (const auto& p : points) {
            if (p.size == size) return &p;
        }
        return nullptr;
    }

    /// Throws unless sizes strictly ascend, numbers are sane and the dwarf
    /// matches the kernel.
    void validate() const {
        if (labels.dwarf != dwarf_of(labels.kernel))
            throw Error(ErrorKind::invalid_input, "dwarf label does not match kernel");
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto& p = points[i];
            if (p.size == 0) throw Error(ErrorKind::invalid_input, "point size must be positive");
            if (i > 0 && points[i - 1].size >= p.size)
                throw Error(ErrorKind::invalid_input, "point sizes must be strictly ascending");
            if (p.n == 0) throw Error(ErrorKind::invalid_input, "point sample count must be positive");
            if (!(p.mean_wall_ms > 0.0)) throw Error(ErrorKind::invalid_input, "mean wall time must be positive");
            if (!(p.std_wall_ms >= 0.0) || !(p.ci_halfwidth_ms >= 0.0))
                throw Error(ErrorKind::invalid_input, "std and ci half-width must be non-negative");
            for (double pct : {p.cpu_pct, p.io_pct, p.mem_pct, p.other_pct}) {
                if (!(pct >= 0.0 && pct <= 100.0))
                    throw Error(ErrorKind::invalid_input, "percentages must lie in [0, 100]");
            }
            const double sum = p.cpu_pct + p.io_pct + p.mem_pct + p.other_pct;
            if (std::abs(sum - 100.0) > 0.1)
                throw Error(ErrorKind::invalid_input, "percentages must sum to 100 within 0.1");
        }
        for (const auto& g : gaps) {
            if (find(g.size)) throw Error(ErrorKind::invalid_input, "size is both a point and a gap");
        }
    }

    friend bool operator==(const SweepSeries&, const SweepSeries&) = default;
};

} // namespace dwarfeval::analytics
