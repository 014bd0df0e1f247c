#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "dwarfeval/analytics/series.hpp"
#include "dwarfeval/error.hpp"
#include "dwarfeval/profiler/eea.hpp"

namespace dwarfeval::analytics {

/// Two-sided 95 % Student-t critical value, t(0.975, df).
inline double t_critical_95(std::size_t df) {
    if (df == 0) throw Error(ErrorKind::domain, "t quantile needs at least one degree of freedom");
    boost::math::students_t dist(static_cast<double>(df));
    return boost::math::quantile(dist, 0.975);
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0; // sample (n-1) standard deviation; 0 for n = 1
};

inline MeanStd mean_std(std::span<const double> xs) {
    MeanStd r;
    if (xs.empty()) return r;
    // Rounding in the sum must not turn a constant sample into a nonzero spread.
    if (std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); })) {
        r.mean = xs.front();
        return r;
    }
    double sum = 0.0;
    for (double x : xs) sum += x;
    r.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return r;
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return r;
}

/// 95 % confidence half-width of the mean; 0 when n < 2.
inline double ci_halfwidth(double std, std::size_t n) {
    if (n < 2) return 0.0;
    return t_critical_95(n - 1) * std / std::sqrt(static_cast<double>(n));
}

/// Relative CI width above which a point is flagged.
inline constexpr double wide_ci_threshold = 0.01;

/// Collapses the repetitions of one sweep point into a SeriesPoint.
/// All records must share labels, workload and sampler backend.
inline SeriesPoint aggregate(std::span<const profiler::EEARecord> samples) {
    if (samples.empty()) throw Error(ErrorKind::aggregation, "no samples to aggregate");
    const auto& first = samples.front();
    for (const auto& s : samples) {
        if (s.labels.dwarf != first.labels.dwarf || s.labels.toolchain != first.labels.toolchain ||
            s.labels.config != first.labels.config)
            throw Error(ErrorKind::aggregation, "samples carry different labels");
        if (!(s.workload == first.workload)) throw Error(ErrorKind::aggregation, "samples carry different workloads");
        if (s.sampler_backend != first.sampler_backend)
            throw Error(ErrorKind::aggregation, "samples come from different sampler backends");
    }

    const std::size_t n = samples.size();
    std::vector<double> wall(n), cpu(n), io(n), mem(n), other(n);
    bool partial = false;
    for (std::size_t i = 0; i < n; ++i) {
        wall[i] = samples[i].wall_ms;
        cpu[i] = samples[i].cpu_pct;
        io[i] = samples[i].io_pct;
        mem[i] = samples[i].mem_pct;
        other[i] = samples[i].other_pct;
        partial = partial || samples[i].partial;
    }

    SeriesPoint p;
    p.size = first.workload.size;
    p.n = n;
    const auto w = mean_std(wall);
    p.mean_wall_ms = w.mean;
    p.std_wall_ms = w.std;
    p.ci_halfwidth_ms = ci_halfwidth(w.std, n);
    const auto c = mean_std(cpu), i = mean_std(io), m = mean_std(mem), o = mean_std(other);
    p.cpu_pct = c.mean;
    p.io_pct = i.mean;
    p.mem_pct = m.mean;
    p.other_pct = o.mean;
    p.std_cpu_pct = c.std;
    p.std_io_pct = i.std;
    p.std_mem_pct = m.std;
    p.std_other_pct = o.std;
    p.wide_ci = p.mean_wall_ms > 0.0 && p.ci_halfwidth_ms / p.mean_wall_ms > wide_ci_threshold;
    p.partial = partial;
    return p;
}

} // namespace dwarfeval::analytics
