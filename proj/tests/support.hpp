#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dwarfeval/dwarfeval.hpp"

namespace dwarfeval::fixtures {

#ifndef DWARFEVAL_TEST_DATA
#define DWARFEVAL_TEST_DATA "tests/data"
#endif

inline std::string data_path(const std::string& name) { return std::string(DWARFEVAL_TEST_DATA) + "/" + name; }

inline analytics::SeriesPoint point(std::uint64_t size, double mean_ms, double ci_ms = 0.0, double cpu = 100.0,
                                    double io = 0.0, double mem = 0.0) {
    analytics::SeriesPoint p;
    p.size = size;
    p.n = 30;
    p.mean_wall_ms = mean_ms;
    p.ci_halfwidth_ms = ci_ms;
    p.cpu_pct = cpu;
    p.io_pct = io;
    p.mem_pct = mem;
    p.other_pct = 100.0 - cpu - io - mem;
    return p;
}

inline analytics::SweepSeries series(Kernel k, std::string toolchain, std::string config,
                                     std::vector<analytics::SeriesPoint> points) {
    analytics::SweepSeries s;
    s.labels = {k, dwarf_of(k), std::move(toolchain), std::move(config)};
    s.points = std::move(points);
    return s;
}

/// Series whose point i has mean `means[i]` at size 2^(i+1).
inline analytics::SweepSeries timed_series(std::string toolchain, std::string config, const std::vector<double>& means,
                                           double ci = 0.0, Kernel k = Kernel::lud) {
    std::vector<analytics::SeriesPoint> pts;
    for (std::size_t i = 0; i < means.size(); ++i) pts.push_back(point(std::uint64_t{2} << i, means[i], ci));
    return series(k, std::move(toolchain), std::move(config), std::move(pts));
}

/// Random percentage split summing to 100 (a random simplex point).
inline std::array<double, 4> random_split(Rng& rng) {
    std::array<double, 4> w{};
    double total = 0.0;
    for (auto& v : w) total += (v = rng.uniform01() + 1e-9);
    for (auto& v : w) v = 100.0 * v / total;
    w[3] = 100.0 - w[0] - w[1] - w[2];
    if (w[3] < 0.0) w[3] = 0.0;
    return w;
}

/// Random, valid series with `n` ascending sizes.
inline analytics::SweepSeries random_series(Rng& rng, Kernel k, std::string toolchain, std::string config, std::size_t n) {
    std::vector<analytics::SeriesPoint> pts;
    std::uint64_t size = 0;
    for (std::size_t i = 0; i < n; ++i) {
        size += 1 + rng.below(1000);
        const auto w = random_split(rng);
        auto p = point(size, 0.001 + rng.uniform(0.0, 1e6), rng.uniform(0.0, 100.0), w[0], w[1], w[2]);
        p.other_pct = w[3];
        p.n = 2 + rng.below(49);
        p.std_wall_ms = rng.uniform(0.0, 50.0);
        p.std_cpu_pct = rng.uniform(0.0, 5.0);
        p.wide_ci = rng.below(2) == 1;
        p.partial = rng.below(4) == 0;
        if (rng.below(2)) p.checksum = kernels::hex_checksum(rng.next());
        pts.push_back(p);
    }
    auto s = series(k, std::move(toolchain), std::move(config), std::move(pts));
    if (rng.below(2)) s.metadata["host_cpu"] = "cpu \"quoted\", with comma";
    if (rng.below(2)) s.metadata["sampler_backend"] = "residual";
    return s;
}

/// Loads the published-runtime fixture: 12 single-point series.
inline std::vector<analytics::SweepSeries> published_runtimes() {
    return io::read_series_file(data_path("published_runtimes.jsonl"));
}

// t(0.975, df) frozen from a 40-digit root solve of the incomplete-beta CDF.
inline constexpr std::pair<std::size_t, double> t_table[] = {
    {1, 12.706204736174705},
    {2, 4.3026527297494639},
    {3, 3.1824463052837096},
    {4, 2.7764451051977944},
    {5, 2.5705818356363155},
    {6, 2.44691185114497},
    {7, 2.3646242515927853},
    {8, 2.3060041352041667},
    {9, 2.2621571627982055},
    {10, 2.2281388519862747},
    {11, 2.2009851600916399},
    {12, 2.1788128296672289},
    {13, 2.1603686564627925},
    {14, 2.1447866879178038},
    {15, 2.1314495455597757},
    {16, 2.1199052992212547},
    {17, 2.1098155778333171},
    {18, 2.1009220402410385},
    {19, 2.0930240544083098},
    {20, 2.0859634472658648},
    {21, 2.0796138447276804},
    {22, 2.0738730679040262},
    {23, 2.0686576104190487},
    {24, 2.0638985616280258},
    {25, 2.0595385527532977},
    {26, 2.0555294386428732},
    {27, 2.0518305164802856},
    {28, 2.0484071417952452},
    {29, 2.0452296421327043},
    {30, 2.0422724563012383},
    {31, 2.0395134463964085},
    {32, 2.036933343460102},
    {33, 2.0345152974493387},
    {34, 2.032244509317719},
    {35, 2.0301079282503432},
    {36, 2.0280940009804509},
    {37, 2.0261924630291098},
    {38, 2.0243941639119696},
    {39, 2.0226909200367611},
    {40, 2.0210753903062734},
    {41, 2.019540970441376},
    {42, 2.0180817028184447},
    {43, 2.0166921992278244},
    {44, 2.0153675744437638},
    {45, 2.0141033888808467},
    {46, 2.0128955989194292},
    {47, 2.0117405137297659},
    {48, 2.0106347576242322},
    {49, 2.0095752371292397},
    {50, 2.0085591121007611},
    {51, 2.007583770315836},
    {52, 2.0066468050616883},
    {53, 2.005745995317869},
    {54, 2.004879288188057},
    {55, 2.0040447832891459},
    {56, 2.0032407188478722},
    {57, 2.0024654592910073},
    {58, 2.0017174841452361},
    {59, 2.0009953780882677},
    {60, 2.0002978220142605},
    {80, 1.9900634212544462},
    {100, 1.9839715185235523},
    {120, 1.9799304050824408},
    {200, 1.9718962236339094},
    {500, 1.9647198374673678},
    {1000, 1.9623390808264085}
};

// Welford's online update; a different route to mean and variance than
// the two-pass code under test.
inline std::pair<double, double> welford(const std::vector<double>& xs) {
    long double mean = 0, m2 = 0;
    std::size_t n = 0;
    for (double x : xs) {
        ++n;
        const long double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    return {static_cast<double>(mean), n > 1 ? static_cast<double>(std::sqrt(m2 / (n - 1))) : 0.0};
}

inline double t_lookup(std::size_t df) {
    for (auto [d, t] : t_table)
        if (d == df) return t;
    return NAN;
}

inline evaluation::MOE make_moe(std::string id, evaluation::Metric m, double threshold, evaluation::Direction d) {
    evaluation::MOE x;
    x.id = std::move(id);
    x.metric = m;
    x.threshold = threshold;
    x.direction = d;
    return x;
}

// Random report source: a series set with awkward labels, partial overlap
// and some MOEs, run through compare().
inline evaluation::ComparisonReport random_report(Rng& rng) {
    static const std::vector<std::string> toolchains{"OpenMP", "tool, \"q\"", "gcc 11", "a\"b", "x,y"};
    static const std::vector<std::string> configs{"ArchA", "cfg, 2", "big \"box\"", "c"};
    std::vector<analytics::SweepSeries> set;
    const std::size_t want = 2 + rng.below(6);
    for (std::size_t tries = 0; set.size() < want && tries < 50; ++tries) {
        const auto k = static_cast<Kernel>(rng.below(3));
        const auto& tc = toolchains[rng.below(toolchains.size())];
        const auto& cfg = configs[rng.below(configs.size())];
        const bool dup = std::any_of(set.begin(), set.end(), [&](const analytics::SweepSeries& s) {
            return s.labels.kernel == k && s.labels.toolchain == tc && s.labels.config == cfg;
        });
        if (dup) continue;
        std::vector<analytics::SeriesPoint> pts;
        std::uint64_t size = 1 + rng.below(4);
        const std::size_t n = 1 + rng.below(6);
        for (std::size_t i = 0; i < n; ++i) {
            const auto w = random_split(rng);
            auto p = point(size, 0.5 + rng.uniform(0.0, 1e5), rng.uniform(0.0, 50.0), w[0], w[1], w[2]);
            p.other_pct = w[3];
            pts.push_back(p);
            size += 1 + rng.below(3);
        }
        auto s = series(k, tc, cfg, std::move(pts));
        if (rng.below(2)) s.metadata["host_cpu"] = "cpu \"x\", 2 GHz";
        if (rng.below(2)) s.metadata["sampler_backend"] = "residual";
        if (rng.below(2)) s.metadata["created"] = "2024-01-0" + std::to_string(1 + rng.below(9));
        set.push_back(std::move(s));
    }
    if (set.size() < 2) return random_report(rng);

    std::vector<evaluation::MOE> moes;
    const std::size_t m = rng.below(4);
    for (std::size_t i = 0; i < m; ++i) {
        const auto metric = static_cast<evaluation::Metric>(rng.below(5));
        auto x = make_moe("m" + std::to_string(i), metric, rng.uniform(0.0, 100.0),
                     rng.below(2) ? evaluation::Direction::at_least : evaluation::Direction::at_most);
        if (rng.below(2)) x.scope.kernel = set[rng.below(set.size())].labels.kernel;
        if (rng.below(3) == 0) x.scope.config = configs[rng.below(configs.size())];
        if (rng.below(3) == 0) x.scope.sizes.mode = evaluation::SizeSelector::Mode::all;
        if (metric == evaluation::Metric::speedup_vs_baseline) x.baseline = evaluation::BaselineSelector{toolchains[rng.below(toolchains.size())], {}};
        moes.push_back(std::move(x));
    }
    std::vector<std::string> files;
    if (rng.below(2))
        for (std::size_t i = 0; i < set.size(); ++i) files.push_back("runs/s" + std::to_string(i) + ", v.jsonl");
    return evaluation::compare(set, moes, files);
}


} // namespace dwarfeval::fixtures
