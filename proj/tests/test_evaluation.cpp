#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace dwarfeval;
using namespace dwarfeval::evaluation;
using dwarfeval::fixtures::point;
using dwarfeval::fixtures::series;
using dwarfeval::fixtures::timed_series;

namespace {

MOE moe(std::string id, Metric m, double threshold, Direction d, MoeScope scope = {}) {
    MOE x;
    x.id = std::move(id);
    x.metric = m;
    x.threshold = threshold;
    x.direction = d;
    x.scope = std::move(scope);
    return x;
}

ComparisonReport reimport(const std::string& text) {
    std::istringstream in(text);
    return parse_report(in);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const Row& row_of(const ComparisonReport& r, Kernel k, const std::string& config) {
    for (const auto& row : r.rows)
        if (row.kernel == k && row.config == config) return row;
    throw std::runtime_error("row missing");
}

} // namespace

// MOE evaluation

TEST(Moe, LooseThresholdPasses) {
    const std::vector<analytics::SweepSeries> set{timed_series("t", "c", {10, 20, 30})};
    const auto r = evaluate_moe(moe("fast", Metric::mean_wall_ms, 1e9, Direction::at_most), set);
    EXPECT_EQ(r.verdict, Verdict::pass);
    EXPECT_EQ(r.measured, 30.0);
    EXPECT_EQ(r.observations, 1u);
}

TEST(Moe, CpuBoundDlaSeries) {
    MoeScope scope;
    scope.dwarf = Dwarf::dla;
    scope.sizes.mode = SizeSelector::Mode::all;
    const std::vector<analytics::SweepSeries> set{
        series(Kernel::lud, "t", "c", {point(2, 1, 0, 97), point(4, 2, 0, 92)}),
        series(Kernel::kmeans, "t", "c", {point(2, 1, 0, 95)}),
        series(Kernel::bptree, "t", "c", {point(2, 1, 0, 10)}),
    };
    const auto pass = evaluate_moe(moe("cpu", Metric::cpu_pct, 90, Direction::at_least, scope), set);
    EXPECT_EQ(pass.verdict, Verdict::pass);
    EXPECT_EQ(pass.measured, 92.0);
    EXPECT_EQ(pass.observations, 3u);
    const auto fail = evaluate_moe(moe("cpu", Metric::cpu_pct, 93, Direction::at_least, scope), set);
    EXPECT_EQ(fail.verdict, Verdict::fail);
}

TEST(Moe, ScopeWithoutPointsIsNotApplicable) {
    MoeScope scope;
    scope.kernel = Kernel::bptree;
    const std::vector<analytics::SweepSeries> set{timed_series("t", "c", {1})};
    const auto r = evaluate_moe(moe("gt", Metric::mean_wall_ms, 1, Direction::at_most, scope), set);
    EXPECT_EQ(r.verdict, Verdict::not_applicable);
    EXPECT_FALSE(r.measured);
    scope.kernel = Kernel::lud;
    scope.sizes = {SizeSelector::Mode::exact, 3};
    EXPECT_EQ(evaluate_moe(moe("gt", Metric::mean_wall_ms, 1, Direction::at_most, scope), set).verdict,
              Verdict::not_applicable);
}

TEST(Moe, SpeedupNeedsBaseline) {
    const std::vector<analytics::SweepSeries> set{timed_series("a", "c", {1}), timed_series("b", "c", {2})};
    try {
        (void)evaluate_moe(moe("s", Metric::speedup_vs_baseline, 1, Direction::at_least), set);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::configuration);
    }
    auto x = moe("s", Metric::speedup_vs_baseline, 1.9, Direction::at_least);
    x.baseline = BaselineSelector{"b", {}};
    const auto r = evaluate_moe(x, set);
    EXPECT_EQ(r.verdict, Verdict::pass);
    EXPECT_DOUBLE_EQ(*r.measured, 2.0);
}

TEST(Moe, SpeedupUsesLargestSharedSize) {
    const std::vector<analytics::SweepSeries> set{timed_series("a", "c", {1, 2, 1}), timed_series("b", "c", {4, 8})};
    auto x = moe("s", Metric::speedup_vs_baseline, 0, Direction::at_least);
    x.baseline = BaselineSelector{"b", {}};
    x.scope.toolchain = "a";
    const auto r = evaluate_moe(x, set);
    EXPECT_DOUBLE_EQ(*r.measured, 4.0); // size 4: 8 / 2
}

TEST(Moe, VerdictIsMonotoneInThreshold) {
    Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<analytics::SweepSeries> set{fixtures::random_series(rng, Kernel::lud, "a", "c", 1 + rng.below(5))};
        const auto metric = static_cast<Metric>(rng.below(4));
        const auto dir = rng.below(2) ? Direction::at_most : Direction::at_least;
        auto x = moe("m", metric, rng.uniform(0, 100), dir);
        x.scope.sizes.mode = SizeSelector::Mode::all;
        const auto base = evaluate_moe(x, set);
        ASSERT_NE(base.verdict, Verdict::not_applicable);
        for (int step = 0; step < 5; ++step) {
            auto looser = x;
            looser.threshold += (dir == Direction::at_most ? 1 : -1) * rng.uniform(0, 1e6);
            auto stricter = x;
            stricter.threshold -= (dir == Direction::at_most ? 1 : -1) * rng.uniform(0, 1e6);
            if (base.verdict == Verdict::pass) EXPECT_EQ(evaluate_moe(looser, set).verdict, Verdict::pass);
            else EXPECT_EQ(evaluate_moe(stricter, set).verdict, Verdict::fail);
        }
    }
}

TEST(Moe, JsonRoundTrip) {
    auto x = moe("id \"1\"", Metric::speedup_vs_baseline, 1.5, Direction::at_least);
    x.scope.kernel = Kernel::kmeans;
    x.scope.config = "ArchB";
    x.scope.sizes = {SizeSelector::Mode::exact, 1638400};
    x.baseline = BaselineSelector{"OpenMP", {}};
    EXPECT_EQ(moe_from_json(moe_to_json(x)), x);
    EXPECT_THROW(moe_from_json(nlohmann::json::parse(R"({"id":"a","metric":"nope","direction":"at_most","threshold":1})")),
                 Error);
    EXPECT_THROW(moe_from_json(nlohmann::json::parse(R"({"id":"a","metric":"cpu_pct","direction":"at_most"})")), Error);
}

// Comparison against the published runtimes

TEST(Compare, PublishedTableMarkers) {
    const auto rep = compare(fixtures::published_runtimes());
    ASSERT_EQ(rep.rows.size(), 6u);
    EXPECT_EQ(rep.columns, (std::vector<std::string>{"OpenMP", "OpenCL"}));
    const std::vector<std::tuple<Kernel, std::string, std::string>> expected{
        {Kernel::lud, "ArchA", "OpenCL"},    {Kernel::lud, "ArchB", "OpenCL"},    {Kernel::kmeans, "ArchA", "OpenMP"},
        {Kernel::kmeans, "ArchB", "OpenCL"}, {Kernel::bptree, "ArchA", "OpenMP"}, {Kernel::bptree, "ArchB", "OpenMP"},
    };
    for (const auto& [k, cfg, winner] : expected) {
        const auto& row = row_of(rep, k, cfg);
        EXPECT_EQ(row.status, RowStatus::compared);
        ASSERT_NE(row.best(), nullptr);
        EXPECT_EQ(row.best()->toolchain, winner) << to_string(k) << " " << cfg;
    }
    EXPECT_NO_THROW(rep.validate());
}

TEST(Compare, PublishedSpeedups) {
    const auto rep = compare(fixtures::published_runtimes());
    EXPECT_NEAR(*row_of(rep, Kernel::lud, "ArchA").speedup, 12.24, 12.24 * 0.005);
    EXPECT_NEAR(*row_of(rep, Kernel::kmeans, "ArchB").speedup, 1.81, 1.81 * 0.005);
    EXPECT_EQ(format_ratio(*row_of(rep, Kernel::lud, "ArchA").speedup), "12.24");
    EXPECT_EQ(format_ratio(*row_of(rep, Kernel::kmeans, "ArchB").speedup), "1.81");
}

TEST(Compare, UncontestedAndIncomparableRows) {
    const std::vector<analytics::SweepSeries> set{
        timed_series("a", "solo", {5}),
        series(Kernel::kmeans, "a", "x", {point(2, 1)}),
        series(Kernel::kmeans, "b", "x", {point(4, 1)}),
    };
    const auto rep = compare(set);
    const auto& solo = row_of(rep, Kernel::lud, "solo");
    EXPECT_EQ(solo.status, RowStatus::uncontested);
    EXPECT_FALSE(solo.speedup);
    ASSERT_NE(solo.best(), nullptr);
    const auto& none = row_of(rep, Kernel::kmeans, "x");
    EXPECT_EQ(none.status, RowStatus::incomparable);
    EXPECT_EQ(none.best(), nullptr);
    EXPECT_FALSE(none.size);
    EXPECT_NO_THROW(rep.validate());
}

TEST(Compare, TiesGoToTheEarlierColumn) {
    const auto rep = compare({timed_series("a", "c", {7}), timed_series("b", "c", {7})});
    EXPECT_EQ(rep.rows[0].best()->toolchain, "a");
    EXPECT_DOUBLE_EQ(*rep.rows[0].speedup, 1.0);
}

TEST(Compare, InputErrors) {
    try {
        (void)compare({timed_series("a", "c", {1})});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::usage);
    }
    try {
        (void)compare({timed_series("a", "c", {1}), timed_series("a", "c", {2})});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::configuration);
    }
}

TEST(Compare, TracksForOverlappingSeries) {
    const auto rep = compare({timed_series("a", "c", {1, 2, 30, 40}), timed_series("b", "c", {10, 20, 3, 4})});
    ASSERT_EQ(rep.tracks.size(), 1u);
    ASSERT_EQ(rep.tracks[0].segments.size(), 2u);
    EXPECT_EQ(rep.tracks[0].segments[0].winner_label, "LUD/a/c");
    EXPECT_EQ(rep.tracks[0].segments[1].winner_label, "LUD/b/c");
}

// Emission

TEST(Emit, DeterministicAndMoeSectionOnlyWhenPresent) {
    const auto set = fixtures::published_runtimes();
    const auto a = render_report(compare(set), Format::tabular_text);
    EXPECT_EQ(a, render_report(compare(set), Format::tabular_text));
    EXPECT_EQ(a.find("Measures of effectiveness"), std::string::npos);
    const auto b = render_report(compare(set, {moe("m", Metric::mean_wall_ms, 1e9, Direction::at_most)}), Format::tabular_text);
    EXPECT_NE(b.find("Measures of effectiveness (1 of 1 passed)"), std::string::npos);
}

TEST(Emit, PublishedReportMatchesGolden) {
    const auto text = render_report(compare(fixtures::published_runtimes()), Format::tabular_text);
    EXPECT_EQ(text, slurp(fixtures::data_path("published_runtimes_report.txt")));
}

TEST(Emit, RecordsRoundTripExactly) {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const auto rep = fixtures::random_report(rng);
        const auto text = render_report(rep, Format::structured_records);
        const auto back = reimport(text);
        ASSERT_EQ(back, rep) << text;
        ASSERT_EQ(render_report(back, Format::structured_records), text);
    }
}

TEST(Emit, TextAndDelimitedReportsAreReimportable) {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto rep = fixtures::random_report(rng);
        for (auto f : {Format::tabular_text, Format::delimited_values}) {
            const auto text = render_report(rep, f);
            ComparisonReport back;
            try {
                back = reimport(text);
            } catch (const std::exception& e) {
                FAIL() << to_string(f) << ": " << e.what() << "\n" << text;
            }
            ASSERT_EQ(render_report(back, f), text) << to_string(f);
            EXPECT_EQ(back.columns, rep.columns);
            EXPECT_EQ(back.rows.size(), rep.rows.size());
            EXPECT_EQ(back.moes.size(), rep.moes.size());
            for (std::size_t i = 0; i < rep.rows.size(); ++i) {
                EXPECT_EQ(back.rows[i].status, rep.rows[i].status);
                EXPECT_EQ(back.rows[i].size, rep.rows[i].size);
                const auto* b = rep.rows[i].best();
                if (b) {
                    EXPECT_EQ(back.rows[i].best()->toolchain, b->toolchain);
                }
            }
        }
    }
}

TEST(Emit, FileRoundTripAndExtensions) {
    const auto dir = std::filesystem::temp_directory_path() / ("dwarfeval_emit_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    const auto rep = compare(fixtures::published_runtimes());
    for (auto f : {Format::tabular_text, Format::structured_records, Format::delimited_values}) {
        const auto path = (dir / ("r." + std::string(file_extension(f)))).string();
        emit_report(rep, f, path);
        EXPECT_EQ(render_report(import_report(path), f), slurp(path));
        EXPECT_EQ(parse_format(to_string(f)), f);
    }
    EXPECT_THROW(emit_report(rep, Format::tabular_text, "/nonexistent/dir/r.txt"), Error);
    std::filesystem::remove_all(dir);
}

TEST(Emit, ReportParseErrors) {
    EXPECT_THROW(reimport(""), ParseError);
    EXPECT_THROW(reimport("{\"record\":\"report\",\"schema\":\"other\",\"schema_version\":1}\n"), ParseError);
    EXPECT_THROW(reimport("# dwarfeval.report schema_version=1\nrecord,kernel\ncell,LUD\n"), ParseError);
    EXPECT_THROW(reimport("COMPARISON REPORT (dwarfeval.report schema_version 1)\n\ngarbage\n"), ParseError);
    try {
        const auto text = render_report(compare(fixtures::published_runtimes()), Format::structured_records);
        auto bad = text;
        const auto at = bad.find("\"kernel\":\"LUD\"");
        bad.replace(at, 14, "\"kernel\":\"FFT\"");
        (void)reimport(bad);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_GT(e.line(), 1u);
    }
}

// Figure data

TEST(PlotData, TimeVsSizeAlignsSizes) {
    const auto text = plot_data({timed_series("a", "c", {1, 2}), timed_series("b", "c", {3, 4, 5})}, PlotKind::time_vs_size);
    EXPECT_NE(text.find("size,LUD/a/c,LUD/b/c\n"), std::string::npos);
    EXPECT_NE(text.find("2,1.000,3.000\n"), std::string::npos);
    EXPECT_NE(text.find("8,,5.000\n"), std::string::npos);
    EXPECT_NE(text.find("# log_scale=x,y"), std::string::npos);
}

TEST(PlotData, ResourceStackSumsToHundred) {
    const auto s = series(Kernel::lud, "a", "c", {point(2, 1, 0, 60, 10, 20)});
    const auto text = plot_data({s}, PlotKind::resource_stack);
    EXPECT_NE(text.find("size,cpu,io,mem,other\n2,60.0,10.0,20.0,10.0\n"), std::string::npos);
}

TEST(PlotData, MixedKernelsAreRejected) {
    try {
        (void)plot_data({timed_series("a", "c", {1}), timed_series("a", "c", {1}, 0, Kernel::kmeans)}, PlotKind::time_vs_size);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::usage);
    }
}
