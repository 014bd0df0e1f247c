#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace dwarfeval;
using namespace dwarfeval::harness;

namespace {

ExecutionConfig quick(unsigned reps = 3, unsigned warmups = 0) {
    ExecutionConfig c;
    c.threads = 1;
    c.repetitions = reps;
    c.warmup_runs = warmups;
    c.confidence_intervals = reps >= 2;
    static std::shared_ptr<profiler::SamplerBackend> backend = profiler::make_backend("auto");
    c.backend = backend;
    return c;
}

WorkloadSpec spec(Kernel k, std::uint64_t size) {
    WorkloadSpec w;
    w.kernel = k;
    w.size = size;
    w.dims = 4;
    w.queries = 5000;
    return w;
}

} // namespace

TEST(RunPoint, SingleRepetitionGivesOneRecord) {
    const auto r = run_point(spec(Kernel::lud, 16), quick(1));
    ASSERT_TRUE(r.usable()) << r.invalid_reason.value_or("") << r.skip_reason.value_or("");
    EXPECT_EQ(r.records.size(), 1u);
}

TEST(RunPoint, ThirtyRepetitionsGiveThirtyLabeledRecords) {
    auto cfg = quick(30, 1);
    cfg.toolchain = "tc";
    cfg.config_label = "cfg";
    const auto r = run_point(spec(Kernel::bptree, 1000), cfg);
    ASSERT_EQ(r.records.size(), 30u);
    for (const auto& rec : r.records) {
        EXPECT_EQ(rec.labels.toolchain, "tc");
        EXPECT_EQ(rec.labels.config, "cfg");
        EXPECT_EQ(rec.labels.dwarf, Dwarf::gt);
        EXPECT_EQ(rec.workload.size, 1000u);
        EXPECT_EQ(rec.sampler_backend, cfg.backend->name());
        EXPECT_NEAR(rec.cpu_pct + rec.io_pct + rec.mem_pct + rec.other_pct, 100.0, 0.1);
    }
}

TEST(RunPoint, IdenticalInvocationsGiveIdenticalOutputs) {
    for (auto k : {Kernel::lud, Kernel::kmeans, Kernel::bptree}) {
        const auto w = spec(k, k == Kernel::lud ? 80 : 3000);
        const auto a = run_point(w, quick(2));
        const auto b = run_point(w, quick(2));
        ASSERT_TRUE(a.usable() && b.usable());
        EXPECT_EQ(a.checksum, b.checksum) << to_string(k);
        auto other = w;
        other.seed = 99;
        EXPECT_NE(run_point(other, quick(2)).checksum, a.checksum) << to_string(k);
    }
}

TEST(RunPoint, InsufficientMemorySkipsWithReason) {
    auto cfg = quick();
    cfg.memory_limit_bytes = 1024;
    const auto r = run_point(spec(Kernel::lud, 64), cfg);
    EXPECT_FALSE(r.usable());
    ASSERT_TRUE(r.skip_reason.has_value());
    EXPECT_NE(r.skip_reason->find("insufficient memory"), std::string::npos);
    EXPECT_TRUE(r.records.empty());
}

TEST(RunPoint, FullScaleLudIsSkippedOnASmallHost) {
    auto cfg = quick();
    cfg.memory_limit_bytes = std::uint64_t{4} << 30;
    const auto r = run_point(spec(Kernel::lud, 32768), cfg); // 8 GiB matrix
    EXPECT_TRUE(r.skip_reason.has_value());
}

TEST(RunPoint, ConfigurationIsValidated) {
    auto cfg = quick();
    cfg.repetitions = 0;
    EXPECT_THROW(run_point(spec(Kernel::lud, 8), cfg), Error);
    cfg = quick(1);
    cfg.confidence_intervals = true;
    EXPECT_THROW(run_point(spec(Kernel::lud, 8), cfg), Error);
    cfg = quick();
    cfg.threads = available_cores() + 1;
    EXPECT_THROW(run_point(spec(Kernel::lud, 8), cfg), Error);
    cfg = quick();
    cfg.backend.reset();
    EXPECT_THROW(run_point(spec(Kernel::lud, 8), cfg), Error);
}

TEST(RunSweep, OnePointPlan) {
    const auto s = run_sweep(make_plan("one", spec(Kernel::kmeans, 500), {500}, quick()));
    ASSERT_EQ(s.points.size(), 1u);
    EXPECT_EQ(s.points[0].n, 3u);
    EXPECT_FALSE(s.points[0].checksum.empty());
    EXPECT_EQ(s.labels.kernel, Kernel::kmeans);
    EXPECT_EQ(s.labels.dwarf, Dwarf::dla);
    EXPECT_NO_THROW(s.validate());
}

TEST(RunSweep, InvalidAndSkippedPointsBecomeGapsWithoutHarmingOthers) {
    // Order 3 cannot hold 5 keys; 4 and 6 keys are fine.
    auto base = spec(Kernel::bptree, 4);
    base.order = 3;
    base.queries = 100;
    std::vector<std::pair<std::uint64_t, bool>> seen;
    const auto out = run_sweep_detailed(make_plan("gaps", base, {4, 5, 6}, quick()),
                                        [&](const PointResult& r, const analytics::SeriesPoint* p) {
                                            seen.emplace_back(r.spec.size, p != nullptr);
                                        });
    EXPECT_TRUE(out.partial());
    ASSERT_EQ(out.series.points.size(), 2u);
    EXPECT_EQ(out.series.points[0].size, 4u);
    EXPECT_EQ(out.series.points[1].size, 6u);
    ASSERT_EQ(out.series.gaps.size(), 1u);
    EXPECT_EQ(out.series.gaps[0].size, 5u);
    EXPECT_EQ(seen, (std::vector<std::pair<std::uint64_t, bool>>{{4, true}, {5, false}, {6, true}}));

    // The isolated points match a sweep run without the bad one.
    const auto clean = run_sweep(make_plan("clean", base, {4, 6}, quick()));
    EXPECT_EQ(clean.points[0].checksum, out.series.points[0].checksum);
    EXPECT_EQ(clean.points[1].checksum, out.series.points[1].checksum);
}

TEST(RunSweep, AllPointsSkippedIsEmptySeries) {
    auto cfg = quick();
    cfg.memory_limit_bytes = 1;
    try {
        (void)run_sweep(make_plan("none", spec(Kernel::lud, 8), {8, 16}, cfg));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::empty_series);
    }
}

TEST(RunSweep, PlanValidation) {
    EXPECT_THROW(run_sweep(make_plan("empty", spec(Kernel::lud, 8), {}, quick())), Error);
    EXPECT_THROW(run_sweep(make_plan("desc", spec(Kernel::lud, 8), {16, 8}, quick())), Error);
    auto plan = make_plan("mixed", spec(Kernel::lud, 8), {8, 16}, quick());
    plan.points[1].kernel = Kernel::kmeans;
    EXPECT_THROW(run_sweep(plan), Error);
}

TEST(RunSweep, MetadataRecordsProvenance) {
    auto cfg = quick(2, 1);
    const auto s = run_sweep(make_plan("meta", spec(Kernel::bptree, 2000), {2000}, cfg));
    for (const char* key : {"plan", "host_cores", "host_cpu", "sampler_backend", "sampler_capabilities", "threads",
                            "affinity", "affinity_requested", "repetitions", "warmup_runs", "seed", "bptree_order",
                            "bptree_queries", "created"})
        EXPECT_TRUE(s.metadata.count(key)) << key;
    EXPECT_EQ(s.metadata.at("warmup_runs"), "1");
    EXPECT_EQ(s.metadata.at("repetitions"), "2");
    EXPECT_EQ(s.metadata.at("plan"), "meta");
}

TEST(RunSweep, DeskLudMeansGrowWithSize) {
    const auto s = run_sweep(make_plan("grow", spec(Kernel::lud, 64), {64, 128, 256, 512}, quick(3, 1)));
    ASSERT_EQ(s.points.size(), 4u);
    for (std::size_t i = 1; i < s.points.size(); ++i)
        EXPECT_GT(s.points[i].mean_wall_ms, s.points[i - 1].mean_wall_ms) << "size " << s.points[i].size;
}

TEST(RunSweep, SeriesSurvivesFileRoundTrip) {
    const auto s = run_sweep(make_plan("rt", spec(Kernel::kmeans, 300), {300, 600}, quick()));
    const auto text = io::render_series({s});
    std::istringstream in(text);
    EXPECT_EQ(io::parse_series(in), std::vector<analytics::SweepSeries>{s});
}

TEST(Presets, ShapesMatchDeclaredRanges) {
    const auto* lud = find_preset("lud-full");
    ASSERT_NE(lud, nullptr);
    EXPECT_EQ(lud->sizes.size(), 10u);
    EXPECT_EQ(lud->sizes.front(), 2048u);
    EXPECT_EQ(lud->sizes.back(), 32768u);
    for (auto published : {2048u, 16384u, 18432u, 28672u, 32768u})
        EXPECT_NE(std::find(lud->sizes.begin(), lud->sizes.end(), published), lud->sizes.end());

    const auto* km = find_preset("kmeans-full");
    ASSERT_NE(km, nullptr);
    EXPECT_EQ(km->sizes.front(), 1'638'400u);
    EXPECT_EQ(km->sizes.back(), 9'830'400u);

    const auto* bt = find_preset("bptree-full");
    ASSERT_NE(bt, nullptr);
    EXPECT_EQ(bt->sizes.size(), 10u);
    EXPECT_EQ(bt->sizes.back(), 50'000'000u);

    const auto* desk = find_preset("lud-desk");
    ASSERT_NE(desk, nullptr);
    EXPECT_EQ(desk->sizes.front(), 64u);
    EXPECT_EQ(desk->sizes.back(), 4096u);
    EXPECT_EQ(find_preset("nope"), nullptr);

    std::set<std::string> names;
    for (const auto& p : presets()) {
        EXPECT_TRUE(names.insert(p.name).second) << p.name;
        EXPECT_TRUE(std::is_sorted(p.sizes.begin(), p.sizes.end()));
        EXPECT_EQ(std::adjacent_find(p.sizes.begin(), p.sizes.end()), p.sizes.end());
    }
}

TEST(Presets, FullLudPlanHasTenPoints) {
    const auto* lud = find_preset("lud-full");
    const auto plan = make_plan("full", spec(Kernel::lud, 1), lud->sizes, quick());
    EXPECT_NO_THROW(plan.validate());
    EXPECT_EQ(plan.points.size(), 10u);
}
