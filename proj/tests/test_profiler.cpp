#include <gtest/gtest.h>

#include <fcntl.h>
#include <sys/resource.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace dwarfeval;
using namespace dwarfeval::profiler;

namespace {

// Backend that reports scripted components, to test record assembly alone.
class ScriptedBackend final : public SamplerBackend {
public:
    ScriptedBackend(Components c, Capabilities caps) : c_(c), caps_(caps) {}
    std::string name() const override { return "scripted"; }
    Capabilities capabilities() const override { return caps_; }
    std::unique_ptr<SamplerSession> begin(const ProfileHints&) override {
        struct S final : SamplerSession {
            Components c;
            Components finish(double) override { return c; }
        };
        auto s = std::make_unique<S>();
        s->c = c_;
        return s;
    }

private:
    Components c_;
    Capabilities caps_;
};

void spin_for(std::chrono::milliseconds d) {
    const auto end = std::chrono::steady_clock::now() + d;
    volatile std::uint64_t x = 0;
    while (std::chrono::steady_clock::now() < end) x = x + 1;
}

double rusage_cpu_ms() {
    rusage ru{};
    getrusage(RUSAGE_SELF, &ru);
    return (ru.ru_utime.tv_sec + ru.ru_stime.tv_sec) * 1e3 + (ru.ru_utime.tv_usec + ru.ru_stime.tv_usec) * 1e-3;
}

void expect_split(const Percentages& p, double cpu, double io, double mem, double other) {
    EXPECT_NEAR(p.cpu, cpu, 1e-9);
    EXPECT_NEAR(p.io, io, 1e-9);
    EXPECT_NEAR(p.mem, mem, 1e-9);
    EXPECT_NEAR(p.other, other, 1e-9);
}

} // namespace

TEST(ComputePercentages, FullyCpuBound) { expect_split(compute_percentages(100, 100, 0, 0), 100, 0, 0, 0); }

TEST(ComputePercentages, DirectArithmetic) { expect_split(compute_percentages(100, 40, 30, 20), 40, 30, 20, 10); }

TEST(ComputePercentages, OverlapIsCarvedOutOfCpu) {
    // Hand application: io 5 first, mem min(60, 95) = 60, cpu min(90, 35) = 35.
    const auto p = compute_percentages(100, 90, 5, 60);
    expect_split(p, 35, 5, 60, 0);
    EXPECT_LE(p.cpu + p.mem, 95.0);
}

TEST(ComputePercentages, ThreadNormalization) {
    // 4 threads, 320 ms summed CPU over 100 ms wall: 80 ms per thread.
    expect_split(compute_percentages(100, 320, 0, 0, 4), 80, 0, 0, 20);
    expect_split(compute_percentages(100, 800, 0, 0, 4), 100, 0, 0, 0);
}

TEST(ComputePercentages, RejectsInvalidMeasurements) {
    for (double wall : {0.0, -1.0, double(NAN), double(INFINITY)}) {
        try {
            (void)compute_percentages(wall, 1, 0, 0);
            FAIL() << "wall " << wall;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::invalid_measurement);
        }
    }
    EXPECT_THROW(compute_percentages(10, -1, 0, 0), Error);
    EXPECT_THROW(compute_percentages(10, 1, NAN, 0), Error);
    EXPECT_THROW(compute_percentages(10, 1, 0, 0, 0), Error);
}

TEST(ComputePercentages, ClosureProperty) {
    Rng rng(1);
    for (int i = 0; i < 20000; ++i) {
        const double wall = rng.uniform(1e-3, 1e6);
        const double scale = wall * rng.uniform(0.0, 3.0);
        const unsigned threads = 1 + static_cast<unsigned>(rng.below(64));
        const auto p = compute_percentages(wall, scale * rng.uniform01() * threads, scale * rng.uniform01(),
                                           scale * rng.uniform01(), threads);
        EXPECT_NEAR(p.cpu + p.io + p.mem + p.other, 100.0, 0.1);
        for (double v : {p.cpu, p.io, p.mem, p.other}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 100.0);
        }
    }
}

TEST(ComputePercentages, MoreIoNeverRaisesCpuProperty) {
    Rng rng(2);
    for (int i = 0; i < 20000; ++i) {
        const double wall = rng.uniform(1.0, 1e4);
        const double cpu = rng.uniform(0.0, 2.0 * wall);
        const double mem = rng.uniform(0.0, wall);
        const double io = rng.uniform(0.0, wall);
        const double more = io + rng.uniform(0.0, wall);
        EXPECT_LE(compute_percentages(wall, cpu, more, mem).cpu, compute_percentages(wall, cpu, io, mem).cpu + 1e-9);
    }
}

TEST(Amat, Examples) {
    EXPECT_EQ(amat(1, 0, 12345), 1.0);
    EXPECT_EQ(amat(1, 1, 10), 11.0);
    EXPECT_DOUBLE_EQ(amat(2, 0.05, 100), 2 + 0.05 * 100);
    EXPECT_DOUBLE_EQ(amat(2, 0.05, 100), 7.0);
}

TEST(Amat, DomainErrors) {
    for (double rate : {-0.01, 1.01, double(NAN)}) {
        try {
            (void)amat(1, rate, 1);
            FAIL() << "rate " << rate;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::domain);
        }
    }
    EXPECT_THROW(amat(-1, 0.5, 1), Error);
    EXPECT_THROW(amat(1, 0.5, -1), Error);
}

TEST(Amat, AffineProperty) {
    Rng rng(3);
    for (int i = 0; i < 5000; ++i) {
        const double h = rng.uniform(0, 100), r = rng.uniform01(), p = rng.uniform(0, 1e3);
        const double d = rng.uniform(0, 1e3);
        // Equal steps in penalty give equal steps in AMAT; same for miss rate.
        EXPECT_NEAR(amat(h, r, p + 2 * d) - amat(h, r, p + d), amat(h, r, p + d) - amat(h, r, p), 1e-9 * (1 + p + d));
        const double r0 = r / 3, r1 = 2 * r / 3;
        EXPECT_NEAR(amat(h, r1, p) - amat(h, r0, p), amat(h, r, p) - amat(h, r1, p), 1e-9 * (1 + p));
    }
}

TEST(CapabilityMask, Parse) {
    auto m = CapabilityMask::parse("io-wait,mem-stall");
    EXPECT_TRUE(m.io_wait && m.mem_stall);
    m = CapabilityMask::parse("mem-stall");
    EXPECT_FALSE(m.io_wait);
    EXPECT_TRUE(m.mem_stall);
    m = CapabilityMask::parse("");
    EXPECT_FALSE(m.io_wait || m.mem_stall);
    EXPECT_THROW(CapabilityMask::parse("io-wait,bogus"), Error);
}

TEST(Profile, AssemblesRecordFromBackend) {
    ScriptedBackend backend({40, 30, 20, 40}, {true, true, true});
    const Labels labels{Dwarf::gt, "cpp-threads", "desk"};
    WorkloadSpec w;
    w.kernel = Kernel::bptree;
    w.size = 77;
    const auto r = profile([] { spin_for(std::chrono::milliseconds(20)); }, labels, backend, {}, w);
    EXPECT_GE(r.wall_ms, 20.0);
    EXPECT_EQ(r.cpu_ms, 40.0);
    EXPECT_EQ(r.io_ms, 30.0);
    EXPECT_EQ(r.mem_ms, 20.0);
    EXPECT_EQ(r.sampler_backend, "scripted");
    EXPECT_EQ(r.labels.toolchain, "cpp-threads");
    EXPECT_EQ(r.workload.size, 77u);
    EXPECT_FALSE(r.partial);
    const auto p = compute_percentages(r.wall_ms, 40, 30, 20);
    EXPECT_DOUBLE_EQ(r.cpu_pct, p.cpu);
    EXPECT_DOUBLE_EQ(r.other_pct, p.other);
}

TEST(Profile, MissingCapabilityFlagsPartial) {
    ScriptedBackend backend({10, 0, 0, 10}, {true, false, true});
    const auto r = profile([] {}, {}, backend);
    EXPECT_TRUE(r.partial);
    EXPECT_EQ(r.io_pct, 0.0);
}

TEST(Profile, MaskedOsBackendIsPartialWithZeroedComponents) {
    for (const char* name : {"residual", "counter"}) {
        auto backend = make_backend(name, CapabilityMask::parse("io-wait,mem-stall"));
        EXPECT_FALSE(backend->capabilities().io_wait);
        EXPECT_FALSE(backend->capabilities().mem_stall);
        const auto r = profile([] { spin_for(std::chrono::milliseconds(5)); }, {}, *backend);
        EXPECT_TRUE(r.partial) << name;
        EXPECT_EQ(r.io_pct, 0.0);
        EXPECT_EQ(r.mem_pct, 0.0);
        EXPECT_NEAR(r.cpu_pct + r.other_pct, 100.0, 0.1);
    }
}

TEST(Profile, UnknownBackendIsConfigurationError) {
    try {
        (void)make_backend("magic");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::configuration);
    }
}

TEST(Profile, SpinTaskIsCpuDominated) {
    auto backend = make_backend("auto");
    ProfileHints hints;
    hints.working_set_bytes = 64; // register-resident loop
    const auto r = profile([] { spin_for(std::chrono::milliseconds(200)); }, {}, *backend, hints);
    EXPECT_GE(r.cpu_pct, 95.0) << "backend " << r.sampler_backend;
    EXPECT_LE(r.io_pct, 1.0);
}

TEST(Profile, NoOpOverheadIsSmall) {
    auto backend = make_backend("auto");
    for (int i = 0; i < 50; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = profile([] {}, {}, *backend);
        const double outer = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        EXPECT_LE(r.wall_ms, 5.0);
        EXPECT_LE(outer, 5.0);
    }
}

TEST(Profile, UncachedFileReadAgreesWithStandaloneAccounting) {
    namespace fs = std::filesystem;
    const fs::path file = fs::temp_directory_path() / ("dwarfeval_io_" + std::to_string(getpid()));
    {
        std::ofstream out(file, std::ios::binary);
        std::vector<char> block(1 << 20, 'x');
        for (int i = 0; i < 128; ++i) out.write(block.data(), block.size());
    }
    auto drop_and_read = [&] {
        const int fd = ::open(file.c_str(), O_RDONLY);
        ASSERT_GE(fd, 0);
        ::fdatasync(fd);
        ::posix_fadvise(fd, 0, 0, POSIX_FADV_DONTNEED);
        std::vector<char> buf(1 << 20);
        while (::read(fd, buf.data(), buf.size()) > 0) {
        }
        ::close(fd);
    };

    // Oracle: the same task standalone, from wall clock and rusage alone.
    const auto t0 = std::chrono::steady_clock::now();
    const double c0 = rusage_cpu_ms();
    drop_and_read();
    const double cpu = rusage_cpu_ms() - c0;
    const double wall = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const bool oracle_io_dominant = wall - cpu > cpu;

    auto backend = make_backend("auto");
    const auto r = profile(drop_and_read, {}, *backend);
    fs::remove(file);
    if (!backend->capabilities().io_wait) {
        EXPECT_EQ(r.io_pct, 0.0);
        EXPECT_TRUE(r.partial);
        return;
    }
    const bool io_dominant = r.io_pct > r.cpu_pct && r.io_pct > r.mem_pct;
    EXPECT_EQ(io_dominant, oracle_io_dominant)
        << "standalone wall " << wall << " cpu " << cpu << "; profiled io " << r.io_pct << " cpu " << r.cpu_pct
        << " mem " << r.mem_pct;
}

TEST(Profile, ResidualBackendChargesUnderachievingWork) {
    auto backend = make_backend("residual");
    ASSERT_TRUE(backend->capabilities().mem_stall);
    ProfileHints hints;
    hints.work_ops = 1.0; // claims almost no arithmetic for a full CPU burst
    hints.working_set_bytes = std::uint64_t{1} << 40;
    const auto r = profile([] { spin_for(std::chrono::milliseconds(50)); }, {}, *backend, hints);
    EXPECT_GT(r.mem_pct, 90.0);
    hints.working_set_bytes = 64; // cache resident: no stall charged
    const auto s = profile([] { spin_for(std::chrono::milliseconds(50)); }, {}, *backend, hints);
    EXPECT_GE(s.cpu_pct, 95.0);
}

TEST(Profile, LudWorkloadIsCpuDominant) {
    auto backend = make_backend("auto");
    for (std::uint64_t n : {64u, 256u}) {
        WorkloadSpec w;
        w.kernel = Kernel::lud;
        w.size = n;
        kernels::PreparedWorkload work(w);
        (void)work.verify(1);
        ProfileHints hints;
        hints.work_ops = work.work_ops();
        hints.working_set_bytes = kernels::working_set_bytes(w);
        (void)work.run(1);
        const auto r = profile([&] { (void)work.run(1); }, {}, *backend, hints, w);
        EXPECT_GT(r.cpu_pct, r.mem_pct) << "n=" << n;
        EXPECT_GT(r.cpu_pct, r.io_pct) << "n=" << n;
    }
}
