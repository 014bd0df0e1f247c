#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "dwarfeval/analytics/series.hpp"
#include "dwarfeval/analytics/stats.hpp"
#include "dwarfeval/error.hpp"
#include "dwarfeval/kernels/workload.hpp"
#include "dwarfeval/parallel.hpp"
#include "dwarfeval/profiler/profile.hpp"
#include "dwarfeval/profiler/sampler.hpp"

namespace dwarfeval::harness {

struct ExecutionConfig {
    unsigned threads = available_cores();
    Affinity affinity = Affinity::scatter;
    unsigned repetitions = 30;
    unsigned warmup_runs = 1;
    bool confidence_intervals = true;
    std::shared_ptr<profiler::SamplerBackend> backend;
    std::string config_label = "local";
    std::string toolchain = "cpp-threads";
    /// Overrides the host's available memory (bytes) for the pre-run check.
    std::optional<std::uint64_t> memory_limit_bytes;

    void validate() const {
        if (threads == 0) throw Error(ErrorKind::configuration, "threads must be positive");
        if (threads > available_cores())
            throw Error(ErrorKind::configuration, "threads (" + std::to_string(threads) + ") exceed available cores (" +
                                                      std::to_string(available_cores()) + ")");
        if (repetitions == 0) throw Error(ErrorKind::configuration, "repetitions must be positive");
        if (confidence_intervals && repetitions < 2)
            throw Error(ErrorKind::configuration, "confidence intervals need at least 2 repetitions");
        if (!backend) throw Error(ErrorKind::configuration, "no sampler backend configured");
    }
};

/// Placement actually applied: `scatter` or `compact` degrade to `none`
/// when the host has no affinity interface.
inline Affinity effective_affinity(Affinity requested) {
    if (requested != Affinity::none && allowed_cpus().empty()) return Affinity::none;
    return requested;
}

/// MemAvailable from /proc/meminfo, falling back to free physical pages.
inline std::uint64_t available_memory_bytes() {
    if (auto text = profiler::os::slurp("/proc/meminfo")) {
        std::istringstream in(*text);
        std::string key;
        std::uint64_t kb = 0;
        std::string unit;
        while (in >> key >> kb >> unit) {
            if (key == "MemAvailable:") return kb * 1024;
        }
    }
    return static_cast<std::uint64_t>(sysconf(_SC_AVPHYS_PAGES)) * static_cast<std::uint64_t>(sysconf(_SC_PAGESIZE));
}

struct PointResult {
    WorkloadSpec spec;
    std::vector<profiler::EEARecord> records;
    std::optional<std::string> skip_reason;    // point not run
    std::optional<std::string> invalid_reason; // kernel output failed its check
    std::string verification;
    std::uint64_t checksum = 0;

    bool usable() const { return !skip_reason && !invalid_reason && !records.empty(); }
};

/// Profiles one sweep point: memory check, one verified run, warmups, then
/// `repetitions` profiled runs on the same generated inputs.
inline PointResult run_point(const WorkloadSpec& spec, const ExecutionConfig& cfg) {
    cfg.validate();
    PointResult out;
    out.spec = spec;

    const std::uint64_t need = kernels::estimated_bytes(spec);
    const std::uint64_t have = cfg.memory_limit_bytes.value_or(available_memory_bytes());
    if (need > have) {
        out.skip_reason = "insufficient memory: needs " + std::to_string(need >> 20) + " MiB, " +
                          std::to_string(have >> 20) + " MiB available";
        return out;
    }

    const ParallelConfig par{cfg.threads, effective_affinity(cfg.affinity)};
    std::optional<kernels::PreparedWorkload> work;
    try {
        work.emplace(spec);
    } catch (const std::bad_alloc&) {
        out.skip_reason = "insufficient memory: allocation failed while generating inputs";
        return out;
    }

    const auto check = work->verify(par);
    out.verification = check.detail;
    out.checksum = check.checksum;
    if (!check.ok) {
        out.invalid_reason = "kernel output failed verification: " + check.detail;
        return out;
    }

    for (unsigned w = 0; w < cfg.warmup_runs; ++w) (void)work->run(par);

    const profiler::Labels labels{spec.dwarf(), cfg.toolchain, cfg.config_label};
    const profiler::ProfileHints hints{cfg.threads, work->work_ops(), kernels::working_set_bytes(spec)};
    out.records.reserve(cfg.repetitions);
    for (unsigned r = 0; r < cfg.repetitions; ++r) {
        std::uint64_t sum = 0;
        out.records.push_back(profiler::profile([&] { sum = work->run(par); }, labels, *cfg.backend, hints, spec));
        if (sum != out.checksum) {
            out.invalid_reason = "kernel output changed between repetitions";
            out.records.clear();
            return out;
        }
    }
    return out;
}

struct SweepPlan {
    std::string label;
    Kernel kernel = Kernel::lud;
    std::vector<WorkloadSpec> points;
    ExecutionConfig exec;

    void validate() const {
        if (points.empty()) throw Error(ErrorKind::configuration, "sweep plan '" + label + "' has no sizes");
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i].kernel != kernel)
                throw Error(ErrorKind::configuration, "sweep plan '" + label + "' mixes kernels");
            if (i > 0 && points[i - 1].size >= points[i].size)
                throw Error(ErrorKind::configuration, "sweep plan '" + label + "' sizes must strictly ascend");
        }
        exec.validate();
    }
};

/// Builds a plan whose points share `base` parameters and differ in size.
inline SweepPlan make_plan(std::string label, const WorkloadSpec& base, const std::vector<std::uint64_t>& sizes,
                           ExecutionConfig exec) {
    SweepPlan plan;
    plan.label = std::move(label);
    plan.kernel = base.kernel;
    plan.exec = std::move(exec);
    for (auto s : sizes) {
        WorkloadSpec w = base;
        w.size = s;
        plan.points.push_back(w);
    }
    return plan;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Host and run provenance recorded with every series.
inline std::map<std::string, std::string> sweep_metadata(const SweepPlan& plan) {
    const auto& cfg = plan.exec;
    std::map<std::string, std::string> m;
    m["plan"] = plan.label;
    m["host_cores"] = std::to_string(available_cores());
    char ghz[32];
    std::snprintf(ghz, sizeof(ghz), "%.2f", profiler::os::nominal_clock_hz() / 1e9);
    m["host_clock_ghz"] = ghz;
    m["host_cpu"] = profiler::os::cpu_model();
    m["sampler_backend"] = cfg.backend->name();
    m["sampler_capabilities"] = profiler::describe(cfg.backend->capabilities());
    m["threads"] = std::to_string(cfg.threads);
    const Affinity eff = effective_affinity(cfg.affinity);
    m["affinity_requested"] = std::string(to_string(cfg.affinity));
    m["affinity"] = std::string(to_string(eff));
    if (eff != cfg.affinity) m["affinity_warning"] = "no affinity interface on host; threads unpinned";
    m["repetitions"] = std::to_string(cfg.repetitions);
    m["warmup_runs"] = std::to_string(cfg.warmup_runs);
    const auto& w = plan.points.front();
    m["seed"] = std::to_string(w.seed);
    if (plan.kernel == Kernel::kmeans) {
        m["kmeans_dims"] = std::to_string(w.dims);
        m["kmeans_k"] = std::to_string(w.k);
        m["kmeans_max_iter"] = std::to_string(w.max_iter);
    }
    if (plan.kernel == Kernel::bptree) {
        m["bptree_order"] = std::to_string(w.order);
        m["bptree_queries"] = std::to_string(w.queries);
    }
    m["created"] = utc_timestamp();
    return m;
}

using PointCallback = std::function<void(const PointResult&, const analytics::SeriesPoint*)>;

struct SweepOutcome {
    analytics::SweepSeries series;
    std::vector<PointResult> points;
    bool partial() const { return !series.gaps.empty(); }
};

/// Runs every point in order and aggregates each into the series. Points
/// that were skipped or failed verification become gaps. Throws
/// empty_series if no point produced data.
inline SweepOutcome run_sweep_detailed(const SweepPlan& plan, const PointCallback& on_point = {}) {
    plan.validate();
    SweepOutcome out;
    out.series.labels = {plan.kernel, dwarf_of(plan.kernel), plan.exec.toolchain, plan.exec.config_label};
    out.series.metadata = sweep_metadata(plan);

    for (const auto& spec : plan.points) {
        PointResult r;
        try {
            r = run_point(spec, plan.exec);
        } catch (const Error& e) {
            r.spec = spec;
            r.invalid_reason = e.what();
        }
        if (r.usable()) {
            auto p = analytics::aggregate(r.records);
            p.checksum = kernels::hex_checksum(r.checksum);
            out.series.points.push_back(p);
            if (on_point) on_point(r, &out.series.points.back());
        } else {
            out.series.gaps.push_back({spec.size, r.skip_reason ? *r.skip_reason : r.invalid_reason.value_or("no data")});
            if (on_point) on_point(r, nullptr);
        }
        out.points.push_back(std::move(r));
    }
    if (out.series.points.empty())
        throw Error(ErrorKind::empty_series, "every point of sweep '" + plan.label + "' was skipped or invalid");
    return out;
}

inline analytics::SweepSeries run_sweep(const SweepPlan& plan) { return run_sweep_detailed(plan).series; }

} // namespace dwarfeval::harness
