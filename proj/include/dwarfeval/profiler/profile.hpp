#pragma once

#include <chrono>
#include <utility>

#include "dwarfeval/profiler/eea.hpp"
#include "dwarfeval/profiler/sampler.hpp"

namespace dwarfeval::profiler {

/// Runs `work` once under `backend` and returns its EEA record.
///
/// Wall time comes from the monotonic clock around the task; the backend
/// attributes it. The record is assembled only after the task returns.
template <class Task>
EEARecord profile(Task&& work, const Labels& labels, SamplerBackend& backend, const ProfileHints& hints = {},
                  const WorkloadSpec& workload = {}) {
    auto session = backend.begin(hints);
    const auto t0 = std::chrono::steady_clock::now();
    std::forward<Task>(work)();
    const auto t1 = std::chrono::steady_clock::now();
    // steady_clock can tick coarser than a trivial task; keep wall_ms > 0.
    const double wall_ms = std::max(std::chrono::duration<double, std::milli>(t1 - t0).count(), 1e-6);
    const Components c = session->finish(wall_ms);

    EEARecord r;
    r.wall_ms = wall_ms;
    r.cpu_ms = c.cpu_ms;
    r.io_ms = c.io_ms;
    r.mem_ms = c.mem_ms;
    r.threads = hints.threads == 0 ? 1 : hints.threads;
    const Percentages p = compute_percentages(wall_ms, c.cpu_for_pct_ms, c.io_ms, c.mem_ms, r.threads);
    r.cpu_pct = p.cpu;
    r.io_pct = p.io;
    r.mem_pct = p.mem;
    r.other_pct = p.other;
    r.clamped = p.clamped;
    r.labels = labels;
    r.workload = workload;
    r.sampler_backend = backend.name();
    r.partial = !backend.capabilities().complete();
    return r;
}

} // namespace dwarfeval::profiler
