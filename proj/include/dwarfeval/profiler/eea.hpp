#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "dwarfeval/error.hpp"
#include "dwarfeval/types.hpp"

namespace dwarfeval::profiler {

struct Percentages {
    double cpu = 0.0;
    double io = 0.0;
    double mem = 0.0;
    double other = 0.0;
    bool clamped = false; // `other` came out negative and was forced to 0
};

/// Splits wall time into CPU, I/O, memory and residual percentages.
///
/// I/O wait is off-CPU and taken first, memory next, CPU last: memory
/// stalls are part of OS-accounted CPU time, so wherever the components
/// together exceed wall time the overlap is removed from CPU. `cpu_ms` is
/// summed over threads and normalized by `threads` first, which bounds
/// cpu% by 100 for parallel runs.
inline Percentages compute_percentages(double wall_ms, double cpu_ms, double io_ms, double mem_ms,
                                       unsigned threads = 1) {
    if (!(wall_ms > 0.0) || !std::isfinite(wall_ms))
        throw Error(ErrorKind::invalid_measurement, "wall time must be positive and finite");
    if (!(cpu_ms >= 0.0) || !(io_ms >= 0.0) || !(mem_ms >= 0.0) || !std::isfinite(cpu_ms) ||
        !std::isfinite(io_ms) || !std::isfinite(mem_ms))
        throw Error(ErrorKind::invalid_measurement, "component times must be finite and non-negative");
    if (threads == 0) throw Error(ErrorKind::invalid_measurement, "thread count must be positive");

    const double io = std::min(io_ms, wall_ms);
    const double mem = std::min(mem_ms, wall_ms - io);
    const double cpu = std::min(cpu_ms / threads, wall_ms - io - mem);

    Percentages p;
    // Divide first: a component equal to wall time then gives exactly 100.
    p.cpu = 100.0 * (cpu / wall_ms);
    p.io = 100.0 * (io / wall_ms);
    p.mem = 100.0 * (mem / wall_ms);
    p.other = 100.0 - (p.cpu + p.io + p.mem);
    if (p.other < 0.0) {
        p.other = 0.0;
        p.clamped = true;
    }
    return p;
}

/// Average memory access time: hit_time + miss_rate * miss_penalty.
inline double amat(double hit_time_ms, double miss_rate, double miss_penalty_ms) {
    if (!(miss_rate >= 0.0 && miss_rate <= 1.0))
        throw Error(ErrorKind::domain, "miss rate must lie in [0, 1]");
    if (!(hit_time_ms >= 0.0) || !(miss_penalty_ms >= 0.0))
        throw Error(ErrorKind::domain, "hit time and miss penalty must be non-negative");
    return hit_time_ms + miss_rate * miss_penalty_ms;
}

struct Labels {
    Dwarf dwarf = Dwarf::dla;
    std::string toolchain;
    std::string config;
};

/// One profiled execution. Times in milliseconds, percentages of wall_ms.
struct EEARecord {
    double wall_ms = 0.0;
    double cpu_ms = 0.0; // summed over threads, as the OS reports it
    double io_ms = 0.0;
    double mem_ms = 0.0;
    double cpu_pct = 0.0;
    double io_pct = 0.0;
    double mem_pct = 0.0;
    double other_pct = 0.0;

    Labels labels;
    WorkloadSpec workload;
    std::string sampler_backend;
    unsigned threads = 1;
    bool partial = false;
    bool clamped = false;
};

} // namespace dwarfeval::profiler
