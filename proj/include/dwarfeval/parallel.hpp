#pragma once

#include <barrier>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <string_view>
#include <thread>
#include <vector>

#include <sched.h>

#include "dwarfeval/error.hpp"
#include "dwarfeval/types.hpp"

namespace dwarfeval {

/// Thread placement policy. `scatter` spreads threads evenly over the
/// allowed CPUs, `compact` packs them onto consecutive CPUs.
enum class Affinity { scatter, compact, none };

inline std::string_view to_string(Affinity a) {
    switch (a) {
    case Affinity::scatter: return "scatter";
    case Affinity::compact: return "compact";
    case Affinity::none: return "none";
    }
    return "?";
}

inline std::optional<Affinity> parse_affinity(std::string_view s) {
    if (s == "scatter") return Affinity::scatter;
    if (s == "compact") return Affinity::compact;
    if (s == "none") return Affinity::none;
    return std::nullopt;
}

/// CPUs this process may run on, in ascending id order. Empty when the
/// host exposes no affinity interface.
inline std::vector<int> allowed_cpus() {
    cpu_set_t set;
    CPU_ZERO(&set);
    if (sched_getaffinity(0, sizeof(set), &set) != 0) return {};
    std::vector<int> cpus;
    for (int c = 0; c < CPU_SETSIZE; ++c) {
        if (CPU_ISSET(c, &set)) cpus.push_back(c);
    }
    return cpus;
}

inline unsigned available_cores() {
    const auto cpus = allowed_cpus();
    if (!cpus.empty()) return static_cast<unsigned>(cpus.size());
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

/// CPU a team member should be pinned to, or nullopt for no pinning.
inline std::optional<int> placement(Affinity a, unsigned rank, unsigned threads,
                                    const std::vector<int>& cpus) {
    if (a == Affinity::none || cpus.empty()) return std::nullopt;
    const std::size_t n = cpus.size();
    if (a == Affinity::compact) return cpus[rank % n];
    const std::size_t slot = (static_cast<std::size_t>(rank) * n) / threads;
    return cpus[slot % n];
}

struct ParallelConfig {
    unsigned threads = 1;
    Affinity affinity = Affinity::none;

    ParallelConfig() = default;
    ParallelConfig(unsigned t, Affinity a = Affinity::none) : threads(t), affinity(a) {}
};

/// Runs `body(rank, barrier)` on `cfg.threads` fresh threads and joins them.
/// The first exception thrown by any member is rethrown on the caller.
/// Members must reach the barrier the same number of times.
template <class Body>
void run_team(ParallelConfig cfg, Body&& body) {
    if (cfg.threads == 0) throw Error(ErrorKind::invalid_input, "thread count must be positive");
    const unsigned n = cfg.threads;
    std::barrier sync(static_cast<std::ptrdiff_t>(n));
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto cpus = cfg.affinity == Affinity::none ? std::vector<int>{} : allowed_cpus();

    auto member = [&](unsigned rank) {
        if (auto cpu = placement(cfg.affinity, rank, n, cpus)) {
            cpu_set_t set;
            CPU_ZERO(&set);
            CPU_SET(*cpu, &set);
            sched_setaffinity(0, sizeof(set), &set);
        }
        try {
            body(rank, sync);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    {
        std::vector<std::jthread> team;
        team.reserve(n);
        for (unsigned r = 0; r < n; ++r) team.emplace_back(member, r);
    }
    if (failure) std::rethrow_exception(failure);
}

/// Static cyclic distribution of `blocks` independent work items.
template <class Fn>
void parallel_blocks(ParallelConfig cfg, std::size_t blocks, Fn&& fn) {
    if (cfg.threads <= 1 || blocks <= 1) {
        if (cfg.threads == 0) throw Error(ErrorKind::invalid_input, "thread count must be positive");
        for (std::size_t b = 0; b < blocks; ++b) fn(b);
        return;
    }
    run_team(cfg, [&](unsigned rank, auto&) {
        for (std::size_t b = rank; b < blocks; b += cfg.threads) fn(b);
    });
}

} // namespace dwarfeval
