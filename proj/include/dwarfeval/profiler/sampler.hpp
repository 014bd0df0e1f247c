#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <linux/perf_event.h>
#include <sys/ioctl.h>
#include <sys/syscall.h>
#include <time.h>
#include <unistd.h>

#include "dwarfeval/error.hpp"

namespace dwarfeval::profiler {

/// What a sampler can attribute. CPU time is always available.
struct Capabilities {
    bool cpu_time = true;
    bool io_wait = false;
    bool mem_stall = false;

    bool complete() const { return cpu_time && io_wait && mem_stall; }
    friend bool operator==(const Capabilities&, const Capabilities&) = default;
};

inline std::string describe(const Capabilities& c) {
    std::string s = "cpu-time";
    if (c.io_wait) s += ",io-wait";
    if (c.mem_stall) s += ",mem-stall";
    return s;
}

/// Capabilities to hide even when the host provides them (environment
/// fault injection and diagnostics).
struct CapabilityMask {
    bool io_wait = false;
    bool mem_stall = false;

    /// Parses a comma-separated list such as "io-wait,mem-stall".
    static CapabilityMask parse(std::string_view list) {
        CapabilityMask m;
        std::size_t pos = 0;
        while (pos <= list.size()) {
            const auto comma = list.find(',', pos);
            const auto item = list.substr(pos, comma == std::string_view::npos ? list.npos : comma - pos);
            if (item == "io-wait") m.io_wait = true;
            else if (item == "mem-stall") m.mem_stall = true;
            else if (!item.empty())
                throw Error(ErrorKind::configuration, "unknown capability '" + std::string(item) + "'");
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        return m;
    }
};

/// Per-run information a sampler may use.
struct ProfileHints {
    unsigned threads = 1;
    /// Arithmetic operations the task performs, when known. Lets the
    /// residual backend estimate how far below peak throughput it ran.
    std::optional<double> work_ops;
    /// Bytes the task touches repeatedly. Work that fits in the core's
    /// private cache is not charged memory stall by the residual backend.
    std::optional<std::uint64_t> working_set_bytes;
};

/// Time attribution for one run, in milliseconds.
struct Components {
    double cpu_ms = 0.0;
    double io_ms = 0.0;
    double mem_ms = 0.0;
    /// CPU time to feed percentage attribution; differs from cpu_ms when
    /// the backend knows exactly how much CPU time was memory stall.
    double cpu_for_pct_ms = 0.0;
};

namespace os {

inline double process_cpu_ms() {
    timespec ts{};
    clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) * 1e3 + static_cast<double>(ts.tv_nsec) * 1e-6;
}

inline double thread_cpu_ms() {
    timespec ts{};
    clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) * 1e3 + static_cast<double>(ts.tv_nsec) * 1e-6;
}

inline std::optional<std::string> slurp(const char* path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Field 42 of /proc/self/stat, aggregated block-I/O delay in clock ticks.
inline std::optional<std::uint64_t> blkio_delay_ticks() {
    auto text = slurp("/proc/self/stat");
    if (!text) return std::nullopt;
    // Skip "pid (comm)"; comm may contain spaces.
    const auto close = text->rfind(')');
    if (close == std::string::npos) return std::nullopt;
    std::istringstream rest(text->substr(close + 2));
    std::string field;
    for (int idx = 3; rest >> field; ++idx) {
        if (idx == 42) return std::stoull(field);
    }
    return std::nullopt;
}

inline bool delay_accounting_enabled() {
    auto v = slurp("/proc/sys/kernel/task_delayacct");
    return v && !v->empty() && (*v)[0] == '1';
}

struct SchedStat {
    std::uint64_t run_ns = 0;
    std::uint64_t wait_ns = 0;
};

inline std::optional<SchedStat> thread_schedstat() {
    auto text = slurp("/proc/thread-self/schedstat");
    if (!text) return std::nullopt;
    std::istringstream in(*text);
    SchedStat s;
    if (!(in >> s.run_ns >> s.wait_ns)) return std::nullopt;
    return s;
}

/// Bytes actually moved to or from storage by this process.
inline std::optional<std::uint64_t> storage_bytes() {
    auto text = slurp("/proc/self/io");
    if (!text) return std::nullopt;
    std::istringstream in(*text);
    std::string key;
    std::uint64_t value = 0, total = 0;
    bool seen = false;
    while (in >> key >> value) {
        if (key == "read_bytes:" || key == "write_bytes:") {
            total += value;
            seen = true;
        }
    }
    if (!seen) return std::nullopt;
    return total;
}

/// Nominal clock in Hz from cpufreq or /proc/cpuinfo; 0 if unknown.
/// Size of the per-core unified cache (level 2), 1 MiB when unknown.
inline std::uint64_t private_cache_bytes() {
    for (int i = 0; i < 8; ++i) {
        const std::string dir = "/sys/devices/system/cpu/cpu0/cache/index" + std::to_string(i) + "/";
        const auto level = slurp((dir + "level").c_str());
        const auto type = slurp((dir + "type").c_str());
        const auto size = slurp((dir + "size").c_str());
        if (!level || !type || !size) continue;
        if (std::stoi(*level) != 2 || type->rfind("Unified", 0) != 0) continue;
        std::uint64_t v = std::stoull(*size);
        if (size->find('K') != std::string::npos) v <<= 10;
        else if (size->find('M') != std::string::npos) v <<= 20;
        return v;
    }
    return 1u << 20;
}

inline double nominal_clock_hz() {
    for (const char* p : {"/sys/devices/system/cpu/cpu0/cpufreq/base_frequency",
                          "/sys/devices/system/cpu/cpu0/cpufreq/cpuinfo_max_freq"}) {
        if (auto v = slurp(p)) {
            try {
                return std::stod(*v) * 1e3; // kHz
            } catch (...) {
            }
        }
    }
    if (auto info = slurp("/proc/cpuinfo")) {
        std::istringstream in(*info);
        std::string line;
        while (std::getline(in, line)) {
            if (line.rfind("cpu MHz", 0) == 0) {
                const auto colon = line.find(':');
                if (colon != std::string::npos) return std::stod(line.substr(colon + 1)) * 1e6;
            }
        }
    }
    return 0.0;
}

inline std::string cpu_model() {
    if (auto info = slurp("/proc/cpuinfo")) {
        std::istringstream in(*info);
        std::string line;
        while (std::getline(in, line)) {
            if (line.rfind("model name", 0) == 0) {
                const auto colon = line.find(':');
                if (colon != std::string::npos) {
                    auto v = line.substr(colon + 1);
                    v.erase(0, v.find_first_not_of(' '));
                    return v;
                }
            }
        }
    }
    return "unknown";
}

/// Process-wide backend stall-cycle counter that follows threads created
/// after it is opened.
class StallCounter {
public:
    StallCounter() {
        perf_event_attr attr;
        std::memset(&attr, 0, sizeof(attr));
        attr.size = sizeof(attr);
        attr.type = PERF_TYPE_HARDWARE;
        attr.config = PERF_COUNT_HW_STALLED_CYCLES_BACKEND;
        attr.disabled = 1;
        attr.inherit = 1;
        attr.exclude_kernel = 1;
        attr.exclude_hv = 1;
        fd_ = static_cast<int>(syscall(SYS_perf_event_open, &attr, 0, -1, -1, 0));
    }
    StallCounter(const StallCounter&) = delete;
    StallCounter& operator=(const StallCounter&) = delete;
    ~StallCounter() {
        if (fd_ >= 0) close(fd_);
    }

    bool ok() const { return fd_ >= 0; }

    void start() {
        ioctl_(PERF_EVENT_IOC_RESET);
        ioctl_(PERF_EVENT_IOC_ENABLE);
    }

    std::uint64_t stop() {
        ioctl_(PERF_EVENT_IOC_DISABLE);
        std::uint64_t value = 0;
        if (fd_ < 0 || ::read(fd_, &value, sizeof(value)) != sizeof(value)) return 0;
        return value;
    }

private:
    void ioctl_(unsigned long req) {
        if (fd_ >= 0) ::ioctl(fd_, req, 0);
    }
    int fd_ = -1;
};

} // namespace os

class SamplerSession {
public:
    virtual ~SamplerSession() = default;
    /// Called once, after the task finished, with the measured wall time.
    virtual Components finish(double wall_ms) = 0;
};

/// Pluggable attribution of wall time to CPU, I/O wait and memory stall.
class SamplerBackend {
public:
    virtual ~SamplerBackend() = default;
    virtual std::string name() const = 0;
    virtual Capabilities capabilities() const = 0;
    /// Takes the "before" readings; the task runs between this call and
    /// SamplerSession::finish.
    virtual std::unique_ptr<SamplerSession> begin(const ProfileHints& hints) = 0;
};

enum class IoSource { none, delay_accounting, blocked_time };

inline std::string_view to_string(IoSource s) {
    switch (s) {
    case IoSource::none: return "none";
    case IoSource::delay_accounting: return "delay-accounting";
    case IoSource::blocked_time: return "blocked-time";
    }
    return "?";
}

/// Picks the best I/O wait source the host offers.
inline IoSource probe_io_source() {
    if (os::delay_accounting_enabled() && os::blkio_delay_ticks()) return IoSource::delay_accounting;
    if (os::thread_schedstat() && os::storage_bytes()) return IoSource::blocked_time;
    return IoSource::none;
}

/// Sustained per-core arithmetic rate (operations per CPU second) of a
/// register-resident multiply-add loop; best of several short probes so a
/// preempted probe does not lower the peak.
inline double calibrate_peak_ops_per_sec() {
    constexpr int lanes = 8;
    const double mul = 0.999999, add = 1e-7;
    double best = 0.0;
    double sink = 0.0;
    for (int probe = 0; probe < 5; ++probe) {
        double acc[lanes];
        for (int i = 0; i < lanes; ++i) acc[i] = 1.0 + i * 1e-3;
        std::uint64_t rounds = 0;
        const double t0 = os::thread_cpu_ms();
        double elapsed = 0.0;
        while (elapsed < 5.0) {
            for (int r = 0; r < 50'000; ++r) {
                for (int i = 0; i < lanes; ++i) acc[i] = acc[i] * mul + add;
            }
            rounds += 50'000;
            elapsed = os::thread_cpu_ms() - t0;
        }
        for (double v : acc) sink += v;
        best = std::max(best, static_cast<double>(rounds) * lanes * 2.0 / (elapsed * 1e-3));
    }
    // Keep the loop observable.
    volatile double keep = sink;
    (void)keep;
    return best;
}

/// Sampler built from OS interfaces. The memory source is either hardware
/// stall counters ("counter") or the derated-CPU residual ("residual").
class OsSampler final : public SamplerBackend {
public:
    enum class MemSource { counter, residual };

    OsSampler(MemSource mem, CapabilityMask mask = {}) : mem_(mem) {
        io_ = mask.io_wait ? IoSource::none : probe_io_source();
        if (mem_ == MemSource::counter) {
            clock_hz_ = os::nominal_clock_hz();
            mem_available_ = !mask.mem_stall && os::StallCounter().ok() && clock_hz_ > 0.0;
        } else {
            mem_available_ = !mask.mem_stall;
            if (mem_available_) {
                peak_ops_ = calibrate_peak_ops_per_sec();
                private_cache_ = os::private_cache_bytes();
            }
        }
    }

    std::string name() const override { return mem_ == MemSource::counter ? "counter" : "residual"; }

    Capabilities capabilities() const override {
        return Capabilities{true, io_ != IoSource::none, mem_available_};
    }

    IoSource io_source() const { return io_; }
    double peak_ops_per_sec() const { return peak_ops_; }

    std::unique_ptr<SamplerSession> begin(const ProfileHints& hints) override {
        return std::make_unique<Session>(*this, hints);
    }

private:
    class Session final : public SamplerSession {
    public:
        Session(const OsSampler& owner, const ProfileHints& hints) : owner_(owner), hints_(hints) {
            if (owner_.io_ == IoSource::delay_accounting) {
                blkio0_ = os::blkio_delay_ticks().value_or(0);
            } else if (owner_.io_ == IoSource::blocked_time) {
                sched0_ = os::thread_schedstat().value_or(os::SchedStat{});
                bytes0_ = os::storage_bytes().value_or(0);
            }
            if (owner_.mem_ == MemSource::counter && owner_.mem_available_) {
                counter_ = std::make_unique<os::StallCounter>();
                counter_->start();
            }
            cpu0_ = os::process_cpu_ms();
        }

        Components finish(double wall_ms) override {
            Components c;
            c.cpu_ms = std::max(0.0, os::process_cpu_ms() - cpu0_);
            c.cpu_for_pct_ms = c.cpu_ms;
            std::uint64_t stalls = counter_ ? counter_->stop() : 0;
            const unsigned threads = std::max(1u, hints_.threads);

            if (owner_.io_ == IoSource::delay_accounting) {
                const auto ticks = os::blkio_delay_ticks().value_or(blkio0_) - blkio0_;
                c.io_ms = static_cast<double>(ticks) * 1e3 / static_cast<double>(sysconf(_SC_CLK_TCK));
            } else if (owner_.io_ == IoSource::blocked_time) {
                const auto bytes = os::storage_bytes().value_or(bytes0_) - bytes0_;
                const auto s1 = os::thread_schedstat().value_or(sched0_);
                if (bytes > 0) {
                    const double on_cpu_or_queued =
                        static_cast<double>((s1.run_ns - sched0_.run_ns) + (s1.wait_ns - sched0_.wait_ns)) * 1e-6;
                    c.io_ms = std::max(0.0, wall_ms - on_cpu_or_queued);
                }
            }

            if (owner_.mem_available_) {
                if (owner_.mem_ == MemSource::counter) {
                    const double stall_ms_total = static_cast<double>(stalls) / owner_.clock_hz_ * 1e3;
                    c.mem_ms = stall_ms_total / threads;
                    c.cpu_for_pct_ms = std::max(0.0, c.cpu_ms - stall_ms_total);
                } else {
                    double derate = 1.0;
                    const bool cache_resident =
                        hints_.working_set_bytes && *hints_.working_set_bytes <= owner_.private_cache_;
                    if (!cache_resident && hints_.work_ops && c.cpu_ms > 0.0 && owner_.peak_ops_ > 0.0) {
                        const double achieved = *hints_.work_ops / (c.cpu_ms * 1e-3);
                        derate = std::clamp(achieved / owner_.peak_ops_, 0.0, 1.0);
                    }
                    const double cpu_effective = c.cpu_ms / threads * derate;
                    c.mem_ms = std::max(0.0, wall_ms - cpu_effective - c.io_ms);
                }
            }
            return c;
        }

    private:
        const OsSampler& owner_;
        ProfileHints hints_;
        double cpu0_ = 0.0;
        std::uint64_t blkio0_ = 0;
        os::SchedStat sched0_{};
        std::uint64_t bytes0_ = 0;
        std::unique_ptr<os::StallCounter> counter_;
    };

    MemSource mem_;
    IoSource io_ = IoSource::none;
    bool mem_available_ = false;
    double clock_hz_ = 0.0;
    double peak_ops_ = 0.0;
    std::uint64_t private_cache_ = 0;
};

/// "counter", "residual", or "auto" (counter when the host has stall
/// counters, residual otherwise).
inline std::unique_ptr<SamplerBackend> make_backend(std::string_view name, CapabilityMask mask = {}) {
    if (name == "counter") return std::make_unique<OsSampler>(OsSampler::MemSource::counter, mask);
    if (name == "residual") return std::make_unique<OsSampler>(OsSampler::MemSource::residual, mask);
    if (name == "auto") {
        auto counter = std::make_unique<OsSampler>(OsSampler::MemSource::counter, mask);
        if (counter->capabilities().mem_stall) return counter;
        return std::make_unique<OsSampler>(OsSampler::MemSource::residual, mask);
    }
    throw Error(ErrorKind::configuration, "unknown sampler backend '" + std::string(name) + "'");
}

} // namespace dwarfeval::profiler
