#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dwarfeval/types.hpp"

namespace dwarfeval::harness {

/// A named, ascending size list for one kernel.
struct Preset {
    std::string name;
    Kernel kernel;
    std::vector<std::uint64_t> sizes;
    /// Sizes not taken from published measurements but filled in between them.
    std::vector<std::uint64_t> interpolated;
    std::string description;
};

namespace detail {

inline std::vector<std::uint64_t> linear(std::uint64_t lo, std::uint64_t hi, std::size_t count, std::uint64_t round_to) {
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double x = static_cast<double>(lo) +
                         static_cast<double>(hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        out.push_back(static_cast<std::uint64_t>(std::llround(x / static_cast<double>(round_to))) * round_to);
    }
    return out;
}

inline std::vector<std::uint64_t> interior(const std::vector<std::uint64_t>& sizes) {
    return {sizes.begin() + 1, sizes.end() - 1};
}

} // namespace detail

inline const std::vector<Preset>& presets() {
    static const std::vector<Preset> all = [] {
        std::vector<Preset> v;
        v.push_back({"lud-desk", Kernel::lud, {64, 128, 256, 512, 768, 1024, 1536, 2048, 3072, 4096}, {},
                     "LUD, matrix orders 64..4096"});
        // Published orders: 2048, 16384, 18432, 28672, 32768; the rest fill the gaps.
        v.push_back({"lud-full",
                     Kernel::lud,
                     {2048, 4096, 6144, 8192, 12288, 16384, 18432, 24576, 28672, 32768},
                     {4096, 6144, 8192, 12288, 24576},
                     "LUD, ten matrix orders 2048..32768"});
        v.push_back({"kmeans-desk", Kernel::kmeans, {10'000, 20'000, 50'000, 100'000, 200'000, 500'000, 1'000'000}, {},
                     "Kmeans, 1e4..1e6 objects"});
        {
            auto sizes = detail::linear(1'638'400, 9'830'400, 13, 1);
            v.push_back({"kmeans-full", Kernel::kmeans, sizes, detail::interior(sizes),
                         "Kmeans, thirteen object counts 1638400..9830400"});
        }
        v.push_back({"bptree-desk", Kernel::bptree,
                     {100'000, 200'000, 500'000, 1'000'000, 2'000'000, 5'000'000, 10'000'000}, {},
                     "B+Tree, 1e5..1e7 keys"});
        {
            auto sizes = detail::linear(2'000'000, 50'000'000, 10, 1000);
            v.push_back({"bptree-full", Kernel::bptree, sizes, detail::interior(sizes),
                         "B+Tree, ten key counts 2M..50M"});
        }
        return v;
    }();
    return all;
}

inline const Preset* find_preset(std::string_view name) {
    for (const auto& p : presets()) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

} // namespace dwarfeval::harness
