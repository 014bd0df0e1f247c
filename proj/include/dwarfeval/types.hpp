#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "dwarfeval/error.hpp"

namespace dwarfeval {

enum class Kernel { lud, kmeans, bptree };
enum class Dwarf { dla, gt };

inline std::string_view to_string(Kernel k) {
    switch (k) {
    case Kernel::lud: return "LUD";
    case Kernel::kmeans: return "KMEANS";
    case Kernel::bptree: return "BPTREE";
    }
    return "?";
}

inline std::string_view to_string(Dwarf d) {
    switch (d) {
    case Dwarf::dla: return "DLA";
    case Dwarf::gt: return "GT";
    }
    return "?";
}

namespace detail {
inline std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    }
    return out;
}
} // namespace detail

inline std::optional<Kernel> parse_kernel(std::string_view s) {
    const std::string u = detail::upper(s);
    if (u == "LUD") return Kernel::lud;
    if (u == "KMEANS") return Kernel::kmeans;
    if (u == "BPTREE" || u == "B+TREE") return Kernel::bptree;
    return std::nullopt;
}

inline std::optional<Dwarf> parse_dwarf(std::string_view s) {
    const std::string u = detail::upper(s);
    if (u == "DLA") return Dwarf::dla;
    if (u == "GT") return Dwarf::gt;
    return std::nullopt;
}

/// Dwarf class each kernel belongs to.
constexpr Dwarf dwarf_of(Kernel k) {
    return k == Kernel::bptree ? Dwarf::gt : Dwarf::dla;
}

/// One sweep point: kernel identity, problem size and generation seed.
///
/// `size` is the kernel's primary dimension (matrix order, object count or
/// key count) and orders points within a series.
struct WorkloadSpec {
    Kernel kernel = Kernel::lud;
    std::uint64_t size = 0;
    std::uint64_t seed = 1;

    // Kmeans
    std::uint32_t dims = 34;
    std::uint32_t k = 5;
    std::uint32_t max_iter = 500;

    // B+Tree
    std::uint32_t order = 64;
    std::uint64_t queries = 1'000'000;

    Dwarf dwarf() const { return dwarf_of(kernel); }

    void validate() const {
        if (size == 0) throw Error(ErrorKind::invalid_size, "workload size must be positive");
        if (kernel == Kernel::kmeans) {
            if (dims == 0 || k == 0 || max_iter == 0)
                throw Error(ErrorKind::invalid_size, "kmeans dims, k and max_iter must be positive");
            if (k > size) throw Error(ErrorKind::invalid_size, "kmeans k exceeds object count");
        }
        if (kernel == Kernel::bptree && order < 3)
            throw Error(ErrorKind::invalid_input, "B+Tree order must be at least 3");
    }

    friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

} // namespace dwarfeval
