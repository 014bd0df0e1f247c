#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <variant>

#include "dwarfeval/kernels/bptree.hpp"
#include "dwarfeval/kernels/kmeans.hpp"
#include "dwarfeval/kernels/lud.hpp"
#include "dwarfeval/types.hpp"

namespace dwarfeval::kernels {

/// Outcome of the once-per-point correctness check.
struct Verification {
    bool ok = false;
    std::string detail;
    std::uint64_t checksum = 0;
};

inline std::string hex_checksum(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Bytes a workload needs while its kernel runs (inputs plus outputs).
inline std::uint64_t estimated_bytes(const WorkloadSpec& spec) {
    const std::uint64_t s = spec.size;
    switch (spec.kernel) {
    case Kernel::lud: return 4 * s * s * sizeof(double); // input, working copy, L, U
    case Kernel::kmeans: return s * spec.dims * sizeof(double) + 2 * s * sizeof(std::uint32_t);
    case Kernel::bptree: return 3 * s * sizeof(Key) + s / 2 * 64 + spec.queries * sizeof(Key);
    }
    return 0;
}

/// Bytes the kernel touches repeatedly while it runs.
inline std::uint64_t working_set_bytes(const WorkloadSpec& spec) {
    const std::uint64_t s = spec.size;
    switch (spec.kernel) {
    case Kernel::lud: return s * s * sizeof(double);
    case Kernel::kmeans: return s * spec.dims * sizeof(double);
    case Kernel::bptree: return estimated_bytes(spec);
    }
    return 0;
}

/// Inputs generated once per sweep point; `run` executes the kernel on them
/// and may be called repeatedly.
class PreparedWorkload {
public:
    explicit PreparedWorkload(const WorkloadSpec& spec) : spec_(spec) {
        spec.validate();
        switch (spec.kernel) {
        case Kernel::lud: data_ = generate_matrix(spec.size, spec.seed); break;
        case Kernel::kmeans: {
            auto pts = generate_points(spec.size, spec.dims, spec.k, spec.seed);
            auto init = first_k_centers(pts, spec.k);
            data_ = KmeansInput{std::move(pts), std::move(init)};
            break;
        }
        case Kernel::bptree: data_ = generate_keys(spec.size, spec.queries, spec.seed); break;
        }
    }

    const WorkloadSpec& spec() const { return spec_; }

    /// Executes the kernel once and returns a checksum of its output.
    std::uint64_t run(ParallelConfig par) const {
        switch (spec_.kernel) {
        case Kernel::lud: return checksum(lud(std::get<Matrix>(data_), par));
        case Kernel::kmeans: {
            const auto& in = std::get<KmeansInput>(data_);
            return checksum(kmeans(in.points, spec_.k, in.initial, spec_.max_iter, par));
        }
        case Kernel::bptree: {
            const auto& in = std::get<KeyQuerySet>(data_);
            const auto tree = bptree_build(in.keys, spec_.order);
            return checksum(tree, bptree_search(tree, in.queries, par));
        }
        }
        return 0;
    }

    /// Runs the kernel once and checks its output: LU residual probe,
    /// Kmeans fixed point, or B+Tree invariants plus the expected hit count.
    Verification verify(ParallelConfig par) {
        Verification v;
        switch (spec_.kernel) {
        case Kernel::lud: {
            const auto& a = std::get<Matrix>(data_);
            LuFactors f;
            try {
                f = lud(a, par);
            } catch (const SingularMatrixError& e) {
                v.detail = e.what();
                return v;
            }
            const double bound = static_cast<double>(a.order()) * lu_tolerance(a);
            const double r = probe_residual(a, f, spec_.seed ^ 0x5eedULL);
            v.ok = r <= bound;
            v.detail = "probe residual " + std::to_string(r) + " (bound " + std::to_string(bound) + ")";
            v.checksum = checksum(f);
            work_ops_ = 2.0 * std::pow(static_cast<double>(a.order()), 3) / 3.0;
            break;
        }
        case Kernel::kmeans: {
            const auto& in = std::get<KmeansInput>(data_);
            const auto r = kmeans(in.points, spec_.k, in.initial, spec_.max_iter, par);
            v.ok = kmeans_is_fixed_point(in.points, r);
            v.detail = "iterations " + std::to_string(r.iterations) + (v.ok ? ", fixed point" : ", not a fixed point");
            v.checksum = checksum(r);
            // Distance evaluations: one initial assignment plus one per round.
            work_ops_ = 3.0 * static_cast<double>(spec_.size) * spec_.k * spec_.dims *
                        static_cast<double>(r.iterations + 1);
            break;
        }
        case Kernel::bptree: {
            const auto& in = std::get<KeyQuerySet>(data_);
            const auto tree = bptree_build(in.keys, spec_.order);
            const auto report = validate_bptree(tree);
            const auto hits = bptree_search(tree, in.queries, par);
            v.ok = report.ok && hits == in.present;
            v.detail = report.ok ? "hits " + std::to_string(hits) + " of expected " + std::to_string(in.present)
                                 : report.message;
            v.checksum = checksum(tree, hits);
            const double depth = static_cast<double>(tree.height());
            work_ops_ = static_cast<double>(in.keys.size()) +
                        static_cast<double>(in.queries.size()) * depth * std::log2(static_cast<double>(spec_.order));
            break;
        }
        }
        return v;
    }

    /// Arithmetic operation estimate for one run; known after verify().
    std::optional<double> work_ops() const { return work_ops_; }

private:
    struct KmeansInput {
        PointSet points;
        PointSet initial;
    };

    static std::uint64_t checksum(const LuFactors& f) {
        Fnv1a h;
        h.update(f.lower.elements().data(), f.lower.elements().size_bytes());
        h.update(f.upper.elements().data(), f.upper.elements().size_bytes());
        return h.digest();
    }

    static std::uint64_t checksum(const BPTree& t, std::size_t hits) {
        Fnv1a h;
        h.update_value(hits);
        h.update_value(t.height());
        for (const auto& n : t.nodes()) h.update(n.keys.data(), n.keys.size() * sizeof(Key));
        return h.digest();
    }

    static std::uint64_t checksum(const KmeansResult& r) {
        Fnv1a h;
        h.update(r.centers.coords.data(), r.centers.coords.size() * sizeof(double));
        h.update(r.assignments.data(), r.assignments.size() * sizeof(std::uint32_t));
        h.update_value(r.iterations);
        return h.digest();
    }

    WorkloadSpec spec_;
    std::variant<Matrix, KmeansInput, KeyQuerySet> data_;
    std::optional<double> work_ops_;
};

} // namespace dwarfeval::kernels
