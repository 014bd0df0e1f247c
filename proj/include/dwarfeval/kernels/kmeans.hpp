#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "dwarfeval/error.hpp"
#include "dwarfeval/parallel.hpp"
#include "dwarfeval/rng.hpp"

namespace dwarfeval::kernels {

/// `count` points in `dims` dimensions, stored point-major.
struct PointSet {
    std::size_t count = 0;
    std::size_t dims = 0;
    std::vector<double> coords;

    PointSet() = default;
    PointSet(std::size_t c, std::size_t d, std::vector<double> xs)
        : count(c), dims(d), coords(std::move(xs)) {
        if (c == 0 || d == 0) throw Error(ErrorKind::invalid_size, "point set needs count, dims >= 1");
        if (coords.size() != c * d) throw Error(ErrorKind::invalid_size, "coords length != count*dims");
        for (double v : coords) {
            if (!std::isfinite(v)) throw Error(ErrorKind::invalid_input, "point coordinates must be finite");
        }
    }

    std::span<const double> point(std::size_t i) const { return {coords.data() + i * dims, dims}; }
};

struct GeneratedPoints {
    PointSet points;
    PointSet centers;                 // generating centers, k_true of them
    std::vector<std::uint32_t> label; // generating center of each point
};

/// Points scattered (unit normal noise) around `k_true` centers that are at
/// least 20 units apart. Point i is drawn around center i mod k_true, so
/// the first k_true points come from distinct clusters.
inline GeneratedPoints generate_points_labeled(std::size_t count, std::size_t dims, std::size_t k_true,
                                               std::uint64_t seed) {
    if (dims == 0 || k_true == 0) throw Error(ErrorKind::invalid_size, "dims and k_true must be positive");
    if (count < k_true) throw Error(ErrorKind::invalid_size, "count must be at least k_true");

    constexpr double min_separation = 20.0;
    const double half_width = min_separation * static_cast<double>(k_true);
    Rng rng(seed);

    std::vector<double> centers(k_true * dims);
    for (std::size_t c = 0; c < k_true; ++c) {
        std::span<double> mine(centers.data() + c * dims, dims);
        for (int attempt = 0;; ++attempt) {
            for (double& v : mine) v = rng.uniform(-half_width, half_width);
            bool separated = true;
            for (std::size_t o = 0; o < c && separated; ++o) {
                double d2 = 0.0;
                for (std::size_t j = 0; j < dims; ++j) {
                    const double diff = mine[j] - centers[o * dims + j];
                    d2 += diff * diff;
                }
                separated = d2 >= min_separation * min_separation;
            }
            if (separated) break;
            if (attempt > 10'000) {
                // Fallback placement on a line, still min_separation apart.
                std::fill(mine.begin(), mine.end(), 0.0);
                mine[0] = min_separation * static_cast<double>(c) * 2.0;
                break;
            }
        }
    }

    GeneratedPoints out;
    std::vector<double> coords(count * dims);
    out.label.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t c = i % k_true;
        out.label[i] = static_cast<std::uint32_t>(c);
        for (std::size_t j = 0; j < dims; ++j) coords[i * dims + j] = centers[c * dims + j] + rng.normal();
    }
    out.points = PointSet(count, dims, std::move(coords));
    out.centers = PointSet(k_true, dims, std::move(centers));
    return out;
}

inline PointSet generate_points(std::size_t count, std::size_t dims, std::size_t k_true, std::uint64_t seed) {
    return generate_points_labeled(count, dims, k_true, seed).points;
}

struct KmeansResult {
    PointSet centers;
    std::vector<std::uint32_t> assignments;
    std::size_t iterations = 0;
    /// Within-cluster sum of squares after the initial assignment and after
    /// each recompute-then-reassign round.
    std::vector<double> wcss_history;
};

/// Points per reduction block. Fixed so that the summation order, and
/// therefore every floating-point result, is independent of thread count.
inline constexpr std::size_t kmeans_block = 4096;

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

/// Nearest center under squared Euclidean distance; ties go to the lower index.
inline std::uint32_t nearest(std::span<const double> p, const PointSet& centers, double& best_d2) {
    std::uint32_t best = 0;
    best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.count; ++c) {
        const double d2 = squared_distance(p, centers.point(c));
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<std::uint32_t>(c);
        }
    }
    return best;
}

} // namespace detail

/// Assigns every point to its nearest center. Returns (changes, wcss).
inline std::pair<std::size_t, double> kmeans_assign(const PointSet& p, const PointSet& centers,
                                                    std::vector<std::uint32_t>& assignments,
                                                    ParallelConfig par) {
    const std::size_t blocks = (p.count + kmeans_block - 1) / kmeans_block;
    std::vector<std::size_t> changes(blocks, 0);
    std::vector<double> wcss(blocks, 0.0);
    parallel_blocks(par, blocks, [&](std::size_t b) {
        const std::size_t lo = b * kmeans_block;
        const std::size_t hi = std::min(p.count, lo + kmeans_block);
        for (std::size_t i = lo; i < hi; ++i) {
            double d2;
            const auto c = detail::nearest(p.point(i), centers, d2);
            if (assignments[i] != c) {
                assignments[i] = c;
                ++changes[b];
            }
            wcss[b] += d2;
        }
    });
    std::size_t total = 0;
    double sum = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        total += changes[b];
        sum += wcss[b];
    }
    return {total, sum};
}

/// Cluster means; a cluster left empty keeps its previous center.
inline PointSet kmeans_recompute(const PointSet& p, const PointSet& previous,
                                 const std::vector<std::uint32_t>& assignments, ParallelConfig par) {
    const std::size_t k = previous.count;
    const std::size_t d = p.dims;
    const std::size_t blocks = (p.count + kmeans_block - 1) / kmeans_block;
    std::vector<double> sums(blocks * k * d, 0.0);
    std::vector<std::size_t> counts(blocks * k, 0);
    parallel_blocks(par, blocks, [&](std::size_t b) {
        const std::size_t lo = b * kmeans_block;
        const std::size_t hi = std::min(p.count, lo + kmeans_block);
        double* bsum = sums.data() + b * k * d;
        std::size_t* bcount = counts.data() + b * k;
        for (std::size_t i = lo; i < hi; ++i) {
            const auto c = assignments[i];
            const auto x = p.point(i);
            for (std::size_t j = 0; j < d; ++j) bsum[c * d + j] += x[j];
            ++bcount[c];
        }
    });

    std::vector<double> total(k * d, 0.0);
    std::vector<std::size_t> n(k, 0);
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t x = 0; x < k * d; ++x) total[x] += sums[b * k * d + x];
        for (std::size_t c = 0; c < k; ++c) n[c] += counts[b * k + c];
    }
    std::vector<double> centers(previous.coords);
    for (std::size_t c = 0; c < k; ++c) {
        if (n[c] == 0) continue;
        for (std::size_t j = 0; j < d; ++j)
            centers[c * d + j] = total[c * d + j] / static_cast<double>(n[c]);
    }
    return PointSet(k, d, std::move(centers));
}

/// Lloyd iteration: assign to the initial centers, then alternate
/// recompute/reassign until no assignment changes or `max_iter` recompute
/// rounds have run.
inline KmeansResult kmeans(const PointSet& p, std::size_t k, const PointSet& initial_centers,
                           std::size_t max_iter, ParallelConfig par) {
    if (k == 0 || k > p.count) throw Error(ErrorKind::invalid_size, "k must be in [1, count]");
    if (initial_centers.count != k || initial_centers.dims != p.dims)
        throw Error(ErrorKind::invalid_input, "initial centers must be k points of matching dims");
    if (max_iter == 0) throw Error(ErrorKind::invalid_input, "max_iter must be positive");

    KmeansResult r;
    r.centers = initial_centers;
    r.assignments.assign(p.count, std::numeric_limits<std::uint32_t>::max());
    r.wcss_history.push_back(kmeans_assign(p, r.centers, r.assignments, par).second);

    while (r.iterations < max_iter) {
        r.centers = kmeans_recompute(p, r.centers, r.assignments, par);
        ++r.iterations;
        const auto [changes, wcss] = kmeans_assign(p, r.centers, r.assignments, par);
        r.wcss_history.push_back(wcss);
        if (changes == 0) break;
    }
    // Centers must describe the final assignment even when max_iter cut the loop.
    if (r.iterations == max_iter) r.centers = kmeans_recompute(p, r.centers, r.assignments, par);
    return r;
}

/// First k points as initial centers.
inline PointSet first_k_centers(const PointSet& p, std::size_t k) {
    if (k == 0 || k > p.count) throw Error(ErrorKind::invalid_size, "k must be in [1, count]");
    return PointSet(k, p.dims, std::vector<double>(p.coords.begin(), p.coords.begin() + k * p.dims));
}

/// True when reassigning to `r.centers` changes nothing and each center
/// equals the mean of its points (within `rel_tol` of the coordinate scale).
inline bool kmeans_is_fixed_point(const PointSet& p, const KmeansResult& r, double rel_tol = 1e-9) {
    auto assignments = r.assignments;
    if (kmeans_assign(p, r.centers, assignments, 1).first != 0) return false;
    const PointSet means = kmeans_recompute(p, r.centers, r.assignments, 1);
    for (std::size_t x = 0; x < means.coords.size(); ++x) {
        const double scale = std::max(1.0, std::abs(means.coords[x]));
        if (std::abs(means.coords[x] - r.centers.coords[x]) > rel_tol * scale) return false;
    }
    return true;
}

} // namespace dwarfeval::kernels
