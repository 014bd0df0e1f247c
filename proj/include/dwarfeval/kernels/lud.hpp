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

/// Dense square matrix, row-major.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(std::size_t n) : n_(n), elements_(n * n, 0.0) {
        if (n == 0) throw Error(ErrorKind::invalid_size, "matrix order must be positive");
    }
    Matrix(std::size_t n, std::vector<double> elements) : n_(n), elements_(std::move(elements)) {
        if (n == 0) throw Error(ErrorKind::invalid_size, "matrix order must be positive");
        if (elements_.size() != n * n)
            throw Error(ErrorKind::invalid_size, "element count does not equal n*n");
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t order() const { return n_; }
    double& operator()(std::size_t r, std::size_t c) { return elements_[r * n_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return elements_[r * n_ + c]; }

    std::span<double> row(std::size_t r) { return {elements_.data() + r * n_, n_}; }
    std::span<const double> row(std::size_t r) const { return {elements_.data() + r * n_, n_}; }

    std::span<const double> elements() const { return elements_; }

    double max_abs() const {
        double m = 0.0;
        for (double v : elements_) m = std::max(m, std::abs(v));
        return m;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<double> elements_;
};

/// Strictly diagonally dominant matrix: off-diagonals uniform in [-1, 1],
/// diagonal = 1 + row sum of absolute off-diagonals. Every leading
/// principal minor of such a matrix is nonzero.
inline Matrix generate_matrix(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw Error(ErrorKind::invalid_size, "matrix order must be positive");
    Matrix m(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        double off = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double v = rng.uniform(-1.0, 1.0);
            m(i, j) = v;
            off += std::abs(v);
        }
        m(i, i) = 1.0 + off;
    }
    return m;
}

struct LuFactors {
    Matrix lower; // unit diagonal
    Matrix upper;
};

/// Reconstruction tolerance for an order-n factorization of `a`:
/// n * eps * max|A| * 64.
inline double lu_tolerance(const Matrix& a) {
    return static_cast<double>(a.order()) * std::numeric_limits<double>::epsilon() * a.max_abs() * 64.0;
}

/// Unblocked right-looking Doolittle elimination, no pivoting. Kept as the
/// reference the blocked factorization must match bit for bit.
inline void lud_in_place_unblocked(Matrix& a) {
    const std::size_t n = a.order();
    for (std::size_t k = 0; k < n; ++k) {
        const double pivot = a(k, k);
        if (pivot == 0.0) throw SingularMatrixError(k);
        const auto pivot_row = a.row(k);
        for (std::size_t i = k + 1; i < n; ++i) {
            auto row = a.row(i);
            const double l = row[k] / pivot;
            row[k] = l;
            for (std::size_t j = k + 1; j < n; ++j) row[j] -= l * pivot_row[j];
        }
    }
}

inline constexpr std::size_t lud_block = 64;

/// Factorizes `a` in place (Doolittle, blocked right-looking, no pivoting).
/// On return the strict lower triangle holds L's multipliers and the upper
/// triangle holds U. Each element receives its updates in ascending pivot
/// order exactly as in the unblocked loop, so the result is bitwise equal
/// to it for every thread count.
inline void lud_in_place(Matrix& a, ParallelConfig par) {
    const std::size_t n = a.order();
    if (par.threads == 0) throw Error(ErrorKind::invalid_input, "thread count must be positive");
    constexpr std::size_t bs = lud_block;
    constexpr std::size_t row_tile = 8;
    constexpr std::size_t col_tile = 256;

    auto body = [&](unsigned rank, unsigned team, auto&& sync) {
        for (std::size_t kb = 0; kb < n; kb += bs) {
            const std::size_t e = std::min(kb + bs, n);
            // Panel: columns kb..e of every row below the pivot.
            for (std::size_t k = kb; k < e; ++k) {
                const double pivot = a(k, k);
                if (pivot == 0.0) {
                    if (rank == 0) throw SingularMatrixError(k);
                    return;
                }
                const auto pivot_row = a.row(k);
                for (std::size_t i = k + 1 + rank; i < n; i += team) {
                    auto row = a.row(i);
                    const double l = row[k] / pivot;
                    row[k] = l;
                    for (std::size_t j = k + 1; j < e; ++j) row[j] -= l * pivot_row[j];
                }
                sync();
            }
            if (e == n) break;
            // Block row of U right of the panel, split by column tiles.
            const std::size_t width = n - e;
            for (std::size_t jt = rank * col_tile; jt < width; jt += team * col_tile) {
                const std::size_t j0 = e + jt, j1 = std::min(j0 + col_tile, n);
                for (std::size_t p = kb + 1; p < e; ++p) {
                    auto row = a.row(p);
                    for (std::size_t q = kb; q < p; ++q) {
                        const double l = row[q];
                        const auto u = a.row(q);
                        for (std::size_t j = j0; j < j1; ++j) row[j] -= l * u[j];
                    }
                }
            }
            sync();
            // Trailing update, row tiles dealt cyclically.
            for (std::size_t it = e + rank * row_tile; it < n; it += team * row_tile) {
                const std::size_t i1 = std::min(it + row_tile, n);
                for (std::size_t j0 = e; j0 < n; j0 += col_tile) {
                    const std::size_t j1 = std::min(j0 + col_tile, n);
                    for (std::size_t i = it; i < i1; ++i) {
                        auto row = a.row(i);
                        for (std::size_t p = kb; p < e; ++p) {
                            const double l = row[p];
                            const auto u = a.row(p);
                            for (std::size_t j = j0; j < j1; ++j) row[j] -= l * u[j];
                        }
                    }
                }
            }
            sync();
        }
    };

    if (par.threads == 1) {
        body(0, 1, [] {});
        return;
    }
    run_team(par, [&](unsigned rank, auto& barrier) { body(rank, par.threads, [&] { barrier.arrive_and_wait(); }); });
}

/// LU factorization without pivoting. Throws SingularMatrixError naming
/// the first zero pivot.
inline LuFactors lud(const Matrix& a, ParallelConfig par) {
    Matrix work = a;
    lud_in_place(work, par);

    const std::size_t n = a.order();
    LuFactors f{Matrix(n), Matrix(n)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j < i) {
                f.lower(i, j) = work(i, j);
            } else {
                f.upper(i, j) = work(i, j);
            }
        }
        f.lower(i, i) = 1.0;
    }
    return f;
}

inline Matrix multiply(const Matrix& x, const Matrix& y) {
    const std::size_t n = x.order();
    if (y.order() != n) throw Error(ErrorKind::invalid_size, "matrix order mismatch");
    Matrix out(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto orow = out.row(i);
        for (std::size_t k = 0; k < n; ++k) {
            const double xik = x(i, k);
            if (xik == 0.0) continue;
            const auto yrow = y.row(k);
            for (std::size_t j = 0; j < n; ++j) orow[j] += xik * yrow[j];
        }
    }
    return out;
}

/// max |A - L*U| over all elements.
inline double reconstruction_residual(const Matrix& a, const LuFactors& f) {
    const Matrix prod = multiply(f.lower, f.upper);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.elements().size(); ++i)
        worst = std::max(worst, std::abs(a.elements()[i] - prod.elements()[i]));
    return worst;
}

/// O(n^2) randomized residual probe: max_i |(A x - L (U x))_i| for x with
/// entries in [-1, 1]. Bounded by n * max|A - LU| for any such x.
inline double probe_residual(const Matrix& a, const LuFactors& f, std::uint64_t seed) {
    const std::size_t n = a.order();
    Rng rng(seed);
    std::vector<double> x(n), ux(n, 0.0);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = i; j < n; ++j) s += f.upper(i, j) * x[j];
        ux[i] = s;
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double lux = ux[i];
        for (std::size_t j = 0; j < i; ++j) lux += f.lower(i, j) * ux[j];
        double ax = 0.0;
        for (std::size_t j = 0; j < n; ++j) ax += a(i, j) * x[j];
        worst = std::max(worst, std::abs(ax - lux));
    }
    return worst;
}

} // namespace dwarfeval::kernels
