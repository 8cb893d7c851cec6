#pragma once

// Band-diagonal matrices in row-compressed storage with a partially pivoted
// band LU (the classic bandec/banbks scheme): factor once, solve many times.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kerrwig/errors.hpp"

namespace kerrwig {

struct BandEntry {
    std::size_t row;
    std::size_t col;
    double value;
};

/// n x n matrix with m1 sub-diagonals and m2 super-diagonals. Row i stores
/// columns i - m1 .. i + m2 contiguously; slots whose column falls outside
/// [0, n) are structural zeros.
class CompressedBandMatrix {
public:
    CompressedBandMatrix() = default;

    CompressedBandMatrix(std::size_t n, std::size_t m1, std::size_t m2)
        : n_(n), m1_(m1), m2_(m2), data_(n * (m1 + m2 + 1), 0.0) {}

    std::size_t n() const noexcept { return n_; }
    std::size_t m1() const noexcept { return m1_; }
    std::size_t m2() const noexcept { return m2_; }
    std::size_t width() const noexcept { return m1_ + m2_ + 1; }

    bool in_band(std::size_t row, std::size_t col) const noexcept {
        return row < n_ && col < n_ && col + m1_ >= row && col <= row + m2_;
    }

    double get(std::size_t row, std::size_t col) const noexcept {
        return in_band(row, col) ? data_[slot(row, col)] : 0.0;
    }

    // Throws BandwidthViolation for entries outside the band.
    double& ref(std::size_t row, std::size_t col) {
        if (!in_band(row, col)) throw BandwidthViolation(static_cast<long>(row), static_cast<long>(col));
        return data_[slot(row, col)];
    }

    void add(std::size_t row, std::size_t col, double value) { ref(row, col) += value; }

    // Compressed row i: width() slots, slot k holds column i - m1 + k.
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * width(), width()}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * width(), width()}; }

    std::vector<double> to_dense() const {
        std::vector<double> dense(n_ * n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            auto [lo, hi] = column_range(i);
            for (std::size_t j = lo; j < hi; ++j) dense[i * n_ + j] = data_[slot(i, j)];
        }
        return dense;
    }

    // Columns [lo, hi) of row i that fall inside the matrix.
    std::pair<std::size_t, std::size_t> column_range(std::size_t i) const noexcept {
        std::size_t lo = i > m1_ ? i - m1_ : 0;
        std::size_t hi = std::min(n_, i + m2_ + 1);
        return {lo, hi};
    }

    // Hands the compressed storage to a factorization without copying it.
    std::vector<double> release_storage() && { return std::move(data_); }

    std::size_t nonzero_count() const noexcept {
        return static_cast<std::size_t>(std::count_if(data_.begin(), data_.end(), [](double v) { return v != 0.0; }));
    }

private:
    std::size_t slot(std::size_t row, std::size_t col) const noexcept { return row * width() + (col + m1_ - row); }

    std::size_t n_ = 0;
    std::size_t m1_ = 0;
    std::size_t m2_ = 0;
    std::vector<double> data_;
};

/// Builds a band matrix from triplets; duplicates accumulate.
inline CompressedBandMatrix band_from_entries(std::size_t n, std::size_t m1, std::size_t m2,
                                              std::span<const BandEntry> entries) {
    CompressedBandMatrix a(n, m1, m2);
    for (const auto& e : entries) {
        if (e.row >= n || e.col >= n || !a.in_band(e.row, e.col))
            throw BandwidthViolation(static_cast<long>(e.row), static_cast<long>(e.col));
        a.add(e.row, e.col, e.value);
    }
    return a;
}

inline CompressedBandMatrix band_from_entries(std::size_t n, std::size_t m1, std::size_t m2,
                                              std::initializer_list<BandEntry> entries) {
    return band_from_entries(n, m1, m2, std::span<const BandEntry>(entries.begin(), entries.size()));
}

/// y = A x using only the stored bands.
inline std::vector<double> band_matvec(const CompressedBandMatrix& a, std::span<const double> x) {
    if (x.size() != a.n())
        throw DimensionMismatch("band_matvec: vector has " + std::to_string(x.size()) + " entries, matrix is " +
                                std::to_string(a.n()));
    std::vector<double> y(a.n(), 0.0);
    for (std::size_t i = 0; i < a.n(); ++i) {
        auto [lo, hi] = a.column_range(i);
        auto row = a.row(i);
        std::size_t offset = lo + a.m1() - i;
        double sum = 0.0;
        for (std::size_t j = lo; j < hi; ++j) sum += row[offset + (j - lo)] * x[j];
        y[i] = sum;
    }
    return y;
}

enum class Pivoting {
    partial,  // row swaps inside the band; U widens to m1 + m2 + 1
    none      // Crout-style in-place elimination, no fill beyond the band
};

/// LU factors of a band matrix.
///
/// With partial pivoting U is kept left-justified: row i of `upper_` holds
/// U(i, i .. i + m1 + m2), `lower_` row k holds the multipliers used below
/// pivot k and `pivot_[k]` the row swapped into position k.
///
/// Without pivoting the factors overwrite the compressed rows in place
/// (multipliers in the sub-diagonal slots, U on and above the diagonal), so
/// the factorization needs no memory beyond the matrix itself.
class BandLU {
public:
    static constexpr double kPivotFloor = 1e-300;

    explicit BandLU(CompressedBandMatrix a, Pivoting mode = Pivoting::partial)
        : n_(a.n()), m1_(a.m1()), m2_(a.m2()), mode_(mode) {
        if (mode_ == Pivoting::partial)
            factor_partial(std::move(a));
        else
            factor_in_place(std::move(a));
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t m1() const noexcept { return m1_; }
    std::size_t m2() const noexcept { return m2_; }
    Pivoting mode() const noexcept { return mode_; }

    // Number of pivots that required a row swap.
    std::size_t swap_count() const noexcept {
        std::size_t c = 0;
        for (std::size_t k = 0; k < pivot_.size(); ++k) c += pivot_[k] != k;
        return c;
    }

    /// Solves A x = b in place: forward through L, then back through U.
    void solve_in_place(std::span<double> x) const {
        if (x.size() != n_)
            throw DimensionMismatch("band_solve: right-hand side has " + std::to_string(x.size()) +
                                    " entries, system is " + std::to_string(n_));
        if (mode_ == Pivoting::none) {
            solve_unpivoted(x);
            return;
        }
        const std::size_t w = m1_ + m2_ + 1;
        const std::size_t lw = std::max<std::size_t>(m1_, 1);
        std::size_t l = std::min(m1_, n_);
        for (std::size_t k = 0; k < n_; ++k) {
            if (pivot_[k] != k) std::swap(x[k], x[pivot_[k]]);
            if (l < n_) ++l;
            const double xk = x[k];
            if (xk == 0.0) continue;
            const double* mult = lower_.data() + k * lw;
            for (std::size_t j = k + 1; j < l; ++j) x[j] -= mult[j - k - 1] * xk;
        }
        std::size_t len = 1;
        for (std::size_t ii = n_; ii-- > 0;) {
            const double* ri = upper_.data() + ii * w;
            double sum = x[ii];
            for (std::size_t k = 1; k < len; ++k) sum -= ri[k] * x[ii + k];
            x[ii] = sum / ri[0];
            if (len < w) ++len;
        }
    }

    std::vector<double> solve(std::span<const double> b) const {
        std::vector<double> x(b.begin(), b.end());
        solve_in_place(x);
        return x;
    }

    /// Recomposes A x from the factors.
    std::vector<double> multiply(std::span<const double> x) const {
        if (x.size() != n_) throw DimensionMismatch("BandLU::multiply: dimension mismatch");
        return mode_ == Pivoting::none ? multiply_unpivoted(x) : multiply_partial(x);
    }

    std::vector<double> recompose_dense() const {
        std::vector<double> dense(n_ * n_, 0.0);
        std::vector<double> e(n_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            e[j] = 1.0;
            auto col = multiply(e);
            for (std::size_t i = 0; i < n_; ++i) dense[i * n_ + j] = col[i];
            e[j] = 0.0;
        }
        return dense;
    }

    // U(i, i + k); k may run up to m1 + m2 with pivoting, m2 without.
    double upper(std::size_t i, std::size_t k) const noexcept {
        const std::size_t w = m1_ + m2_ + 1;
        if (mode_ == Pivoting::none) return k <= m2_ && i + k < n_ ? upper_[i * w + m1_ + k] : 0.0;
        return upper_[i * w + k];
    }
    std::span<const std::size_t> pivots() const noexcept { return pivot_; }

private:
    void factor_partial(CompressedBandMatrix a) {
        const std::size_t w = m1_ + m2_ + 1;
        upper_ = std::move(a).release_storage();
        lower_.assign(n_ * std::max<std::size_t>(m1_, 1), 0.0);
        pivot_.assign(n_, 0);

        // Left-justify the first m1 rows (their leading slots are outside the matrix).
        for (std::size_t i = 0; i < std::min(m1_, n_); ++i) {
            double* ri = upper_.data() + i * w;
            std::size_t shift = m1_ - i;
            std::copy(ri + shift, ri + w, ri);
            std::fill(ri + (w - shift), ri + w, 0.0);
        }

        std::size_t l = std::min(m1_, n_);
        for (std::size_t k = 0; k < n_; ++k) {
            double* rk = upper_.data() + k * w;
            if (l < n_) ++l;
            std::size_t p = k;
            double big = std::abs(rk[0]);
            for (std::size_t j = k + 1; j < l; ++j) {
                double v = std::abs(upper_[j * w]);
                if (v > big) {
                    big = v;
                    p = j;
                }
            }
            pivot_[k] = p;
            if (!(big >= kPivotFloor))
                throw SingularMatrix("band LU: pivot " + std::to_string(k) + " has magnitude " + std::to_string(big));
            if (p != k) std::swap_ranges(rk, rk + w, upper_.data() + p * w);

            const double inv = 1.0 / rk[0];
            double* mult = lower_.data() + k * std::max<std::size_t>(m1_, 1);
            for (std::size_t i = k + 1; i < l; ++i) {
                double* ri = upper_.data() + i * w;
                const double factor = ri[0] * inv;
                mult[i - k - 1] = factor;
                if (factor != 0.0) {
                    for (std::size_t j = 1; j < w; ++j) ri[j - 1] = ri[j] - factor * rk[j];
                } else {
                    std::copy(ri + 1, ri + w, ri);
                }
                ri[w - 1] = 0.0;
            }
        }
    }

    void factor_in_place(CompressedBandMatrix a) {
        const std::size_t w = m1_ + m2_ + 1;
        upper_ = std::move(a).release_storage();
        pivot_.resize(n_);
        for (std::size_t k = 0; k < n_; ++k) pivot_[k] = k;
        for (std::size_t k = 0; k < n_; ++k) {
            const double* rk = upper_.data() + k * w + m1_;  // rk[t] = U(k, k + t)
            const double d = rk[0];
            if (!(std::abs(d) >= kPivotFloor))
                throw SingularMatrix("band LU: pivot " + std::to_string(k) + " has magnitude " +
                                     std::to_string(std::abs(d)));
            const double inv = 1.0 / d;
            const std::size_t last = std::min(n_ - 1, k + m1_);
            const std::size_t span = std::min(m2_, n_ - 1 - k);
            for (std::size_t i = k + 1; i <= last; ++i) {
                double* ri = upper_.data() + i * w + m1_ - (i - k);  // ri[t] = A(i, k + t)
                if (ri[0] == 0.0) continue;
                const double factor = ri[0] * inv;
                ri[0] = factor;
                for (std::size_t t = 1; t <= span; ++t) ri[t] -= factor * rk[t];
            }
        }
    }

    void solve_unpivoted(std::span<double> x) const {
        const std::size_t w = m1_ + m2_ + 1;
        for (std::size_t i = 1; i < n_; ++i) {
            const std::size_t lo = i > m1_ ? i - m1_ : 0;
            const double* ri = upper_.data() + i * w + m1_ - i;  // ri[c] = entry at column c
            double sum = x[i];
            for (std::size_t c = lo; c < i; ++c) sum -= ri[c] * x[c];
            x[i] = sum;
        }
        for (std::size_t i = n_; i-- > 0;) {
            const double* ri = upper_.data() + i * w + m1_;
            const std::size_t span = std::min(m2_, n_ - 1 - i);
            double sum = x[i];
            for (std::size_t t = 1; t <= span; ++t) sum -= ri[t] * x[i + t];
            x[i] = sum / ri[0];
        }
    }

    std::vector<double> multiply_unpivoted(std::span<const double> x) const {
        const std::size_t w = m1_ + m2_ + 1;
        std::vector<double> y(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const double* ri = upper_.data() + i * w + m1_;
            const std::size_t span = std::min(m2_, n_ - 1 - i);
            double sum = 0.0;
            for (std::size_t t = 0; t <= span; ++t) sum += ri[t] * x[i + t];
            y[i] = sum;
        }
        // y <- L y, working from the bottom so unmodified entries are read.
        for (std::size_t i = n_; i-- > 1;) {
            const std::size_t lo = i > m1_ ? i - m1_ : 0;
            const double* ri = upper_.data() + i * w + m1_ - i;
            double sum = y[i];
            for (std::size_t c = lo; c < i; ++c) sum += ri[c] * y[c];
            y[i] = sum;
        }
        return y;
    }

    std::vector<double> multiply_partial(std::span<const double> x) const {
        const std::size_t w = m1_ + m2_ + 1;
        const std::size_t lw = std::max<std::size_t>(m1_, 1);
        std::vector<double> y(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const double* ri = upper_.data() + i * w;
            double sum = 0.0;
            for (std::size_t k = 0; k < w && i + k < n_; ++k) sum += ri[k] * x[i + k];
            y[i] = sum;
        }
        for (std::size_t k = n_; k-- > 0;) {
            std::size_t l = std::min(n_, m1_ + k + 1);
            const double* mult = lower_.data() + k * lw;
            for (std::size_t j = k + 1; j < l; ++j) y[j] += mult[j - k - 1] * y[k];
            if (pivot_[k] != k) std::swap(y[k], y[pivot_[k]]);
        }
        return y;
    }

    std::size_t n_;
    std::size_t m1_;
    std::size_t m2_;
    Pivoting mode_;
    std::vector<double> upper_;
    std::vector<double> lower_;
    std::vector<std::size_t> pivot_;
};

inline BandLU band_lu_decompose(CompressedBandMatrix a, Pivoting mode = Pivoting::partial) {
    return BandLU(std::move(a), mode);
}

inline std::vector<double> band_solve(const BandLU& factors, std::span<const double> rhs) {
    return factors.solve(rhs);
}

}  // namespace kerrwig
