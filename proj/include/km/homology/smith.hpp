#pragma once

// Smith normal form over the integers with arbitrary-precision entries.

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "km/errors.hpp"

namespace km::homology {

using Integer = boost::multiprecision::cpp_int;

class IntMatrix {
public:
    IntMatrix() = default;
    IntMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
    IntMatrix(std::initializer_list<std::initializer_list<long long>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) throw ValidationError("ragged matrix literal");
            for (long long v : row) data_.emplace_back(v);
        }
    }

    static IntMatrix identity(std::size_t n) {
        IntMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Integer& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Integer& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    bool is_zero() const {
        return std::all_of(data_.begin(), data_.end(), [](const Integer& x) { return x == 0; });
    }

    friend bool operator==(const IntMatrix& a, const IntMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

    friend IntMatrix operator*(const IntMatrix& a, const IntMatrix& b) {
        if (a.cols_ != b.rows_) throw ValidationError("matrix product shape mismatch");
        IntMatrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const Integer& aik = a(i, k);
                if (aik == 0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j)
                    if (b(k, j) != 0) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    // Row and column operations used by the elimination.
    void swap_rows(std::size_t a, std::size_t b) {
        if (a == b) return;
        for (std::size_t j = 0; j < cols_; ++j) std::swap((*this)(a, j), (*this)(b, j));
    }
    void swap_cols(std::size_t a, std::size_t b) {
        if (a == b) return;
        for (std::size_t i = 0; i < rows_; ++i) std::swap((*this)(i, a), (*this)(i, b));
    }
    // row[dst] += f * row[src]
    void add_row(std::size_t dst, std::size_t src, const Integer& f) {
        if (f == 0) return;
        for (std::size_t j = 0; j < cols_; ++j)
            if ((*this)(src, j) != 0) (*this)(dst, j) += f * (*this)(src, j);
    }
    // col[dst] += f * col[src]
    void add_col(std::size_t dst, std::size_t src, const Integer& f) {
        if (f == 0) return;
        for (std::size_t i = 0; i < rows_; ++i)
            if ((*this)(i, src) != 0) (*this)(i, dst) += f * (*this)(i, src);
    }
    void negate_row(std::size_t r) {
        for (std::size_t j = 0; j < cols_; ++j) (*this)(r, j) = -(*this)(r, j);
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Integer> data_;
};

// U * A * V = D with U, V unimodular and D diagonal with
// factors d_1 | d_2 | ... | d_r (all positive), r = rank A.
struct SmithForm {
    std::vector<Integer> factors;
    IntMatrix U, V, D;
    std::size_t rank() const { return factors.size(); }
};

namespace detail {

// Position of the nonzero entry of least magnitude in the block [t.., t..].
inline bool min_entry(const IntMatrix& a, std::size_t t, std::size_t& pi, std::size_t& pj) {
    bool found = false;
    Integer best;
    for (std::size_t i = t; i < a.rows(); ++i)
        for (std::size_t j = t; j < a.cols(); ++j) {
            const Integer& x = a(i, j);
            if (x == 0) continue;
            const Integer ax = abs(x);
            if (!found || ax < best) {
                found = true;
                best = ax;
                pi = i;
                pj = j;
                if (best == 1) return true;
            }
        }
    return found;
}

}  // namespace detail

inline SmithForm smith_normal_form(const IntMatrix& a, bool with_transforms = true) {
    SmithForm out;
    IntMatrix d = a;
    const std::size_t m = a.rows(), n = a.cols();
    IntMatrix u = with_transforms ? IntMatrix::identity(m) : IntMatrix();
    IntMatrix v = with_transforms ? IntMatrix::identity(n) : IntMatrix();
    auto swap_rows = [&](std::size_t x, std::size_t y) {
        d.swap_rows(x, y);
        if (with_transforms) u.swap_rows(x, y);
    };
    auto swap_cols = [&](std::size_t x, std::size_t y) {
        d.swap_cols(x, y);
        if (with_transforms) v.swap_cols(x, y);
    };
    auto add_row = [&](std::size_t dst, std::size_t src, const Integer& f) {
        d.add_row(dst, src, f);
        if (with_transforms) u.add_row(dst, src, f);
    };
    auto add_col = [&](std::size_t dst, std::size_t src, const Integer& f) {
        d.add_col(dst, src, f);
        if (with_transforms) v.add_col(dst, src, f);
    };

    // Quotient rounded to nearest, so remainders satisfy |r| <= |p|/2.
    auto nearest = [](const Integer& x, const Integer& p) {
        Integer q = x / p;
        const Integer r = x - q * p;
        if (2 * abs(r) > abs(p)) q += (r < 0) == (p < 0) ? 1 : -1;
        return q;
    };

    const std::size_t lim = std::min(m, n);
    for (std::size_t t = 0; t < lim; ++t) {
        bool any = false;
        for (;;) {
            // Smallest entry of the remaining block becomes the pivot; every
            // pass that does not finish strictly shrinks it.
            std::size_t pi = 0, pj = 0;
            if (!detail::min_entry(d, t, pi, pj)) break;
            any = true;
            swap_rows(t, pi);
            swap_cols(t, pj);
            const Integer p = d(t, t);
            bool clean = true;
            for (std::size_t i = t + 1; i < m; ++i) {
                if (d(i, t) == 0) continue;
                add_row(i, t, -nearest(d(i, t), p));
                if (d(i, t) != 0) clean = false;
            }
            for (std::size_t j = t + 1; j < n; ++j) {
                if (d(t, j) == 0) continue;
                add_col(j, t, -nearest(d(t, j), p));
                if (d(t, j) != 0) clean = false;
            }
            if (!clean) continue;
            // Divisibility of the remaining block by the pivot.
            bool divisible = true;
            for (std::size_t i = t + 1; i < m && divisible; ++i)
                for (std::size_t j = t + 1; j < n; ++j)
                    if (d(i, j) % p != 0) {
                        add_row(t, i, Integer(1));
                        divisible = false;
                        break;
                    }
            if (divisible) break;
        }
        if (!any) break;
        if (d(t, t) < 0) {
            d.negate_row(t);
            if (with_transforms) u.negate_row(t);
        }
        out.factors.push_back(d(t, t));
    }
    out.D = std::move(d);
    out.U = std::move(u);
    out.V = std::move(v);
    return out;
}

inline std::string to_string(const Integer& x) { return x.str(); }

}  // namespace km::homology
