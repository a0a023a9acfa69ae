#pragma once

// Finitely generated abelian groups, integer chain complexes and their
// homology. Small complexes are handled densely; large sparse ones are first
// shrunk by eliminating unit entries of the boundary (which does not change
// homology) and the remainder goes through the Smith normal form.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "km/errors.hpp"
#include "km/homology/smith.hpp"

namespace km::homology {

// Z^free_rank + Z/t_1 + ... + Z/t_k with t_i >= 2 and t_i | t_{i+1}.
struct AbelianGroup {
    std::size_t free_rank = 0;
    std::vector<Integer> torsion;

    static AbelianGroup free(std::size_t r) { return {r, {}}; }
    static AbelianGroup cyclic(long long order) {
        if (order == 0) return free(1);
        AbelianGroup g;
        if (order != 1) g.torsion.push_back(Integer(std::abs(order)));
        return g;
    }

    bool is_zero() const { return free_rank == 0 && torsion.empty(); }

    bool canonical() const {
        for (std::size_t i = 0; i < torsion.size(); ++i) {
            if (torsion[i] < 2) return false;
            if (i + 1 < torsion.size() && torsion[i + 1] % torsion[i] != 0) return false;
        }
        return true;
    }

    friend bool operator==(const AbelianGroup& a, const AbelianGroup& b) {
        return a.free_rank == b.free_rank && a.torsion == b.torsion;
    }

    std::string str() const {
        if (is_zero()) return "0";
        std::string s;
        if (free_rank > 0) s = free_rank == 1 ? "Z" : "Z^" + std::to_string(free_rank);
        // Group equal invariant factors: Z/2 + Z/2 -> (Z/2)^2.
        for (std::size_t i = 0; i < torsion.size();) {
            std::size_t j = i;
            while (j < torsion.size() && torsion[j] == torsion[i]) ++j;
            if (!s.empty()) s += " + ";
            const std::string z = "Z/" + torsion[i].str();
            s += j - i == 1 ? z : "(" + z + ")^" + std::to_string(j - i);
            i = j;
        }
        return s;
    }
};

// Canonical form of Z^r + sum Z/a_i for arbitrary orders a_i (entries 0 and
// 1 allowed): invariant factors of diag(a_i).
inline AbelianGroup make_group(std::size_t free_rank, const std::vector<Integer>& orders) {
    AbelianGroup g;
    g.free_rank = free_rank;
    std::vector<Integer> nonzero;
    for (const auto& a : orders) {
        if (a == 0)
            ++g.free_rank;
        else if (abs(a) != 1)
            nonzero.push_back(abs(a));
    }
    if (nonzero.empty()) return g;
    IntMatrix d(nonzero.size(), nonzero.size());
    for (std::size_t i = 0; i < nonzero.size(); ++i) d(i, i) = nonzero[i];
    for (const auto& f : smith_normal_form(d, false).factors)
        if (f != 1) g.torsion.push_back(f);
    return g;
}

inline AbelianGroup direct_sum(const AbelianGroup& a, const AbelianGroup& b) {
    std::vector<Integer> t = a.torsion;
    t.insert(t.end(), b.torsion.begin(), b.torsion.end());
    return make_group(a.free_rank + b.free_rank, t);
}

// ---------------------------------------------------------------- dense

// C_0 <- C_1 <- ... <- C_K with d[k-1] the matrix of d_k : C_k -> C_{k-1}
// (rank(C_{k-1}) rows, rank(C_k) columns).
struct ChainComplexZ {
    std::vector<std::size_t> ranks;
    std::vector<IntMatrix> d;

    std::size_t top() const { return ranks.empty() ? 0 : ranks.size() - 1; }

    void validate(bool check_square_zero = true) const {
        if (ranks.empty()) throw ValidationError("chain complex has no modules");
        if (d.size() + 1 != ranks.size()) throw ValidationError("need one boundary map per positive degree");
        for (std::size_t k = 1; k < ranks.size(); ++k) {
            const auto& m = d[k - 1];
            if (m.rows() != ranks[k - 1] || m.cols() != ranks[k])
                throw ValidationError("boundary map d_" + std::to_string(k) + " has the wrong shape");
        }
        if (!check_square_zero) return;
        for (std::size_t k = 2; k < ranks.size(); ++k)
            if (!(d[k - 2] * d[k - 1]).is_zero())
                throw ValidationError("d_" + std::to_string(k - 1) + " d_" + std::to_string(k) + " != 0");
    }
};

// H_k for k = 0..top. The top module has no incoming boundary, so H_top is
// ker d_top.
inline std::vector<AbelianGroup> complex_homology(const ChainComplexZ& c) {
    c.validate();
    const std::size_t top = c.top();
    std::vector<SmithForm> snf;
    snf.reserve(c.d.size());
    for (const auto& m : c.d) snf.push_back(smith_normal_form(m, false));
    std::vector<AbelianGroup> out;
    for (std::size_t k = 0; k <= top; ++k) {
        const std::size_t r_in = k + 1 <= top ? snf[k].rank() : 0;  // rank d_{k+1}
        const std::size_t r_out = k >= 1 ? snf[k - 1].rank() : 0;   // rank d_k
        AbelianGroup g;
        g.free_rank = c.ranks[k] - r_out - r_in;
        if (k + 1 <= top)
            for (const auto& f : snf[k].factors)
                if (f != 1) g.torsion.push_back(f);
        out.push_back(std::move(g));
    }
    return out;
}

// --------------------------------------------------------------- sparse

// Boundary columns with small integer coefficients, one vector of columns
// per degree. cols[k][j] lists (row, coefficient) of d_k applied to cell j
// of degree k; rows index cells of degree k-1.
struct SparseComplex {
    using Entry = std::pair<std::uint32_t, std::int64_t>;
    using Column = std::vector<Entry>;
    std::vector<std::size_t> ranks;
    std::vector<std::vector<Column>> cols;  // cols[0] is empty

    std::size_t top() const { return ranks.size() - 1; }
    std::size_t total_cells() const {
        std::size_t s = 0;
        for (auto r : ranks) s += r;
        return s;
    }
};

namespace detail {

inline std::int64_t checked_mul_add(std::int64_t a, std::int64_t f, std::int64_t b) {
    std::int64_t prod, sum;
    if (__builtin_mul_overflow(f, b, &prod) || __builtin_add_overflow(a, prod, &sum))
        throw NumericalError("coefficient overflow in sparse reduction");
    return sum;
}

// a + f*b for sorted sparse columns; zero entries dropped. Rows that
// appear in the result but not in a are passed to on_new.
template <class OnNew>
inline void axpy(SparseComplex::Column& a, std::int64_t f, const SparseComplex::Column& b,
                 SparseComplex::Column& scratch, OnNew&& on_new) {
    scratch.clear();
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            scratch.push_back(a[i++]);
        } else if (i == a.size() || b[j].first < a[i].first) {
            scratch.emplace_back(b[j].first, checked_mul_add(0, f, b[j].second));
            on_new(b[j].first);
            ++j;
        } else {
            const std::int64_t v = checked_mul_add(a[i].second, f, b[j].second);
            if (v != 0) scratch.emplace_back(a[i].first, v);
            ++i;
            ++j;
        }
    }
    a.swap(scratch);
}

inline SparseComplex::Column::iterator find_row(SparseComplex::Column& col, std::uint32_t r) {
    auto it = std::lower_bound(col.begin(), col.end(), r,
                               [](const SparseComplex::Entry& e, std::uint32_t x) { return e.first < x; });
    return it != col.end() && it->first == r ? it : col.end();
}

inline void sort_unique(std::vector<std::uint32_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace detail

// Removes pairs (sigma, tau), sigma of degree k, tau of degree k-1 with
// d(sigma) having coefficient +-1 at tau, by the change of basis
//   sigma' <- sigma' - [sigma':tau]/[sigma:tau] sigma   for all other sigma',
// which leaves a complex with the same homology. Columns of degree
// max_degree+1 are only used as pivots. Returns the reduced dense complex in
// degrees 0..max_degree+1; zero columns of the top degree are dropped, so its
// H_{max_degree+1} is meaningless.
inline ChainComplexZ reduce_sparse(SparseComplex c, std::size_t max_degree) {
    if (c.ranks.size() < max_degree + 2) throw ValidationError("sparse complex lacks degree max_degree + 1");
    const std::size_t top = max_degree + 1;
    c.ranks.resize(top + 1);
    c.cols.resize(top + 1);
    std::vector<std::vector<char>> alive(top + 1);
    for (std::size_t k = 0; k <= top; ++k) alive[k].assign(c.ranks[k], 1);
    // cofaces[k][r]: columns of d_{k+1} that may have an entry at row r. The
    // lists are kept as supersets (stale and repeated ids allowed) and are
    // filtered when used.
    std::vector<std::vector<std::vector<std::uint32_t>>> cofaces(top);
    for (std::size_t k = 0; k < top; ++k) {
        cofaces[k].assign(c.ranks[k], {});
        for (std::uint32_t j = 0; j < c.cols[k + 1].size(); ++j)
            for (const auto& [r, v] : c.cols[k + 1][j]) cofaces[k][r].push_back(j);
    }
    SparseComplex::Column scratch;
    std::vector<std::uint32_t> others;
    // Bottom degree first: by the time d_k is reached only a few (k-1)-cells
    // survive, which keeps fill-in small. A pivot in d_k removes one k-cell
    // and one (k-1)-cell.
    for (std::size_t k = 1; k <= top; ++k) {
        auto& colsk = c.cols[k];
        auto& cof = cofaces[k - 1];
        for (std::uint32_t s = 0; s < colsk.size(); ++s) {
            if (!alive[k][s] || colsk[s].empty()) continue;
            // Unit entry whose row has the fewest cofaces (least fill).
            std::uint32_t tau = 0;
            std::int64_t unit = 0;
            std::size_t best = std::numeric_limits<std::size_t>::max();
            for (const auto& [r, v] : colsk[s])
                if ((v == 1 || v == -1) && cof[r].size() < best) {
                    best = cof[r].size();
                    tau = r;
                    unit = v;
                }
            if (unit == 0) continue;
            const auto& pivot = colsk[s];
            others.swap(cof[tau]);
            detail::sort_unique(others);
            for (std::uint32_t sp : others) {
                if (sp == s || !alive[k][sp]) continue;
                auto& col = colsk[sp];
                const auto it = detail::find_row(col, tau);
                if (it == col.end()) continue;
                const std::int64_t f = -it->second * unit;  // unit^{-1} = unit
                detail::axpy(col, f, pivot, scratch, [&](std::uint32_t r) { cof[r].push_back(sp); });
            }
            others.clear();
            // Remove sigma from C_k: drop its column and its row in d_{k+1}.
            colsk[s].clear();
            colsk[s].shrink_to_fit();
            alive[k][s] = 0;
            if (k < top) {
                auto& up = cofaces[k][s];
                detail::sort_unique(up);
                for (std::uint32_t rho : up) {
                    auto& col = c.cols[k + 1][rho];
                    const auto it = detail::find_row(col, s);
                    if (it != col.end()) col.erase(it);
                }
                up.clear();
                up.shrink_to_fit();
            }
            // Remove tau from C_{k-1}; no live column of d_k refers to it now.
            alive[k - 1][tau] = 0;
            if (k - 1 >= 1) {
                c.cols[k - 1][tau].clear();
                c.cols[k - 1][tau].shrink_to_fit();
            }
        }
    }
    // Compact the survivors into a dense complex.
    ChainComplexZ out;
    std::vector<std::vector<std::uint32_t>> index(top + 1);
    for (std::size_t k = 0; k <= top; ++k) {
        index[k].assign(c.ranks[k], std::numeric_limits<std::uint32_t>::max());
        std::uint32_t next = 0;
        for (std::size_t j = 0; j < c.ranks[k]; ++j)
            if (alive[k][j] && (k < top || !c.cols[k][j].empty())) index[k][j] = next++;
        out.ranks.push_back(next);
    }
    for (std::size_t k = 1; k <= top; ++k) {
        IntMatrix m(out.ranks[k - 1], out.ranks[k]);
        for (std::size_t j = 0; j < c.ranks[k]; ++j) {
            if (index[k][j] == std::numeric_limits<std::uint32_t>::max()) continue;
            for (const auto& [r, v] : c.cols[k][j]) {
                if (!alive[k - 1][r]) throw NumericalError("sparse reduction left a dangling entry");
                m(index[k - 1][r], index[k][j]) = v;
            }
        }
        out.d.push_back(std::move(m));
    }
    return out;
}

// d_{k-1} d_k = 0 for every k, exactly.
inline bool sparse_square_zero(const SparseComplex& c) {
    for (std::size_t k = 2; k < c.ranks.size(); ++k) {
        for (const auto& col : c.cols[k]) {
            std::map<std::uint32_t, std::int64_t> acc;
            for (const auto& [r, v] : col)
                for (const auto& [r2, w] : c.cols[k - 1][r]) acc[r2] = detail::checked_mul_add(acc[r2], v, w);
            for (const auto& [r2, x] : acc)
                if (x != 0) return false;
        }
    }
    return true;
}

// H_0..H_max_degree of a sparse complex given through degree max_degree + 1.
inline std::vector<AbelianGroup> sparse_homology(const SparseComplex& c, std::size_t max_degree) {
    auto h = complex_homology(reduce_sparse(c, max_degree));
    h.resize(max_degree + 1);
    return h;
}

}  // namespace km::homology
