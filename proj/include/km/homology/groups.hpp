#pragma once

// Homology of cyclic and dihedral groups with coefficients in a rank-one
// module Z_chi (g acts by chi(g) = +-1).
//
// Paths: the normalized bar resolution tensored with Z_chi (any group under
// the size caps), the 2-periodic resolution for cyclic groups, and the
// tensor product of two periodic resolutions for D_2 = Z/2 x Z/2.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "km/errors.hpp"
#include "km/homology/chain_complex.hpp"

namespace km::homology {

enum class GroupKind { Cyclic, Dihedral };

// Z_m = <s>, element a <-> s^a. D_m = Z_m x| Z/2 of order 2m, element
// (a, e) <-> index a + m e, product (a, e)(b, f) = (a + (-1)^e b, e + f).
class FiniteGroup {
public:
    static FiniteGroup cyclic(int m) {
        if (m < 1) throw ValidationError("cyclic group order must be >= 1");
        return FiniteGroup(GroupKind::Cyclic, m);
    }
    static FiniteGroup dihedral(int m) {
        if (m < 1) throw ValidationError("dihedral group index must be >= 1");
        return FiniteGroup(GroupKind::Dihedral, m);
    }

    GroupKind kind() const { return kind_; }
    int m() const { return m_; }
    int order() const { return kind_ == GroupKind::Cyclic ? m_ : 2 * m_; }
    std::string name() const { return (kind_ == GroupKind::Cyclic ? "Z_" : "D_") + std::to_string(m_); }

    int rotation_part(int g) const { return g % m_; }
    int reflection_part(int g) const { return g / m_; }

    int multiply(int g, int h) const {
        if (kind_ == GroupKind::Cyclic) return (g + h) % m_;
        const int a = g % m_, e = g / m_, b = h % m_, f = h / m_;
        const int rot = ((a + (e ? -b : b)) % m_ + m_) % m_;
        return rot + m_ * ((e + f) % 2);
    }

private:
    FiniteGroup(GroupKind k, int m) : kind_(k), m_(m) {}
    GroupKind kind_;
    int m_;
};

// chi(s^a r^e) = tau_sign^a refl_sign^e.
struct Character {
    int tau_sign = 1;
    int refl_sign = 1;

    static Character trivial() { return {1, 1}; }

    int operator()(const FiniteGroup& g, int x) const {
        int v = (g.rotation_part(x) % 2 == 1) ? tau_sign : 1;
        if (g.reflection_part(x) == 1) v *= refl_sign;
        return v;
    }

    void validate(const FiniteGroup& g) const {
        if (std::abs(tau_sign) != 1 || std::abs(refl_sign) != 1) throw ValidationError("character signs must be +-1");
        if (g.m() % 2 == 1 && tau_sign == -1)
            throw ValidationError("tau_sign = -1 is not a character of " + g.name() + " (odd m)");
    }
};

// Coefficients Z[n-1]^{(x)m} for the m-th summand: the rotation generator
// and a reflection act by Koszul signs unless overridden.
struct CoefficientSpec {
    int m = 1;
    int n = 2;
    int tau_sign = 1;
    int refl_sign = 1;
    int degree_shift = 0;

    static int default_tau_sign(int m, int n) { return ((n - 1) * (m - 1)) % 2 == 0 ? 1 : -1; }
    static int default_refl_sign(int m, int n) {
        return (static_cast<long long>(n - 1) * m * (m - 1) / 2) % 2 == 0 ? 1 : -1;
    }
    static CoefficientSpec koszul(int m, int n) {
        if (m < 1 || n < 2) throw ValidationError("coefficient spec needs m >= 1 and n >= 2");
        return {m, n, default_tau_sign(m, n), default_refl_sign(m, n), m * (n - 1)};
    }
    Character character() const { return {tau_sign, refl_sign}; }
};

struct BarLimits {
    int max_order = 16;
    int max_degree = 6;
    std::size_t max_cells = 3'000'000;  // total over all degrees
};

namespace detail {

inline std::size_t ipow(std::size_t b, std::size_t e) {
    std::size_t r = 1;
    while (e--) r *= b;
    return r;
}

}  // namespace detail

// Normalized bar complex B(G) (x)_G Z_chi in degrees 0..max_degree+1. The
// cell [g_1|...|g_k] (all g_i != 1) is indexed by the base-(|G|-1) number
// with digits g_i - 1, g_1 most significant, and
//   d[g_1|...|g_k] = chi(g_1)[g_2|...|g_k]
//                    + sum_{i<k} (-1)^i [...|g_i g_{i+1}|...]
//                    + (-1)^k [g_1|...|g_{k-1}],
// dropping terms with an identity entry.
inline SparseComplex bar_resolution_complex(const FiniteGroup& g, const Character& chi, int max_degree,
                                            const BarLimits& limits = {}) {
    chi.validate(g);
    if (max_degree < 0) throw ValidationError("max_degree must be >= 0");
    if (g.order() > limits.max_order)
        throw SizeCapError("bar resolution capped at |G| <= " + std::to_string(limits.max_order) + ", got " +
                           std::to_string(g.order()));
    if (max_degree > limits.max_degree)
        throw SizeCapError("bar resolution capped at degree <= " + std::to_string(limits.max_degree));
    const std::size_t b = static_cast<std::size_t>(g.order() - 1);
    const int top = max_degree + 1;
    std::size_t total = 0;
    for (int k = 0; k <= top; ++k) total += detail::ipow(b, static_cast<std::size_t>(k));
    if (total > limits.max_cells)
        throw SizeCapError("bar complex of " + g.name() + " through degree " + std::to_string(top) + " has " +
                           std::to_string(total) + " cells, above the budget of " + std::to_string(limits.max_cells));

    SparseComplex c;
    c.ranks.resize(static_cast<std::size_t>(top) + 1);
    c.cols.resize(static_cast<std::size_t>(top) + 1);
    for (int k = 0; k <= top; ++k) c.ranks[static_cast<std::size_t>(k)] = detail::ipow(b, static_cast<std::size_t>(k));
    if (b == 0) return c;  // trivial group: only [] in degree 0

    std::vector<int> digits;
    for (int k = 1; k <= top; ++k) {
        auto& cols = c.cols[static_cast<std::size_t>(k)];
        cols.resize(c.ranks[static_cast<std::size_t>(k)]);
        digits.assign(static_cast<std::size_t>(k), 0);
        auto encode = [&](auto first, auto last) {
            std::uint64_t idx = 0;
            for (auto it = first; it != last; ++it) idx = idx * b + static_cast<std::uint64_t>(*it - 1);
            return static_cast<std::uint32_t>(idx);
        };
        std::vector<int> elems(static_cast<std::size_t>(k)), face;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            std::size_t x = j;
            for (int i = k - 1; i >= 0; --i) {
                elems[static_cast<std::size_t>(i)] = static_cast<int>(x % b) + 1;
                x /= b;
            }
            std::map<std::uint32_t, std::int64_t> acc;
            acc[encode(elems.begin() + 1, elems.end())] += chi(g, elems[0]);
            for (int i = 0; i + 1 < k; ++i) {
                const int prod = g.multiply(elems[static_cast<std::size_t>(i)], elems[static_cast<std::size_t>(i) + 1]);
                if (prod == 0) continue;
                face.assign(elems.begin(), elems.end());
                face[static_cast<std::size_t>(i)] = prod;
                face.erase(face.begin() + i + 1);
                acc[encode(face.begin(), face.end())] += (i + 1) % 2 == 0 ? 1 : -1;
            }
            acc[encode(elems.begin(), elems.end() - 1)] += k % 2 == 0 ? 1 : -1;
            auto& col = cols[j];
            for (const auto& [r, v] : acc)
                if (v != 0) col.emplace_back(r, v);
        }
    }
    return c;
}

// Z <- Z <- Z <- ... with d_odd = chi(s) - 1 and d_even = sum_j chi(s)^j,
// the periodic resolution of Z_m tensored with Z_chi, through degree top.
inline ChainComplexZ cyclic_periodic_complex(int m, const Character& chi, int top) {
    if (m < 1) throw ValidationError("cyclic group order must be >= 1");
    chi.validate(FiniteGroup::cyclic(m));
    const long long t = m == 1 ? 1 : chi.tau_sign;
    long long norm = 0, power = 1;
    for (int j = 0; j < m; ++j) {
        norm += power;
        power *= t;
    }
    ChainComplexZ c;
    c.ranks.assign(static_cast<std::size_t>(top) + 1, 1);
    for (int k = 1; k <= top; ++k) c.d.push_back(IntMatrix{{k % 2 == 1 ? t - 1 : norm}});
    return c;
}

// Tensor product of the periodic resolutions of two copies of Z/2 with
// coefficients chi_1 (x) chi_2: the product path for D_2.
inline ChainComplexZ klein_product_complex(int sign_a, int sign_b, int top) {
    auto dim = [](int i, int t) -> long long {
        // i-th differential of the Z/2 periodic complex with generator acting by t.
        return i % 2 == 1 ? t - 1 : 1 + t;
    };
    ChainComplexZ c;
    for (int k = 0; k <= top; ++k) c.ranks.push_back(static_cast<std::size_t>(k) + 1);
    // Basis of degree k: (i, k - i), i = 0..k.
    for (int k = 1; k <= top; ++k) {
        IntMatrix d(static_cast<std::size_t>(k), static_cast<std::size_t>(k) + 1);
        for (int i = 0; i <= k; ++i) {
            const int j = k - i;
            if (i >= 1) d(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(i)) += dim(i, sign_a);
            if (j >= 1) d(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) += (i % 2 == 0 ? 1 : -1) * dim(j, sign_b);
        }
        c.d.push_back(std::move(d));
    }
    return c;
}

enum class HomologyPath { Auto, Bar, Periodic, Product };

inline const char* to_string(HomologyPath p) {
    switch (p) {
        case HomologyPath::Auto: return "auto";
        case HomologyPath::Bar: return "bar";
        case HomologyPath::Periodic: return "periodic";
        case HomologyPath::Product: return "product";
    }
    return "?";
}

// Raw group homology H_0..H_max_degree(G; Z_chi), no degree shift.
inline std::vector<AbelianGroup> group_homology(const FiniteGroup& g, const Character& chi, int max_degree,
                                                HomologyPath path = HomologyPath::Auto, const BarLimits& limits = {}) {
    chi.validate(g);
    if (max_degree < 0) throw ValidationError("max_degree must be >= 0");
    const bool cyclic_like = g.kind() == GroupKind::Cyclic || g.m() == 1;
    // Dihedral groups of index >= 2 always go through the bar complex; the
    // product path for D_2 is only a cross-check.
    if (path == HomologyPath::Auto) path = cyclic_like ? HomologyPath::Periodic : HomologyPath::Bar;
    switch (path) {
        case HomologyPath::Periodic: {
            if (!cyclic_like) throw ValidationError("periodic path is only available for cyclic groups");
            // D_1 is cyclic of order 2 generated by the reflection.
            const int order = g.kind() == GroupKind::Cyclic ? g.m() : 2;
            const Character c1{g.kind() == GroupKind::Cyclic ? chi.tau_sign : chi.refl_sign, 1};
            auto h = complex_homology(cyclic_periodic_complex(order, c1, max_degree + 1));
            h.resize(static_cast<std::size_t>(max_degree) + 1);
            return h;
        }
        case HomologyPath::Product: {
            if (!(g.kind() == GroupKind::Dihedral && g.m() == 2))
                throw ValidationError("product path is only available for D_2");
            // D_2 = <s> x <r>, s = (1,0), r = (0,1).
            auto h = complex_homology(klein_product_complex(chi.tau_sign, chi.refl_sign, max_degree + 1));
            h.resize(static_cast<std::size_t>(max_degree) + 1);
            return h;
        }
        default:
            return sparse_homology(bar_resolution_complex(g, chi, max_degree, limits), static_cast<std::size_t>(max_degree));
    }
}

}  // namespace km::homology
