#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "km/homology/tables.hpp"
#include "km/random.hpp"

using namespace km::homology;

namespace {

IntMatrix random_matrix(std::mt19937_64& gen, std::size_t r, std::size_t c, int lo, int hi) {
    std::uniform_int_distribution<int> dist(lo, hi);
    IntMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = dist(gen);
    return m;
}

// Fraction-free Gaussian elimination, independent of the Smith code.
Integer bareiss_det(IntMatrix a) {
    const std::size_t n = a.rows();
    Integer prev = 1, sign = 1;
    for (std::size_t k = 0; k < n; ++k) {
        if (a(k, k) == 0) {
            std::size_t p = k + 1;
            while (p < n && a(p, k) == 0) ++p;
            if (p == n) return 0;
            a.swap_rows(k, p);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) = (a(i, j) * a(k, k) - a(i, k) * a(k, j)) / prev;
        prev = a(k, k);
    }
    return sign * a(n - 1, n - 1);
}

// Rank over Q by elimination on cpp_rational.
std::size_t rational_rank(const IntMatrix& a) {
    using Q = boost::multiprecision::cpp_rational;
    std::vector<std::vector<Q>> m(a.rows(), std::vector<Q>(a.cols()));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m[i][j] = Q(a(i, j));
    std::size_t rank = 0;
    for (std::size_t c = 0; c < a.cols() && rank < a.rows(); ++c) {
        std::size_t p = rank;
        while (p < a.rows() && m[p][c] == 0) ++p;
        if (p == a.rows()) continue;
        std::swap(m[p], m[rank]);
        for (std::size_t i = rank + 1; i < a.rows(); ++i) {
            const Q f = m[i][c] / m[rank][c];
            for (std::size_t j = c; j < a.cols(); ++j) m[i][j] -= f * m[rank][j];
        }
        ++rank;
    }
    return rank;
}

bool is_diagonal(const IntMatrix& d) {
    for (std::size_t i = 0; i < d.rows(); ++i)
        for (std::size_t j = 0; j < d.cols(); ++j)
            if (i != j && d(i, j) != 0) return false;
    return true;
}

// Closed-form homology of Z_m with Z_t, t = +-1 the action of the generator.
AbelianGroup cyclic_closed_form(int m, int t, int k) {
    if (m == 1) return k == 0 ? AbelianGroup::free(1) : AbelianGroup{};
    if (t == 1) {
        if (k == 0) return AbelianGroup::free(1);
        return k % 2 == 1 ? AbelianGroup::cyclic(m) : AbelianGroup{};
    }
    // Even m with the sign action: H_even = Z/2, H_odd = 0.
    return k % 2 == 0 ? AbelianGroup::cyclic(2) : AbelianGroup{};
}

// Random unimodular matrix and its inverse from elementary operations.
std::pair<IntMatrix, IntMatrix> random_unimodular(std::mt19937_64& gen, std::size_t n, int steps) {
    IntMatrix u = IntMatrix::identity(n), inv = IntMatrix::identity(n);
    if (n < 2) return {u, inv};
    std::uniform_int_distribution<std::size_t> idx(0, n - 1);
    std::uniform_int_distribution<int> coef(-2, 2);
    for (int s = 0; s < steps; ++s) {
        const std::size_t a = idx(gen), b = idx(gen);
        if (a == b) continue;
        const int f = coef(gen);
        u.add_row(a, b, f);        // u <- E u, E = I + f e_ab
        inv.add_col(b, a, -f);     // inv <- inv E^{-1}
    }
    return {u, inv};
}

}  // namespace

// ------------------------------------------------------------------ Smith

TEST(Smith, IdentityFactorsAreOnes) {
    const auto s = smith_normal_form(IntMatrix::identity(3));
    ASSERT_EQ(s.factors.size(), 3u);
    for (const auto& f : s.factors) EXPECT_EQ(f, 1);
}

TEST(Smith, TwoByTwoExample) {
    const IntMatrix a{{2, 4}, {6, 8}};
    const auto s = smith_normal_form(a);
    ASSERT_EQ(s.factors.size(), 2u);
    EXPECT_EQ(s.factors[0], 2);
    EXPECT_EQ(s.factors[1], 4);
    EXPECT_EQ(s.U * a * s.V, s.D);
}

TEST(Smith, ZeroMatrixHasNoFactors) {
    EXPECT_TRUE(smith_normal_form(IntMatrix(3, 4)).factors.empty());
}

TEST(Smith, RandomReconstructionAndDivisibility) {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 60; ++trial) {
        std::uniform_int_distribution<int> dim(1, 7);
        const std::size_t r = static_cast<std::size_t>(dim(gen)), c = static_cast<std::size_t>(dim(gen));
        const IntMatrix a = random_matrix(gen, r, c, -9, 9);
        const auto s = smith_normal_form(a);
        EXPECT_EQ(s.U * a * s.V, s.D);
        EXPECT_TRUE(is_diagonal(s.D));
        EXPECT_EQ(s.rank(), rational_rank(a));
        for (std::size_t i = 0; i < s.factors.size(); ++i) {
            EXPECT_GT(s.factors[i], 0);
            EXPECT_EQ(s.D(i, i), s.factors[i]);
            if (i + 1 < s.factors.size()) {
                EXPECT_EQ(s.factors[i + 1] % s.factors[i], 0);
            }
        }
        EXPECT_EQ(abs(bareiss_det(s.U)), 1);
        EXPECT_EQ(abs(bareiss_det(s.V)), 1);
    }
}

TEST(Smith, DeterminantPreservedForSquareNonsingular) {
    std::mt19937_64 gen(11);
    int checked = 0;
    while (checked < 30) {
        const IntMatrix a = random_matrix(gen, 5, 5, -20, 20);
        const Integer det = bareiss_det(a);
        if (det == 0) continue;
        Integer prod = 1;
        const auto s = smith_normal_form(a, false);
        ASSERT_EQ(s.factors.size(), 5u);
        for (const auto& f : s.factors) prod *= f;
        EXPECT_EQ(prod, abs(det));
        ++checked;
    }
}

TEST(Smith, LargeEntriesDoNotOverflow) {
    const IntMatrix a{{4'000'000'000'000'000'000LL, 3}, {7, 9'000'000'000'000'000'000LL}};
    const auto s = smith_normal_form(a);
    EXPECT_EQ(s.U * a * s.V, s.D);
    EXPECT_EQ(s.factors[0] * s.factors[1], abs(bareiss_det(a)));
}

// ---------------------------------------------------------------- complexes

TEST(Complex, SingleFreeModule) {
    ChainComplexZ c;
    c.ranks = {1};
    const auto h = complex_homology(c);
    ASSERT_EQ(h.size(), 1u);
    EXPECT_EQ(h[0], AbelianGroup::free(1));
}

TEST(Complex, MultiplicationByM) {
    for (long long m : {2, 3, 12}) {
        ChainComplexZ c;
        c.ranks = {1, 1};
        c.d.push_back(IntMatrix{{m}});
        const auto h = complex_homology(c);
        EXPECT_EQ(h[0], AbelianGroup::cyclic(m));
        EXPECT_TRUE(h[1].is_zero());
    }
}

TEST(Complex, MalformedRejected) {
    ChainComplexZ bad_shape;
    bad_shape.ranks = {2, 1};
    bad_shape.d.push_back(IntMatrix(1, 1));
    EXPECT_THROW(complex_homology(bad_shape), km::ValidationError);

    ChainComplexZ not_complex;
    not_complex.ranks = {1, 1, 1};
    not_complex.d.push_back(IntMatrix{{1}});
    not_complex.d.push_back(IntMatrix{{1}});
    EXPECT_THROW(complex_homology(not_complex), km::ValidationError);
}

// Direct sums of elementary complexes in random bases: the homology is known
// from the summands, free ranks are cross-checked by rank-nullity over Q.
TEST(Complex, RandomComplexesMatchOracle) {
    std::mt19937_64 gen(3);
    std::uniform_int_distribution<int> kind(0, 3), torsion(2, 6);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t top = 3;
        std::vector<std::vector<Integer>> diag_entries(top);  // entries of d_k (k = 1..top)
        std::vector<std::size_t> ranks(top + 1, 0);
        std::vector<AbelianGroup> expect(top + 1);
        // Each piece: Z in degree k, or Z --x a--> Z from degree k+1 to k.
        struct Piece { std::size_t deg; int a; };
        std::vector<Piece> pieces;
        for (int p = 0; p < 6; ++p) {
            const std::size_t deg = static_cast<std::size_t>(gen() % (top + 1));
            const int k = kind(gen);
            if (k == 0 || deg == top) {
                pieces.push_back({deg, 0});
                expect[deg] = direct_sum(expect[deg], AbelianGroup::free(1));
            } else {
                const int a = k == 1 ? 1 : torsion(gen);
                pieces.push_back({deg, a});
                expect[deg] = direct_sum(expect[deg], AbelianGroup::cyclic(a));
            }
        }
        // Assign basis indices.
        std::vector<std::vector<std::pair<std::size_t, std::size_t>>> slots(pieces.size());
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            slots[i].push_back({pieces[i].deg, ranks[pieces[i].deg]++});
            if (pieces[i].a != 0) slots[i].push_back({pieces[i].deg + 1, ranks[pieces[i].deg + 1]++});
        }
        std::vector<IntMatrix> d;
        for (std::size_t k = 1; k <= top; ++k) d.emplace_back(ranks[k - 1], ranks[k]);
        for (std::size_t i = 0; i < pieces.size(); ++i)
            if (pieces[i].a != 0) d[pieces[i].deg](slots[i][0].second, slots[i][1].second) = pieces[i].a;
        // Random change of basis in every degree.
        std::vector<std::pair<IntMatrix, IntMatrix>> u;
        for (std::size_t k = 0; k <= top; ++k) u.push_back(random_unimodular(gen, ranks[k], 12));
        ChainComplexZ c;
        c.ranks = ranks;
        for (std::size_t k = 1; k <= top; ++k) c.d.push_back(u[k - 1].first * d[k - 1] * u[k].second);
        const auto h = complex_homology(c);
        for (std::size_t k = 0; k <= top; ++k) {
            EXPECT_EQ(h[k], expect[k]) << "degree " << k << " trial " << trial;
            const std::size_t r_out = k >= 1 ? rational_rank(c.d[k - 1]) : 0;
            const std::size_t r_in = k < top ? rational_rank(c.d[k]) : 0;
            EXPECT_EQ(h[k].free_rank, ranks[k] - r_out - r_in);
        }
    }
}

TEST(Complex, SparseReductionMatchesDense) {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 20; ++trial) {
        // Random complex C_0 <- C_1 <- C_2 <- C_3 with d = change of basis of
        // block pieces, converted to sparse form.
        const std::size_t n0 = 3, n1 = 5, n2 = 5, n3 = 3;
        IntMatrix d1(n0, n1), d2(n1, n2), d3(n2, n3);
        d1(0, 0) = 1;
        d1(1, 1) = 2;
        d2(2, 0) = 3;
        d2(3, 1) = 1;
        d3(2, 0) = 1;
        d3(4, 1) = 4;
        auto u0 = random_unimodular(gen, n0, 8), u1 = random_unimodular(gen, n1, 8), u2 = random_unimodular(gen, n2, 8),
             u3 = random_unimodular(gen, n3, 8);
        ChainComplexZ dense;
        dense.ranks = {n0, n1, n2, n3};
        dense.d = {u0.first * d1 * u1.second, u1.first * d2 * u2.second, u2.first * d3 * u3.second};
        SparseComplex sparse;
        sparse.ranks = dense.ranks;
        sparse.cols.resize(4);
        for (std::size_t k = 1; k <= 3; ++k) {
            const auto& m = dense.d[k - 1];
            sparse.cols[k].resize(m.cols());
            for (std::size_t j = 0; j < m.cols(); ++j)
                for (std::size_t i = 0; i < m.rows(); ++i)
                    if (m(i, j) != 0) sparse.cols[k][j].emplace_back(static_cast<std::uint32_t>(i), static_cast<std::int64_t>(m(i, j)));
        }
        ASSERT_TRUE(sparse_square_zero(sparse));
        const auto hd = complex_homology(dense);
        const auto hs = sparse_homology(sparse, 2);
        for (std::size_t k = 0; k <= 2; ++k) EXPECT_EQ(hs[k], hd[k]) << "degree " << k;
    }
}

TEST(AbelianGroup, CanonicalFormAndPrinting) {
    const auto g = make_group(1, {Integer(4), Integer(6), Integer(1)});
    EXPECT_TRUE(g.canonical());
    ASSERT_EQ(g.torsion.size(), 2u);
    EXPECT_EQ(g.torsion[0], 2);
    EXPECT_EQ(g.torsion[1], 12);
    EXPECT_EQ(g.str(), "Z + Z/2 + Z/12");
    EXPECT_EQ(make_group(0, {Integer(2), Integer(2)}).str(), "(Z/2)^2");
    EXPECT_EQ(AbelianGroup{}.str(), "0");
}

// ------------------------------------------------------------------ groups

TEST(Groups, DihedralMultiplication) {
    for (int m = 1; m <= 8; ++m) {
        const auto g = FiniteGroup::dihedral(m);
        const int n = g.order();
        for (int a = 0; a < n; ++a) {
            EXPECT_EQ(g.multiply(0, a), a);
            EXPECT_EQ(g.multiply(a, 0), a);
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    EXPECT_EQ(g.multiply(g.multiply(a, b), c), g.multiply(a, g.multiply(b, c)));
        }
        // r s r = s^{-1}
        if (m > 1) {
            EXPECT_EQ(g.multiply(g.multiply(m, 1), m), m - 1);
        }
    }
}

TEST(Groups, CharactersAreHomomorphisms) {
    for (int m = 1; m <= 8; ++m)
        for (int t : {1, -1})
            for (int r : {1, -1}) {
                if (m % 2 == 1 && t == -1) continue;
                const auto g = FiniteGroup::dihedral(m);
                const Character chi{t, r};
                for (int a = 0; a < g.order(); ++a)
                    for (int b = 0; b < g.order(); ++b)
                        EXPECT_EQ(chi(g, g.multiply(a, b)), chi(g, a) * chi(g, b));
            }
    EXPECT_THROW(Character({-1, 1}).validate(FiniteGroup::cyclic(3)), km::ValidationError);
}

TEST(Groups, BarComplexSquaresToZero) {
    for (const auto& g : {FiniteGroup::cyclic(4), FiniteGroup::dihedral(3), FiniteGroup::dihedral(4)})
        for (int t : {1, -1}) {
            if (g.m() % 2 == 1 && t == -1) continue;
            EXPECT_TRUE(sparse_square_zero(bar_resolution_complex(g, {t, -1}, 3))) << g.name();
        }
}

TEST(Groups, BarCyclicTwoTrivial) {
    const auto h = group_homology(FiniteGroup::cyclic(2), Character::trivial(), 4, HomologyPath::Bar);
    const std::vector<AbelianGroup> expect{AbelianGroup::free(1), AbelianGroup::cyclic(2), {}, AbelianGroup::cyclic(2), {}};
    EXPECT_EQ(h, expect);
}

// Hand check at degree <= 2 straight from the bar differentials of Z/2 =
// {1, s}: the complex is Z <-0- Z <-2- Z, so H_0 = Z, H_1 = Z/2.
TEST(Groups, BarCyclicTwoHandCheck) {
    const auto c = bar_resolution_complex(FiniteGroup::cyclic(2), Character::trivial(), 1);
    ASSERT_EQ(c.ranks[1], 1u);
    ASSERT_EQ(c.ranks[2], 1u);
    EXPECT_TRUE(c.cols[1][0].empty());  // d[s] = [] - []
    ASSERT_EQ(c.cols[2][0].size(), 1u);  // d[s|s] = [s] - [1] + [s] = 2[s]
    EXPECT_EQ(c.cols[2][0][0].second, 2);
}

TEST(Groups, BarCyclicTwoSign) {
    const auto h = group_homology(FiniteGroup::cyclic(2), {-1, 1}, 4, HomologyPath::Bar);
    const std::vector<AbelianGroup> expect{AbelianGroup::cyclic(2), {}, AbelianGroup::cyclic(2), {}, AbelianGroup::cyclic(2)};
    EXPECT_EQ(h, expect);
}

TEST(Groups, DihedralAbelianization) {
    const auto h3 = group_homology(FiniteGroup::dihedral(3), Character::trivial(), 1);
    EXPECT_EQ(h3[1], AbelianGroup::cyclic(2));
    const auto h2 = group_homology(FiniteGroup::dihedral(2), Character::trivial(), 1);
    EXPECT_EQ(h2[1], make_group(0, {Integer(2), Integer(2)}));
    // D_m^ab = Z/2 x Z/2 for even m, Z/2 for odd m.
    for (int m = 4; m <= 6; ++m) {
        const auto h = group_homology(FiniteGroup::dihedral(m), Character::trivial(), 1);
        EXPECT_EQ(h[1], m % 2 == 0 ? make_group(0, {Integer(2), Integer(2)}) : AbelianGroup::cyclic(2)) << m;
    }
}

TEST(Groups, DegreeZeroTrivialIsZ) {
    for (int m = 1; m <= 8; ++m) {
        EXPECT_EQ(group_homology(FiniteGroup::cyclic(m), Character::trivial(), 0, HomologyPath::Bar)[0], AbelianGroup::free(1));
        EXPECT_EQ(group_homology(FiniteGroup::dihedral(m), Character::trivial(), 0)[0], AbelianGroup::free(1));
    }
}

TEST(Groups, CyclicClosedForm) {
    for (int m = 1; m <= 12; ++m)
        for (int t : {1, -1}) {
            if (m % 2 == 1 && t == -1) continue;
            const auto h = group_homology(FiniteGroup::cyclic(m), {t, 1}, 8);
            for (int k = 0; k <= 8; ++k) EXPECT_EQ(h[static_cast<std::size_t>(k)], cyclic_closed_form(m, t, k)) << m << " " << t << " " << k;
        }
}

// Bar path against the periodic path for every cyclic group up to order 8,
// degrees 0..6, trivial and sign coefficients.
TEST(Groups, CyclicDualPath) {
    for (int m = 1; m <= 8; ++m)
        for (int t : {1, -1}) {
            if (m % 2 == 1 && t == -1) continue;
            const auto g = FiniteGroup::cyclic(m);
            const auto bar = group_homology(g, {t, 1}, 6, HomologyPath::Bar);
            const auto per = group_homology(g, {t, 1}, 6, HomologyPath::Periodic);
            EXPECT_EQ(bar, per) << "m = " << m << ", t = " << t;
        }
}

TEST(Groups, KleinProductMatchesBar) {
    for (int t : {1, -1})
        for (int r : {1, -1}) {
            const auto g = FiniteGroup::dihedral(2);
            EXPECT_EQ(group_homology(g, {t, r}, 5, HomologyPath::Bar), group_homology(g, {t, r}, 5, HomologyPath::Product))
                << t << " " << r;
        }
}

TEST(Groups, DihedralOneIsCyclicTwo) {
    for (int r : {1, -1})
        EXPECT_EQ(group_homology(FiniteGroup::dihedral(1), {1, r}, 6, HomologyPath::Bar),
                  group_homology(FiniteGroup::cyclic(2), {r, 1}, 6, HomologyPath::Periodic));
}

TEST(Groups, SizeCaps) {
    EXPECT_THROW(bar_resolution_complex(FiniteGroup::cyclic(17), Character::trivial(), 1), km::SizeCapError);
    EXPECT_THROW(bar_resolution_complex(FiniteGroup::cyclic(2), Character::trivial(), 7), km::SizeCapError);
    EXPECT_THROW(bar_resolution_complex(FiniteGroup::dihedral(8), Character::trivial(), 6), km::SizeCapError);
    EXPECT_THROW(group_homology(FiniteGroup::dihedral(3), Character::trivial(), 2, HomologyPath::Periodic), km::ValidationError);
}

TEST(Groups, KoszulDefaults) {
    // n odd: all signs +1.
    for (int n : {3, 5, 7})
        for (int m = 1; m <= 10; ++m) {
            const auto s = CoefficientSpec::koszul(m, n);
            EXPECT_EQ(s.tau_sign, 1);
            EXPECT_EQ(s.refl_sign, 1);
            EXPECT_EQ(s.degree_shift, m * (n - 1));
        }
    // n = 2: tau = (-1)^(m-1), refl = (-1)^(m(m-1)/2).
    const int tau[] = {1, -1, 1, -1, 1};
    const int refl[] = {1, -1, -1, 1, 1};
    for (int m = 1; m <= 5; ++m) {
        const auto s = CoefficientSpec::koszul(m, 2);
        EXPECT_EQ(s.tau_sign, tau[m - 1]) << m;
        EXPECT_EQ(s.refl_sign, refl[m - 1]) << m;
        EXPECT_NO_THROW(s.character().validate(FiniteGroup::dihedral(m)));
    }
}

// ------------------------------------------------------------------ tables

class Tables : public ::testing::Test {
protected:
    static void SetUpTestSuite() { bo2_ = new GradedGroupData(load_bo2_table()); }
    static void TearDownTestSuite() { delete bo2_; }
    static const GradedGroupData& bo2() { return *bo2_; }
    static GradedGroupData* bo2_;
};
GradedGroupData* Tables::bo2_ = nullptr;

TEST_F(Tables, Bo2DataLoads) {
    EXPECT_EQ(bo2().space, "BO(2)");
    ASSERT_GE(bo2().degrees.size(), 13u);
    EXPECT_EQ(bo2().degrees[0], AbelianGroup::free(1));
    EXPECT_EQ(bo2().degrees[1], AbelianGroup::cyclic(2));
    EXPECT_EQ(bo2().degrees[4], make_group(1, {Integer(2)}));
}

TEST_F(Tables, Bo2MalformedRejected) {
    const auto dir = std::filesystem::temp_directory_path();
    const auto gap = (dir / "km_bo2_gap.json").string();
    std::ofstream(gap) << R"({"degrees":[{"degree":0,"free_rank":1,"torsion":[]},{"degree":2,"free_rank":0,"torsion":[2]}]})";
    EXPECT_THROW(load_bo2_table(gap), km::ValidationError);
    const auto wrong = (dir / "km_bo2_wrong.json").string();
    std::ofstream(wrong) << R"({"degrees":[{"degree":0,"free_rank":1,"torsion":[]},{"degree":1,"free_rank":1,"torsion":[]}]})";
    EXPECT_THROW(load_bo2_table(wrong), km::ValidationError);
    EXPECT_THROW(load_bo2_table((dir / "km_missing_file.json").string()), km::IoError);
    std::remove(gap.c_str());
    std::remove(wrong.c_str());
}

TEST_F(Tables, DegreeZeroIsZ) {
    for (int n : {2, 3, 4}) {
        EXPECT_EQ(loop_space_so2_table(n, 6, 4).at(0), AbelianGroup::free(1));
        EXPECT_EQ(loop_space_o2_table(n, 6, 4, bo2()).at(0), AbelianGroup::free(1));
    }
    EXPECT_EQ(corollary_table(6, 4, bo2()).at(0), AbelianGroup::free(1));
}

TEST_F(Tables, TruncationFlags) {
    for (int n : {2, 3, 4})
        for (int mr : {0, 1, 2, 4}) {
            const auto t = loop_space_so2_table(n, 8, mr);
            const auto o = loop_space_o2_table(n, 8, mr, bo2());
            for (int d = 0; d <= 8; ++d) {
                const bool expect = d >= (mr + 1) * (n - 1);
                EXPECT_EQ(t.entries[static_cast<std::size_t>(d)].truncated, expect) << n << " " << mr << " " << d;
                EXPECT_EQ(o.entries[static_cast<std::size_t>(d)].truncated, expect);
                EXPECT_EQ(t.entries[static_cast<std::size_t>(d)].degree, d);
            }
        }
}

TEST_F(Tables, CorollaryEqualsPlanarO2) {
    const auto c = corollary_table(6, 4, bo2());
    const auto o = loop_space_o2_table(2, 6, 4, bo2());
    ASSERT_EQ(c.entries.size(), o.entries.size());
    for (std::size_t d = 0; d < c.entries.size(); ++d) {
        EXPECT_EQ(c.entries[d].group, o.entries[d].group);
        EXPECT_EQ(c.entries[d].truncated, o.entries[d].truncated);
    }
    const auto spatial = corollary_table(6, 4, bo2(), true);
    const auto o3 = loop_space_o2_table(3, 6, 4, bo2());
    EXPECT_EQ(spatial.n, 3);
    for (std::size_t d = 0; d < spatial.entries.size(); ++d) EXPECT_EQ(spatial.entries[d].group, o3.entries[d].group);
}

// SO(2) table against direct enumeration with the closed-form cyclic groups.
TEST_F(Tables, So2MatchesSummandEnumeration) {
    for (int n : {2, 3, 4}) {
        const int max_deg = 8, mr = 5;
        const auto t = loop_space_so2_table(n, max_deg, mr);
        for (int d = 0; d <= max_deg; ++d) {
            AbelianGroup g = d % 2 == 0 ? AbelianGroup::free(1) : AbelianGroup{};
            for (int m = 1; m <= mr; ++m) {
                const int raw = d - m * (n - 1);
                if (raw < 0) continue;
                const int tau = ((n - 1) * (m - 1)) % 2 == 0 ? 1 : -1;
                g = direct_sum(g, cyclic_closed_form(m, tau, raw));
            }
            EXPECT_EQ(t.at(d), g) << "n " << n << " degree " << d;
        }
    }
}

TEST_F(Tables, So2SpatialDegreeTwo) {
    // n = 3: BSO(2) gives Z, the m = 1 summand H_0(Z_1) = Z lands in degree 2.
    EXPECT_EQ(loop_space_so2_table(3, 4, 3).at(2), AbelianGroup::free(2));
}

// m = 1 at n = 2: D_1 = Z/2 with trivial default action, shifted by one.
TEST_F(Tables, O2FirstSummand) {
    const auto t = loop_space_o2_table(2, 6, 1, bo2());
    for (int d = 0; d <= 6; ++d) {
        AbelianGroup g = bo2().degrees[static_cast<std::size_t>(d)];
        if (d >= 1) g = direct_sum(g, cyclic_closed_form(2, 1, d - 1));
        EXPECT_EQ(t.at(d), g) << d;
    }
}

TEST_F(Tables, BarAndSmallResolutionPathsAgree) {
    const auto so2_bar = loop_space_so2_table(2, 6, 4, {}, HomologyPath::Bar);
    const auto so2_fast = loop_space_so2_table(2, 6, 4, {}, HomologyPath::Periodic);
    for (int d = 0; d <= 6; ++d) EXPECT_EQ(so2_bar.at(d), so2_fast.at(d)) << d;

    // O(2): replace the D_2 summand with its product-resolution value.
    const auto o2 = loop_space_o2_table(2, 6, 4, bo2());
    const SignConvention conv;
    const auto d2_bar = summand_homology(TableAction::O2, 2, 2, conv, 4, HomologyPath::Bar);
    const auto d2_prod = summand_homology(TableAction::O2, 2, 2, conv, 4, HomologyPath::Product);
    EXPECT_EQ(d2_bar, d2_prod);
    for (int d = 0; d <= 6; ++d) {
        AbelianGroup g = bo2().degrees[static_cast<std::size_t>(d)];
        for (int m = 1; m <= 4; ++m) {
            const int raw = d - m;
            if (raw < 0) continue;
            const auto part = m == 2 ? d2_prod : summand_homology(TableAction::O2, m, 2, conv, raw, HomologyPath::Bar);
            g = direct_sum(g, part[static_cast<std::size_t>(raw)]);
        }
        EXPECT_EQ(o2.at(d), g) << d;
    }
}

TEST_F(Tables, AssemblyLinearity) {
    for (int n : {2, 3}) {
        for (int mr = 1; mr <= 4; ++mr) {
            const auto a = loop_space_o2_table(n, 8, mr - 1, bo2());
            const auto b = loop_space_o2_table(n, 8, mr, bo2());
            for (int d = 0; d < std::min(9, mr * (n - 1)); ++d) EXPECT_EQ(a.at(d), b.at(d)) << n << " " << mr << " " << d;
            if (mr * (n - 1) <= 8) {
                EXPECT_NE(a.at(mr * (n - 1)), b.at(mr * (n - 1)));
            }
        }
    }
}

TEST_F(Tables, OddNUsesTrivialCoefficients) {
    SignConvention trivial{SignRule::Trivial, SignRule::Trivial};
    const auto a = loop_space_o2_table(3, 8, 4, bo2());
    const auto b = loop_space_o2_table(3, 8, 4, bo2(), trivial);
    for (int d = 0; d <= 8; ++d) EXPECT_EQ(a.at(d), b.at(d));
}

TEST_F(Tables, ConventionStampedInJson) {
    const auto j = to_json(corollary_table(4, 2, bo2()));
    EXPECT_EQ(j.at("n"), 2);
    EXPECT_EQ(j.at("action"), "o2");
    EXPECT_TRUE(j.at("convention").contains("tau_sign_rule"));
    EXPECT_TRUE(j.at("convention").contains("refl_sign_rule"));
    ASSERT_EQ(j.at("entries").size(), 5u);
    EXPECT_EQ(j.at("entries")[0].at("free_rank"), 1);
    EXPECT_TRUE(j.at("entries")[0].at("torsion").empty());
    EXPECT_FALSE(j.at("entries")[0].at("truncated"));
}

TEST_F(Tables, MissingBo2DegreesRejected) {
    GradedGroupData short_data = bo2();
    short_data.degrees.resize(4);
    EXPECT_THROW(loop_space_o2_table(2, 6, 2, short_data), km::ValidationError);
}
