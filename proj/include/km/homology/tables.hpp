#pragma once

// Equivariant loop-space homology tables of S^n assembled from group
// homology:
//   SO(2):  H_*(BSO(2)) + sum_m H_{*-m(n-1)}(Z_m; Z[n-1]^{(x)m})
//   O(2):   H_*(BO(2))  + sum_m H_{*-m(n-1)}(D_m; Z[n-1]^{(x)m})
// with the sum cut at m_range.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "km/errors.hpp"
#include "km/homology/groups.hpp"
#include "km/parallel.hpp"

namespace km::homology {

enum class TableAction { SO2, O2 };

inline const char* to_string(TableAction a) { return a == TableAction::SO2 ? "so2" : "o2"; }

// How tau_sign / refl_sign are chosen for the m-th summand.
enum class SignRule { Koszul, Trivial, Sign };

inline const char* to_string(SignRule r) {
    switch (r) {
        case SignRule::Koszul: return "koszul";
        case SignRule::Trivial: return "trivial";
        case SignRule::Sign: return "sign";
    }
    return "?";
}

inline SignRule parse_sign_rule(const std::string& s) {
    if (s == "koszul") return SignRule::Koszul;
    if (s == "trivial") return SignRule::Trivial;
    if (s == "sign") return SignRule::Sign;
    throw ValidationError("unknown sign rule '" + s + "' (koszul, trivial, sign)");
}

struct SignConvention {
    SignRule tau = SignRule::Koszul;
    SignRule refl = SignRule::Koszul;

    CoefficientSpec spec(int m, int n) const {
        CoefficientSpec c = CoefficientSpec::koszul(m, n);
        if (tau == SignRule::Trivial) c.tau_sign = 1;
        if (tau == SignRule::Sign) c.tau_sign = -1;
        if (refl == SignRule::Trivial) c.refl_sign = 1;
        if (refl == SignRule::Sign) c.refl_sign = -1;
        return c;
    }

    std::string tau_rule() const {
        switch (tau) {
            case SignRule::Koszul: return "koszul: (-1)^((n-1)(m-1))";
            case SignRule::Trivial: return "trivial: +1";
            case SignRule::Sign: return "sign: -1";
        }
        return "?";
    }
    std::string refl_rule() const {
        switch (refl) {
            case SignRule::Koszul: return "koszul: (-1)^((n-1)m(m-1)/2)";
            case SignRule::Trivial: return "trivial: +1";
            case SignRule::Sign: return "sign: -1";
        }
        return "?";
    }
};

struct BettiEntry {
    int degree = 0;
    AbelianGroup group;
    bool truncated = false;
};

struct BettiTable {
    int n = 2;
    TableAction action = TableAction::SO2;
    int max_degree = 0;
    int m_range = 0;
    SignConvention convention;
    HomologyPath path = HomologyPath::Auto;
    std::string label;
    std::vector<BettiEntry> entries;

    const AbelianGroup& at(int degree) const { return entries.at(static_cast<std::size_t>(degree)).group; }
};

// A graded group read from disk, one descriptor per degree from 0.
struct GradedGroupData {
    std::string space;
    int version = 0;
    std::vector<AbelianGroup> degrees;
};

inline std::string default_bo2_path() {
#ifdef KM_DATA_DIR
    return std::string(KM_DATA_DIR) + "/bo2_homology.json";
#else
    return "data/bo2_homology.json";
#endif
}

inline AbelianGroup group_from_json(const nlohmann::json& j) {
    std::vector<Integer> orders;
    for (const auto& t : j.at("torsion")) orders.emplace_back(t.get<long long>());
    const long long free = j.at("free_rank").get<long long>();
    if (free < 0) throw ValidationError("negative free rank in group descriptor");
    AbelianGroup g = make_group(static_cast<std::size_t>(free), orders);
    AbelianGroup literal;
    literal.free_rank = static_cast<std::size_t>(free);
    literal.torsion = orders;
    if (!(g == literal)) throw ValidationError("group descriptor is not in invariant-factor form: " + literal.str());
    return g;
}

// H_0 and H_1 are checked against the dihedral groups of odd index, whose
// integral homology in degrees 0 and 1 is Z and Z/2 like BO(2).
inline void validate_bo2(const GradedGroupData& d) {
    if (d.degrees.size() < 2) throw ValidationError("BO(2) data must cover degrees 0 and 1");
    for (int m : {3, 5}) {
        const auto h = group_homology(FiniteGroup::dihedral(m), Character::trivial(), 1);
        if (!(h[0] == d.degrees[0]) || !(h[1] == d.degrees[1]))
            throw ValidationError("BO(2) data disagrees with H_0, H_1 of D_" + std::to_string(m) + ": got " +
                                  d.degrees[0].str() + ", " + d.degrees[1].str());
    }
}

inline GradedGroupData load_bo2_table(const std::string& path = default_bo2_path()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open BO(2) data file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cannot parse " + path + ": " + e.what());
    }
    GradedGroupData d;
    try {
        d.space = j.value("space", "");
        d.version = j.value("version", 0);
        int expect = 0;
        for (const auto& e : j.at("degrees")) {
            if (e.at("degree").get<int>() != expect)
                throw ValidationError("BO(2) data degrees must run 0, 1, 2, ... without gaps");
            d.degrees.push_back(group_from_json(e));
            ++expect;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed BO(2) data in " + path + ": " + e.what());
    }
    validate_bo2(d);
    return d;
}

inline std::vector<AbelianGroup> bso2_homology(int max_degree) {
    std::vector<AbelianGroup> h(static_cast<std::size_t>(max_degree) + 1);
    for (int d = 0; d <= max_degree; d += 2) h[static_cast<std::size_t>(d)] = AbelianGroup::free(1);
    return h;
}

// Raw group homology of the m-th summand in degrees 0..raw_degree.
inline std::vector<AbelianGroup> summand_homology(TableAction action, int m, int n, const SignConvention& conv,
                                                  int raw_degree, HomologyPath path = HomologyPath::Auto,
                                                  const BarLimits& limits = {}) {
    const CoefficientSpec spec = conv.spec(m, n);
    const FiniteGroup g = action == TableAction::SO2 ? FiniteGroup::cyclic(m) : FiniteGroup::dihedral(m);
    return group_homology(g, spec.character(), raw_degree, path, limits);
}

namespace detail {

inline BettiTable assemble(TableAction action, int n, int max_degree, int m_range,
                           const std::vector<AbelianGroup>& base, const SignConvention& conv, HomologyPath path,
                           const BarLimits& limits) {
    if (n < 2) throw ValidationError("n must be >= 2");
    if (max_degree < 0) throw ValidationError("max_degree must be >= 0");
    if (m_range < 0) throw ValidationError("m_range must be >= 0");
    if (static_cast<int>(base.size()) <= max_degree)
        throw ValidationError("base homology given through degree " + std::to_string(static_cast<int>(base.size()) - 1) +
                              ", table needs degree " + std::to_string(max_degree));
    const int shift = n - 1;
    // Summands with m(n-1) > max_degree cannot contribute.
    const int m_top = std::min(m_range, max_degree / shift);
    std::vector<std::vector<AbelianGroup>> parts(static_cast<std::size_t>(std::max(m_top, 0)));
    parallel_for(parts.size(), [&](std::size_t i) {
        const int m = static_cast<int>(i) + 1;
        parts[i] = summand_homology(action, m, n, conv, max_degree - m * shift, path, limits);
    });

    BettiTable t;
    t.n = n;
    t.action = action;
    t.max_degree = max_degree;
    t.m_range = m_range;
    t.convention = conv;
    t.path = path;
    const int trunc_from = (m_range + 1) * shift;
    for (int d = 0; d <= max_degree; ++d) {
        AbelianGroup g = base[static_cast<std::size_t>(d)];
        for (int m = 1; m <= m_top; ++m) {
            const int raw = d - m * shift;
            if (raw >= 0) g = direct_sum(g, parts[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(raw)]);
        }
        t.entries.push_back({d, std::move(g), d >= trunc_from});
    }
    return t;
}

}  // namespace detail

inline BettiTable loop_space_so2_table(int n, int max_degree, int m_range, const SignConvention& conv = {},
                                       HomologyPath path = HomologyPath::Auto, const BarLimits& limits = {}) {
    auto t = detail::assemble(TableAction::SO2, n, max_degree, m_range, bso2_homology(std::max(max_degree, 0)), conv,
                              path, limits);
    t.label = "H^SO(2)_*(L S^" + std::to_string(n) + ")";
    return t;
}

inline BettiTable loop_space_o2_table(int n, int max_degree, int m_range, const GradedGroupData& bo2,
                                      const SignConvention& conv = {}, HomologyPath path = HomologyPath::Auto,
                                      const BarLimits& limits = {}) {
    if (static_cast<int>(bo2.degrees.size()) <= max_degree)
        throw ValidationError("BO(2) data covers degrees 0.." + std::to_string(bo2.degrees.size() - 1) +
                              ", table needs degree " + std::to_string(max_degree));
    auto t = detail::assemble(TableAction::O2, n, max_degree, m_range, bo2.degrees, conv, path, limits);
    t.label = "H^O(2)_*(L S^" + std::to_string(n) + ")";
    return t;
}

// Equivariant symplectic homology of the bounded regularized components below
// the first critical value: the O(2) table at n = 2, or n = 3 for the spatial
// problem.
inline BettiTable corollary_table(int max_degree, int m_range, const GradedGroupData& bo2, bool spatial = false,
                                  const SignConvention& conv = {}, HomologyPath path = HomologyPath::Auto,
                                  const BarLimits& limits = {}) {
    auto t = loop_space_o2_table(spatial ? 3 : 2, max_degree, m_range, bo2, conv, path, limits);
    t.label = spatial ? "SH^O(2)_* below the first critical value, spatial (n = 3)"
                      : "SH^O(2)_* below the first critical value, planar (n = 2)";
    return t;
}

inline nlohmann::json to_json(const AbelianGroup& g) {
    nlohmann::json tors = nlohmann::json::array();
    for (const auto& t : g.torsion) {
        if (t <= Integer(std::numeric_limits<long long>::max()))
            tors.push_back(static_cast<long long>(t));
        else
            tors.push_back(t.str());
    }
    return {{"free_rank", g.free_rank}, {"torsion", tors}, {"group", g.str()}};
}

inline nlohmann::json to_json(const BettiTable& t) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : t.entries) {
        nlohmann::json j = to_json(e.group);
        j["degree"] = e.degree;
        j["truncated"] = e.truncated;
        entries.push_back(std::move(j));
    }
    return {{"n", t.n},
            {"action", to_string(t.action)},
            {"label", t.label},
            {"max_degree", t.max_degree},
            {"m_range", t.m_range},
            {"path", to_string(t.path)},
            {"convention", {{"tau_sign_rule", t.convention.tau_rule()}, {"refl_sign_rule", t.convention.refl_rule()}}},
            {"entries", entries}};
}

}  // namespace km::homology
