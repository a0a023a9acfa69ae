#pragma once

// Command dispatch for the km tool. A RunConfig (command name plus a
// string parameter map) fully determines the outputs; the executable only
// turns argv and an optional config file into one.

#include <charconv>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "km/cr3bp.hpp"
#include "km/equilibria.hpp"
#include "km/errors.hpp"
#include "km/hill.hpp"
#include "km/homology/tables.hpp"
#include "km/integrator.hpp"
#include "km/io.hpp"
#include "km/moser.hpp"
#include "km/parallel.hpp"
#include "km/random.hpp"
#include "km/symmetry.hpp"

namespace km::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2, kIo = 3 };

struct RunConfig {
    std::string command;  // e.g. "hill", "moser check-vf", "homology group"
    std::map<std::string, std::string> params;
};

// Every parameter key the tool understands (flag name without dashes).
inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "mu",     "c",         "n",        "grid",     "format",   "action",    "max-deg", "m-range", "seed",
        "samples", "bases",    "rays",     "q",        "p",        "t-end",     "tol",     "q1",      "bracket",
        "group",  "m",         "tau-sign", "refl-sign", "tau-rule", "refl-rule", "path",    "spatial", "no-rho",
        "out",    "csv",       "svg",      "bo2",      "bounds",   "branch"};
    return keys;
}

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c = {
        "lagrange",  "hill",      "orbit",      "moser check-vf", "moser embed",       "symmetric",
        "observe",   "starshape", "convexity",  "homology group", "homology loopspace", "homology corollary"};
    return c;
}

inline std::string normalize_key(std::string k) {
    for (auto& ch : k)
        if (ch == '_') ch = '-';
    return k;
}

// key = value lines; '#' starts a comment; blank lines ignored.
inline std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& origin = "config") {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = normalize_key(trim(line.substr(0, eq)));
        if (!known_keys().count(key))
            throw ValidationError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

inline std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read config file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path);
}

namespace detail {

using io::Json;

class Params {
public:
    explicit Params(const std::map<std::string, std::string>& m) : m_(m) {
        for (const auto& [k, v] : m_)
            if (!known_keys().count(k)) throw ValidationError("unknown parameter '" + k + "'");
    }

    bool has(const std::string& k) const { return m_.count(k) > 0; }

    std::string str(const std::string& k, const std::string& def) const {
        const auto it = m_.find(k);
        return it == m_.end() ? def : it->second;
    }
    std::string str(const std::string& k) const {
        const auto it = m_.find(k);
        if (it == m_.end()) throw ValidationError("missing required parameter --" + k);
        return it->second;
    }

    double num(const std::string& k, std::optional<double> def = std::nullopt) const {
        if (!has(k)) {
            if (def) return *def;
            throw ValidationError("missing required parameter --" + k);
        }
        return parse_double(k, m_.at(k));
    }

    long long integer(const std::string& k, std::optional<long long> def = std::nullopt) const {
        if (!has(k)) {
            if (def) return *def;
            throw ValidationError("missing required parameter --" + k);
        }
        const std::string& s = m_.at(k);
        long long v = 0;
        const char* b = s.data();
        const char* e = b + s.size();
        if (b != e && *b == '+') ++b;
        const auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || ptr != e) throw ValidationError("--" + k + ": not an integer: '" + s + "'");
        return v;
    }

    int small_int(const std::string& k, std::optional<long long> def, long long lo, long long hi) const {
        const long long v = integer(k, def);
        if (v < lo || v > hi)
            throw ValidationError("--" + k + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return static_cast<int>(v);
    }

    bool flag(const std::string& k) const {
        if (!has(k)) return false;
        const std::string& s = m_.at(k);
        if (s.empty() || s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw ValidationError("--" + k + ": expected a boolean, got '" + s + "'");
    }

    std::vector<double> list(const std::string& k) const {
        std::vector<double> out;
        std::string s = str(k);
        std::size_t start = 0;
        while (start <= s.size()) {
            const auto comma = s.find(',', start);
            const std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            out.push_back(parse_double(k, item));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return out;
    }

    Vec vec(const std::string& k, int n) const {
        const auto v = list(k);
        if (static_cast<int>(v.size()) != n)
            throw ValidationError("--" + k + " needs " + std::to_string(n) + " comma-separated components");
        Vec out(n);
        for (int i = 0; i < n; ++i) out(i) = v[static_cast<std::size_t>(i)];
        return out;
    }

    std::uint64_t seed() const {
        const long long s = integer("seed", 1);
        if (s < 0) throw ValidationError("--seed must be >= 0");
        return static_cast<std::uint64_t>(s);
    }

    SystemParams system(int default_n = 2) const {
        return SystemParams(small_int("n", default_n, 2, 64), num("mu", 0.0));
    }

private:
    static double parse_double(const std::string& k, const std::string& raw) {
        std::string s = raw;
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
        double v = 0.0;
        const char* b = s.data();
        const char* e = b + s.size();
        if (b != e && *b == '+') ++b;
        const auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || ptr != e || !std::isfinite(v))
            throw ValidationError("--" + k + ": not a finite number: '" + raw + "'");
        return v;
    }

    const std::map<std::string, std::string>& m_;
};

// What a command produced: the primary document plus side files.
struct Output {
    std::string primary;  // written to --out or stdout
    std::vector<std::string> files;
};

inline std::string json_text(const Json& j) { return io::dump_json(j); }

template <class F>
std::string to_text(F&& emit) {
    std::ostringstream os;
    emit(os);
    return os.str();
}

inline void side_file(const Params& p, const std::string& key, Output& out, const std::function<void(std::ostream&)>& emit) {
    if (!p.has(key)) return;
    const std::string path = p.str(key);
    io::write_file(path, emit);
    out.files.push_back(path);
}

inline std::string format_of(const Params& p, const std::string& def, std::initializer_list<const char*> allowed) {
    const std::string f = p.str("format", def);
    for (const char* a : allowed)
        if (f == a) return f;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    throw ValidationError("--format must be one of: " + list);
}

// ---------------------------------------------------------------- commands

inline Output cmd_lagrange(const Params& p) {
    const SystemParams sys = p.system();
    const std::string fmt = format_of(p, "json", {"json", "csv"});
    const auto set = find_lagrange_points(sys);
    const auto crit = first_critical_value(sys);
    Output out;
    if (fmt == "csv") {
        out.primary = to_text([&](std::ostream& os) {
            os << "label";
            for (int i = 1; i <= sys.n(); ++i) os << ",q" << i;
            os << ",U\n";
            for (const auto& pt : set.points) {
                os << to_string(pt.label);
                for (int i = 0; i < sys.n(); ++i) os << ',' << io::format_double(pt.position(i));
                os << ',' << io::format_double(pt.value) << '\n';
            }
        });
        return out;
    }
    Json pts = Json::array();
    for (const auto& pt : set.points)
        pts.push_back({{"label", to_string(pt.label)}, {"position", io::to_json(pt.position)}, {"value", pt.value}});
    Json j{{"mu", sys.mu()}, {"n", sys.n()}, {"kappa", crit.kappa}, {"points", pts}};
    if (set.circle) j["critical_circle"] = {{"radius", set.circle->radius}, {"value", set.circle->value}};
    out.primary = json_text(j);
    return out;
}

inline Output cmd_hill(const Params& p) {
    const SystemParams sys(2, p.num("mu", 0.0));
    const double c = p.num("c");
    HillGridSpec spec;
    spec.resolution = p.small_int("grid", 400, 16, 8192);
    if (p.has("bounds")) {
        const auto b = p.list("bounds");
        if (b.size() != 4) throw ValidationError("--bounds needs xmin,xmax,ymin,ymax");
        spec.xmin = b[0];
        spec.xmax = b[1];
        spec.ymin = b[2];
        spec.ymax = b[3];
    }
    spec.validate();
    const std::string fmt = format_of(p, "json", {"json", "csv", "svg"});
    const HillGrid grid = classify_components(sys, c, spec);
    Output out;
    side_file(p, "csv", out, [&](std::ostream& os) { write_hill_csv(os, grid); });
    side_file(p, "svg", out, [&](std::ostream& os) { write_hill_svg(os, grid); });
    if (fmt == "csv") {
        out.primary = to_text([&](std::ostream& os) { write_hill_csv(os, grid); });
        return out;
    }
    if (fmt == "svg") {
        out.primary = to_text([&](std::ostream& os) { write_hill_svg(os, grid); });
        return out;
    }
    Json comps = Json::array();
    for (const auto& comp : grid.components)
        comps.push_back({{"id", comp.id},
                         {"cells", comp.cells},
                         {"bounded", comp.bounded},
                         {"contains_earth", comp.contains_earth},
                         {"contains_moon", comp.contains_moon}});
    Json j{{"mu", sys.mu()},
           {"c", c},
           {"kappa", first_critical_value(sys).kappa},
           {"grid", spec.resolution},
           {"bounds", {spec.xmin, spec.xmax, spec.ymin, spec.ymax}},
           {"component_count", grid.count()},
           {"bounded_count", grid.bounded_count()},
           {"components", comps}};
    out.primary = json_text(j);
    return out;
}

inline Output cmd_orbit(const Params& p) {
    const SystemParams sys = p.system();
    const PhaseState start{p.vec("q", sys.n()), p.vec("p", sys.n())};
    const double t_end = p.num("t-end", 10.0);
    const double tol = p.num("tol", 1e-12);
    const std::string fmt = format_of(p, "csv", {"csv", "json"});
    Trajectory traj;
    if (p.has("samples")) {
        const int samples = p.small_int("samples", std::nullopt, 1, 10'000'000);
        std::vector<double> times(static_cast<std::size_t>(samples) + 1);
        for (int k = 0; k <= samples; ++k) times[static_cast<std::size_t>(k)] = t_end * k / samples;
        traj = integrate_at(sys, start, times, tol);
    } else {
        traj = integrate(sys, start, t_end, tol);
    }
    Output out;
    side_file(p, "csv", out, [&](std::ostream& os) { io::write_trajectory_csv(os, sys, traj); });
    if (fmt == "csv") {
        out.primary = to_text([&](std::ostream& os) { io::write_trajectory_csv(os, sys, traj); });
        return out;
    }
    const auto& last = traj.back().state;
    Json j{{"mu", sys.mu()},
           {"n", sys.n()},
           {"t_end", t_end},
           {"tol", tol},
           {"samples", traj.size()},
           {"H0", hamiltonian(sys, start)},
           {"jacobi_drift", traj.jacobi_drift},
           {"final", {{"t", traj.back().t}, {"q", io::to_json(last.q)}, {"p", io::to_json(last.p)}}}};
    out.primary = json_text(j);
    return out;
}

inline Output cmd_moser_check_vf(const Params& p) {
    const double c = p.num("c", -0.5);
    const int n = p.small_int("n", 2, 2, 64);
    const int samples = p.small_int("samples", 1000, 1, 100'000'000);
    const std::uint64_t seed = p.seed();
    format_of(p, "json", {"json"});
    const double res = vf_identity_residual(c, samples, n, seed);
    // K = 1 on the energy surface, same sampling.
    Rng rng(seed);
    double k_dev = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double r = rng.uniform(0.02, 0.98) / std::abs(c);
        const Vec q = r * rng.unit_vec(n);
        const Vec pv = std::sqrt(2.0 * (c + 1.0 / r)) * rng.unit_vec(n);
        k_dev = std::max(k_dev, std::abs(regularized_kepler_hamiltonian(q, pv, c) - 1.0));
    }
    Json j{{"c", c},
           {"n", n},
           {"samples", samples},
           {"seed", seed},
           {"vf_identity_residual", res},
           {"k_level_deviation", k_dev},
           {"pass", res <= 1e-10 && k_dev <= 1e-12}};
    return {json_text(j), {}};
}

inline Output cmd_moser_embed(const Params& p) {
    const int n = p.small_int("n", 2, 2, 64);
    const int samples = p.small_int("samples", 4096, 8, 10'000'000);
    const double tol = p.num("tol", 1e-13);
    format_of(p, "json", {"json"});
    Vec q, pv;
    if (p.has("q") || p.has("p")) {
        q = p.vec("q", n);
        pv = p.vec("p", n);
    } else {
        Rng rng(p.seed());
        const double r = rng.uniform(0.2, 1.8);
        q = r * rng.unit_vec(n);
        pv = std::sqrt(2.0 / r - 1.0) * rng.unit_vec(n);
    }
    const double dist = kepler_embedding_distance(q, pv, samples, tol);
    Json j{{"n", n},
           {"q", io::to_json(q)},
           {"p", io::to_json(pv)},
           {"energy", kepler_hamiltonian(q, pv)},
           {"k_value", regularized_kepler_hamiltonian(q, pv, -0.5)},
           {"samples", samples},
           {"hausdorff_bound", dist},
           {"pass", dist <= 1e-6}};
    return {json_text(j), {}};
}

inline SymmetricOrbit shoot_from(const Params& p, const SystemParams& sys, double c) {
    const double q1 = p.num("q1");
    const double e = sys.earth()(0);
    std::pair<double, double> bracket;
    if (p.has("bracket")) {
        const auto b = p.list("bracket");
        if (b.size() != 2) throw ValidationError("--bracket needs lo,hi");
        bracket = {b[0], b[1]};
    } else {
        const double a = e + 0.5 * (q1 - e), b = e + 1.5 * (q1 - e);
        bracket = {std::min(a, b), std::max(a, b)};
    }
    ShootingOptions opts;
    opts.tol = p.num("tol", opts.tol);
    const std::string branch = p.str("branch", "retrograde");
    if (branch == "retrograde")
        opts.branch = OrbitBranch::Retrograde;
    else if (branch == "direct")
        opts.branch = OrbitBranch::Direct;
    else
        throw ValidationError("--branch must be retrograde or direct");
    return shoot_symmetric_orbit(sys, c, q1, bracket, opts);
}

inline Json orbit_json(const SymmetricOrbit& o) {
    return {{"mu", o.mu},           {"c", o.c},           {"q1", o.q1()},           {"p2", o.p2()},
            {"half_period", o.half_period}, {"period", o.period()}, {"residual", o.residual}, {"iterations", o.iterations}};
}

inline Output cmd_symmetric(const Params& p) {
    const SystemParams sys(2, p.num("mu", 0.0));
    const double c = p.num("c");
    format_of(p, "json", {"json"});
    const SymmetricOrbit orbit = shoot_from(p, sys, c);
    Output out;
    side_file(p, "csv", out, [&](std::ostream& os) { io::write_trajectory_csv(os, sys, orbit.trajectory); });
    Json j = orbit_json(orbit);
    if (sys.mu() == 0.0) {
        try {
            const double r = kepler_retrograde_radius(c);
            j["closed_form_period"] = kepler_retrograde_period(r);
        } catch (const NoSolutionError&) {
        }
    }
    out.primary = json_text(j);
    return out;
}

inline Output cmd_observe(const Params& p) {
    const SystemParams sys(2, p.num("mu", 0.0));
    const double c = p.num("c");
    format_of(p, "json", {"json"});
    const SymmetricOrbit orbit = shoot_from(p, sys, c);
    ObservationOptions opts;
    opts.samples = p.small_int("samples", opts.samples, 8, 1'000'000);
    opts.apply_rho = !p.flag("no-rho");
    const auto rep = verify_observation(orbit, sys, opts);
    Output out;
    side_file(p, "csv", out, [&](std::ostream& os) { io::write_trajectory_csv(os, sys, orbit.trajectory); });
    Json j{{"residual", rep.residual}, {"phase", rep.phase}, {"samples", rep.samples}, {"twisted", rep.twisted},
           {"orbit", orbit_json(orbit)}};
    out.primary = json_text(j);
    return out;
}

inline Output cmd_starshape(const Params& p) {
    const SystemParams sys = p.system();
    const double c = p.num("c");
    format_of(p, "json", {"json"});
    StarshapeOptions opts;
    opts.seed = p.seed();
    const int bases = p.small_int("bases", 200, 1, 1'000'000);
    const int rays = p.small_int("rays", 64, 1, 1'000'000);
    const auto rep = starshape_check(sys, c, bases, rays, opts);
    Json fails = Json::array();
    for (const auto& f : rep.failures)
        fails.push_back({{"base", io::to_json(f.base)},
                         {"ray", io::to_json(f.ray)},
                         {"chart", to_string(f.chart)},
                         {"crossings", f.crossings}});
    Json j{{"pass", rep.pass},     {"checked", rep.checked}, {"failed", rep.failed}, {"mu", rep.mu},
           {"c", rep.c},           {"kappa", rep.kappa},     {"n", rep.n},           {"bases", bases},
           {"rays", rays},         {"seed", opts.seed},      {"failures", fails}};
    return {json_text(j), {}};
}

inline Output cmd_convexity(const Params& p) {
    const SystemParams sys = p.system();
    const double c = p.num("c");
    format_of(p, "json", {"json"});
    ConvexityOptions opts;
    opts.scan.seed = p.seed();
    opts.rays = p.small_int("rays", opts.rays, 1, 1'000'000);
    const int bases = p.small_int("bases", 64, 1, 1'000'000);
    const auto rep = fiber_convexity_check(sys, c, bases, opts);
    Json fails = Json::array();
    for (const auto& f : rep.failures)
        fails.push_back({{"base", io::to_json(f.base)},
                         {"point", io::to_json(f.point)},
                         {"chart", to_string(f.chart)},
                         {"curvature", f.curvature}});
    Json j{{"pass", rep.pass},
           {"checked", rep.checked},
           {"min_curvature", rep.min_curvature},
           {"max_symmetry_residual", rep.max_symmetry_residual},
           {"mu", rep.mu},
           {"c", rep.c},
           {"bases", bases},
           {"rays", opts.rays},
           {"seed", opts.scan.seed},
           {"failures", fails}};
    return {json_text(j), {}};
}

inline homology::HomologyPath path_of(const Params& p) {
    const std::string s = p.str("path", "auto");
    using homology::HomologyPath;
    if (s == "auto") return HomologyPath::Auto;
    if (s == "bar") return HomologyPath::Bar;
    if (s == "periodic") return HomologyPath::Periodic;
    if (s == "product") return HomologyPath::Product;
    throw ValidationError("--path must be auto, bar, periodic or product");
}

inline int sign_of(const Params& p, const std::string& k) {
    const long long v = p.integer(k, 1);
    if (v != 1 && v != -1) throw ValidationError("--" + k + " must be 1 or -1");
    return static_cast<int>(v);
}

inline Output cmd_homology_group(const Params& p) {
    using namespace homology;
    format_of(p, "json", {"json"});
    const std::string kind = p.str("group", "cyclic");
    const int m = p.small_int("m", std::nullopt, 1, 1'000'000);
    FiniteGroup g = kind == "cyclic"     ? FiniteGroup::cyclic(m)
                    : kind == "dihedral" ? FiniteGroup::dihedral(m)
                                         : throw ValidationError("--group must be cyclic or dihedral");
    const Character chi{sign_of(p, "tau-sign"), sign_of(p, "refl-sign")};
    const int max_deg = p.small_int("max-deg", 4, 0, 1000);
    const auto path = path_of(p);
    const auto h = group_homology(g, chi, max_deg, path);
    Json degs = Json::array();
    for (std::size_t d = 0; d < h.size(); ++d) {
        Json e = to_json(h[d]);
        e["degree"] = d;
        degs.push_back(e);
    }
    Json j{{"group", g.name()},
           {"order", g.order()},
           {"character", {{"tau_sign", chi.tau_sign}, {"refl_sign", chi.refl_sign}}},
           {"path", to_string(path)},
           {"homology", degs}};
    return {json_text(j), {}};
}

inline homology::SignConvention convention_of(const Params& p) {
    homology::SignConvention conv;
    conv.tau = homology::parse_sign_rule(p.str("tau-rule", "koszul"));
    conv.refl = homology::parse_sign_rule(p.str("refl-rule", "koszul"));
    return conv;
}

inline homology::GradedGroupData bo2_of(const Params& p) {
    return homology::load_bo2_table(p.str("bo2", homology::default_bo2_path()));
}

inline Output cmd_homology_loopspace(const Params& p) {
    using namespace homology;
    format_of(p, "json", {"json"});
    const int n = p.small_int("n", 2, 2, 1000);
    const int max_deg = p.small_int("max-deg", 6, 0, 1000);
    const int m_range = p.small_int("m-range", 4, 0, 1000);
    const std::string action = p.str("action", "o2");
    const auto conv = convention_of(p);
    const auto path = path_of(p);
    BettiTable t;
    if (action == "so2")
        t = loop_space_so2_table(n, max_deg, m_range, conv, path);
    else if (action == "o2")
        t = loop_space_o2_table(n, max_deg, m_range, bo2_of(p), conv, path);
    else
        throw ValidationError("--action must be so2 or o2");
    return {json_text(to_json(t)), {}};
}

inline Output cmd_homology_corollary(const Params& p) {
    using namespace homology;
    format_of(p, "json", {"json"});
    const int max_deg = p.small_int("max-deg", 6, 0, 1000);
    const int m_range = p.small_int("m-range", 4, 0, 1000);
    const auto t = corollary_table(max_deg, m_range, bo2_of(p), p.flag("spatial"), convention_of(p), path_of(p));
    return {json_text(to_json(t)), {}};
}

inline Output dispatch(const RunConfig& cfg, const Params& p) {
    static const std::map<std::string, std::function<Output(const Params&)>> table = {
        {"lagrange", cmd_lagrange},
        {"hill", cmd_hill},
        {"orbit", cmd_orbit},
        {"moser check-vf", cmd_moser_check_vf},
        {"moser embed", cmd_moser_embed},
        {"symmetric", cmd_symmetric},
        {"observe", cmd_observe},
        {"starshape", cmd_starshape},
        {"convexity", cmd_convexity},
        {"homology group", cmd_homology_group},
        {"homology loopspace", cmd_homology_loopspace},
        {"homology corollary", cmd_homology_corollary}};
    const auto it = table.find(cfg.command);
    if (it == table.end()) throw ValidationError("unknown command '" + cfg.command + "'");
    return it->second(p);
}

}  // namespace detail

struct RunResult {
    int exit_code = kOk;
    std::string error;
    std::vector<std::string> files;
    double wall_time = 0.0;
};

// Runs one command. The primary document goes to --out if given, else to
// out; a JSON manifest (inputs, version, seed, threads, wall time, outcome)
// goes to log when non-null.
inline RunResult run(const RunConfig& cfg, std::ostream& out, std::ostream* log = nullptr) {
    using detail::Json;
    RunResult res;
    const auto t0 = std::chrono::steady_clock::now();
    Json witness;
    try {
        const detail::Params p(cfg.params);
        detail::Output o = detail::dispatch(cfg, p);
        if (p.has("out")) {
            io::write_file(p.str("out"), [&](std::ostream& f) { f << o.primary; });
            o.files.insert(o.files.begin(), p.str("out"));
        } else {
            out << o.primary;
            out.flush();
        }
        res.files = o.files;
    } catch (const CollisionError& e) {
        res.exit_code = kNumerical;
        res.error = e.what();
        witness = {{"time", e.time}, {"distance", e.distance}};
    } catch (const NumericalError& e) {
        res.exit_code = kNumerical;
        res.error = e.what();
    } catch (const ValidationError& e) {
        res.exit_code = kValidation;
        res.error = e.what();
    } catch (const IoError& e) {
        res.exit_code = kIo;
        res.error = e.what();
    }
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (log) {
        Json params = Json::object();
        for (const auto& [k, v] : cfg.params) params[k] = v;
        Json m{{"tool", "km"},
               {"version", kVersion},
               {"command", cfg.command},
               {"params", params},
               {"seed", cfg.params.count("seed") ? cfg.params.at("seed") : "1"},
               {"threads", thread_count()},
               {"wall_time_s", res.wall_time},
               {"outputs", res.files},
               {"exit_code", res.exit_code}};
        if (!res.error.empty()) m["error"] = res.error;
        if (!witness.is_null()) m["witness"] = witness;
        *log << io::dump_json(Json{{"manifest", m}});
    }
    return res;
}

}  // namespace km::cli
