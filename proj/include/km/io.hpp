#pragma once

// Output helpers: JSON with doubles at 17 significant digits, trajectory
// CSV, small converters. All number formatting goes through snprintf in the
// "C" locale, so outputs do not depend on the environment.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "km/cr3bp.hpp"
#include "km/errors.hpp"
#include "km/integrator.hpp"

namespace km::io {

using Json = nlohmann::json;

inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline void indent_to(std::ostream& os, int indent, int depth) {
    if (indent < 0) return;
    os << '\n' << std::string(static_cast<std::size_t>(indent * depth), ' ');
}

inline void write_json(std::ostream& os, const Json& j, int indent, int depth) {
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ',';
                first = false;
                indent_to(os, indent, depth + 1);
                os << Json(it.key()).dump() << (indent >= 0 ? ": " : ":");
                write_json(os, it.value(), indent, depth + 1);
            }
            indent_to(os, indent, depth);
            os << '}';
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            // Arrays of scalars stay on one line.
            bool flat = true;
            for (const auto& e : j) flat = flat && !e.is_structured();
            os << '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << (flat && indent >= 0 ? ", " : ",");
                if (!flat) indent_to(os, indent, depth + 1);
                write_json(os, j[i], indent, depth + 1);
            }
            if (!flat) indent_to(os, indent, depth);
            os << ']';
            return;
        }
        case Json::value_t::number_float: {
            const double x = j.get<double>();
            if (std::isfinite(x))
                os << format_double(x);
            else
                os << "null";
            return;
        }
        default:
            os << j.dump();
    }
}

}  // namespace detail

// Serializes with object keys in sorted order (nlohmann's default map) and
// doubles printed as %.17g; non-finite doubles become null.
inline void write_json(std::ostream& os, const Json& j, int indent = 2) {
    detail::write_json(os, j, indent, 0);
    os << '\n';
}

inline std::string dump_json(const Json& j, int indent = 2) {
    std::ostringstream os;
    write_json(os, j, indent);
    return os.str();
}

inline Json to_json(const Vec& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

// Header t,q1..qn,p1..pn,H.
inline void write_trajectory_csv(std::ostream& os, const SystemParams& params, const Trajectory& traj) {
    const int n = params.n();
    os << 't';
    for (int i = 1; i <= n; ++i) os << ",q" << i;
    for (int i = 1; i <= n; ++i) os << ",p" << i;
    os << ",H\n";
    for (const auto& s : traj.samples) {
        os << format_double(s.t);
        for (int i = 0; i < n; ++i) os << ',' << format_double(s.state.q(i));
        for (int i = 0; i < n; ++i) os << ',' << format_double(s.state.p(i));
        os << ',' << format_double(hamiltonian(params, s.state)) << '\n';
    }
}

// Writes through a callback into path, mapping stream failures to IoError.
template <class F>
void write_file(const std::string& path, F&& emit) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    emit(f);
    f.flush();
    if (!f) throw IoError("write to " + path + " failed");
}

}  // namespace km::io
