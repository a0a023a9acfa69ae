#pragma once

// Lagrange points (critical points of the effective potential U), the first
// critical value kappa, and their lifts to rest points of the Hamiltonian flow.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "km/cr3bp.hpp"

namespace km {

enum class LagrangeLabel { L1, L2, L3, L4, L5 };

inline std::string to_string(LagrangeLabel l) {
    static const std::array<const char*, 5> names = {"L1", "L2", "L3", "L4", "L5"};
    return names[static_cast<int>(l)];
}

struct LagrangePoint {
    LagrangeLabel label;
    Vec position;
    double value;  // U(position)
};

// For mu = 0 the critical set of U is the unit circle in the (q1,q2)-plane.
struct CriticalCircle {
    double radius = 1.0;
    double value = -1.5;
};

struct LagrangeSet {
    std::vector<LagrangePoint> points;
    std::optional<CriticalCircle> circle;

    bool degenerate() const { return circle.has_value(); }
    const LagrangePoint& at(LagrangeLabel l) const { return points.at(static_cast<std::size_t>(l)); }
};

struct CriticalValueReport {
    double mu;
    double kappa;
    std::vector<std::pair<LagrangeLabel, double>> per_point_values;
};

struct EquilibriumOptions {
    double bracket_margin = 1e-9;
    double newton_tol = 1e-13;
    int newton_max_iter = 50;
};

namespace detail {

inline Vec on_axis(const SystemParams& params, double x) {
    Vec q = Vec::Zero(params.n());
    q(0) = x;
    return q;
}

inline double axis_slope(const SystemParams& params, double x) {
    return effective_potential_gradient(params, on_axis(params, x))(0);
}

// Bisection on a sign change of dU/dq1 along the axis.
inline double bisect_axis(const SystemParams& params, double lo, double hi) {
    double flo = axis_slope(params, lo);
    const double fhi = axis_slope(params, hi);
    if ((flo > 0) == (fhi > 0)) throw NumericalError("no sign change of dU/dq1 in collinear bracket");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        const double fm = axis_slope(params, mid);
        if (fm == 0.0) return mid;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Newton iteration on grad U = 0 in the (q1,q2)-plane; keeps the best iterate.
inline Vec newton_polish(const SystemParams& params, Vec q, const EquilibriumOptions& opts) {
    Vec best = q;
    double best_norm = effective_potential_gradient(params, q).norm();
    for (int it = 0; it < opts.newton_max_iter && best_norm > opts.newton_tol; ++it) {
        const Vec g = effective_potential_gradient(params, q);
        const Eigen::Matrix2d h = effective_potential_hessian(params, q).topLeftCorner<2, 2>();
        const Eigen::Vector2d step = h.fullPivLu().solve(g.head<2>());
        q.head<2>() -= step;
        const double nrm = effective_potential_gradient(params, q).norm();
        if (nrm < best_norm) {
            best = q;
            best_norm = nrm;
        } else if (it > 3) {
            break;
        }
    }
    return best;
}

}  // namespace detail

// The five Lagrange points for 0 < mu < 1, labeled L1 (between E and M),
// L2 (beyond E), L3 (beyond M), L4 (q2 > 0), L5 (q2 < 0). For mu = 0 the
// result is the critical circle instead.
inline LagrangeSet find_lagrange_points(const SystemParams& params, const EquilibriumOptions& opts = {}) {
    LagrangeSet out;
    const double mu = params.mu();
    if (mu == 0.0) {
        out.circle = CriticalCircle{};
        return out;
    }
    const double d = opts.bracket_margin;
    const std::array<std::pair<double, double>, 3> brackets = {
        std::pair{mu - 1.0 + d, mu - d}, std::pair{mu + d, mu + 2.0}, std::pair{mu - 3.0, mu - 1.0 - d}};
    const std::array<LagrangeLabel, 3> collinear = {LagrangeLabel::L1, LagrangeLabel::L2, LagrangeLabel::L3};
    for (std::size_t i = 0; i < 3; ++i) {
        const double x = detail::bisect_axis(params, brackets[i].first, brackets[i].second);
        Vec q = detail::newton_polish(params, detail::on_axis(params, x), opts);
        out.points.push_back({collinear[i], q, effective_potential(params, q)});
    }
    for (double sign : {1.0, -1.0}) {
        Vec q = Vec::Zero(params.n());
        q(0) = mu - 0.5;
        q(1) = sign * std::sqrt(3.0) / 2.0;
        q = detail::newton_polish(params, q, opts);
        out.points.push_back({sign > 0 ? LagrangeLabel::L4 : LagrangeLabel::L5, q, effective_potential(params, q)});
    }
    return out;
}

// kappa = U(L1) for 0 < mu < 1 and -3/2 for mu = 0.
inline CriticalValueReport first_critical_value(const SystemParams& params) {
    CriticalValueReport report{params.mu(), -1.5, {}};
    const auto set = find_lagrange_points(params);
    if (set.degenerate()) return report;
    for (const auto& p : set.points) report.per_point_values.emplace_back(p.label, p.value);
    report.kappa = set.at(LagrangeLabel::L1).value;
    return report;
}

// Rest point of the flow above a critical point of U: p = (-q2, q1, 0, ...).
inline PhaseState lift_to_phase(const LagrangePoint& point) {
    const Vec& q = point.position;
    Vec p = Vec::Zero(q.size());
    p(0) = -q(1);
    p(1) = q(0);
    return {q, p};
}

}  // namespace km
