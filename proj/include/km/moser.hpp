#pragma once

// Moser regularization.
//
// Kepler problem H = |p|^2/2 - 1/|q| and its regularization
// K_c = |q|(H - c) + 1, the exchange of base and fiber (q,p) -> (-p,q),
// and the cotangent lift of stereographic projection to T*S^n, under which
// the length function of the round metric reads (|u|^2 + 1)|v|/2.
//
// Charts: the north chart projects from (0,...,0,1), so u = 0 is the south
// pole and |u| -> infinity is the north pole, which carries the collision
// fiber. The south chart projects from (0,...,0,-1). Transition (involutive):
//   u' = u/|u|^2,  v' = |u|^2 v - 2(u.v)u.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "km/cr3bp.hpp"
#include "km/errors.hpp"
#include "km/equilibria.hpp"
#include "km/hill.hpp"
#include "km/integrator.hpp"
#include "km/parallel.hpp"
#include "km/random.hpp"

namespace km {

// ---------------------------------------------------------------- Kepler

inline double kepler_hamiltonian(const Vec& q, const Vec& p) {
    const double r = q.norm();
    if (r == 0.0) throw DomainError("Kepler Hamiltonian is singular at q = 0");
    return 0.5 * p.squaredNorm() - 1.0 / r;
}

inline Vec kepler_vector_field(const Vec& q, const Vec& p) {
    const double r = q.norm();
    if (r == 0.0) throw DomainError("Kepler vector field is singular at q = 0");
    Vec x(2 * q.size());
    x << p, -q / (r * r * r);
    return x;
}

namespace detail {
inline void check_negative_energy(double c) {
    if (!(c < 0.0)) throw ValidationError("regularization needs negative energy c, got " + std::to_string(c));
}
}  // namespace detail

// K_c = |q|(H - c) + 1 evaluated from this defining expression.
inline double regularized_kepler_hamiltonian(const Vec& q, const Vec& p, double c) {
    detail::check_negative_energy(c);
    return q.norm() * (kepler_hamiltonian(q, p) - c) + 1.0;
}

// The same function simplified: (|p|^2 + 2|c|)|q|/2.
inline double regularized_kepler_closed_form(const Vec& q, const Vec& p, double c) {
    detail::check_negative_energy(c);
    return 0.5 * (p.squaredNorm() + 2.0 * std::abs(c)) * q.norm();
}

// X_{K_c} from the analytic gradient of the defining expression.
inline Vec regularized_kepler_vector_field(const Vec& q, const Vec& p, double c) {
    detail::check_negative_energy(c);
    const double r = q.norm();
    const double h = kepler_hamiltonian(q, p);
    Vec x(2 * q.size());
    x << r * p, -((h - c) / r + 1.0 / (r * r)) * q;
    return x;
}

struct CanonicalPair {
    Vec first;
    Vec second;
};

// Scale factor s = sqrt(2|c|) of the energy rescaling.
inline double scaling_factor(double c) {
    detail::check_negative_energy(c);
    return std::sqrt(2.0 * std::abs(c));
}

// phi(q', p') = (q'/s, s p'). It is symplectic and
//   K_c(phi(q', p')) = s (|p'|^2 + 1)|q'|/2,
// so phi carries the level set {K_c = 1} to the level set {(|p|^2+1)|q|/2 = 1/s}
// of the c = -1/2 length function.
inline CanonicalPair scaling_map(const Vec& q, const Vec& p, double c) {
    const double s = scaling_factor(c);
    return {q / s, s * p};
}

inline CanonicalPair inverse_scaling_map(const Vec& q, const Vec& p, double c) {
    const double s = scaling_factor(c);
    return {s * q, p / s};
}

// Length function of the round metric in chart coordinates.
inline double chart_length(const Vec& u, const Vec& v) { return 0.5 * (u.squaredNorm() + 1.0) * v.norm(); }

// (q, p) -> (u, v) = (-p, q).
inline CanonicalPair switch_map(const Vec& q, const Vec& p) { return {-p, q}; }

inline CanonicalPair switch_map_inverse(const Vec& u, const Vec& v) { return {v, -u}; }

// (q, p) -> (u, v) = (-p, q - E).
inline CanonicalPair cr3bp_shift_map(const SystemParams& params, const Vec& q, const Vec& p) {
    return {-p, q - params.earth()};
}

inline PhaseState cr3bp_shift_inverse(const SystemParams& params, const Vec& u, const Vec& v) {
    return {v + params.earth(), -u};
}

// ---------------------------------------------------------------- sphere

enum class Chart { North, South };

inline const char* to_string(Chart c) { return c == Chart::North ? "north" : "south"; }

struct ChartPoint {
    Vec u;
    Vec v;
    Chart chart = Chart::North;
};

// Point of T*S^n in R^{n+1} x R^{n+1}; the covector is identified with a
// tangent vector by the round metric.
struct SphereCotangent {
    Vec x;
    Vec y;

    int n() const { return static_cast<int>(x.size()) - 1; }
};

inline SphereCotangent stereographic_lift(const ChartPoint& cp) {
    const Eigen::Index n = cp.u.size();
    if (cp.v.size() != n) throw ValidationError("chart point has mismatched dimensions");
    const double s = cp.u.squaredNorm();
    const double uv = cp.u.dot(cp.v);
    SphereCotangent out{Vec(n + 1), Vec(n + 1)};
    out.x.head(n) = 2.0 / (1.0 + s) * cp.u;
    out.y.head(n) = 0.5 * (1.0 + s) * cp.v - uv * cp.u;
    if (cp.chart == Chart::North) {
        out.x(n) = (s - 1.0) / (s + 1.0);
        out.y(n) = uv;
    } else {
        out.x(n) = (1.0 - s) / (1.0 + s);
        out.y(n) = -uv;
    }
    return out;
}

inline ChartPoint stereographic_project(const SphereCotangent& sc, Chart chart) {
    const Eigen::Index n = sc.x.size() - 1;
    const double sign = chart == Chart::North ? 1.0 : -1.0;
    const double denom = 1.0 - sign * sc.x(n);
    if (!(denom > 0.0)) throw DomainError(std::string("base point is the excluded pole of the ") + to_string(chart) + " chart");
    ChartPoint cp;
    cp.chart = chart;
    cp.u = sc.x.head(n) / denom;
    const double s = cp.u.squaredNorm();
    // v = J^T y with J the derivative of the inverse projection.
    cp.v = 2.0 / (1.0 + s) * sc.y.head(n) +
           sign * 4.0 / ((1.0 + s) * (1.0 + s)) * (sc.y(n) - sign * cp.u.dot(sc.y.head(n))) * cp.u;
    return cp;
}

inline ChartPoint chart_transition(const ChartPoint& cp) {
    const double s = cp.u.squaredNorm();
    if (s == 0.0) throw DomainError("chart center is the excluded pole of the other chart");
    ChartPoint out;
    out.chart = cp.chart == Chart::North ? Chart::South : Chart::North;
    out.u = cp.u / s;
    out.v = s * cp.v - 2.0 * cp.u.dot(cp.v) * cp.u;
    return out;
}

// Geodesic flow of |y|^2/2: great-circle motion with speed |y|.
inline SphereCotangent geodesic_flow(const SphereCotangent& start, double t) {
    const double w = start.y.norm();
    if (w == 0.0) throw ValidationError("geodesic flow needs a nonzero covector");
    const Vec yhat = start.y / w;
    const double ct = std::cos(w * t), st = std::sin(w * t);
    return {ct * start.x + st * yhat, w * (-st * start.x + ct * yhat)};
}

// Lift of a chart point, choosing the chart in which the base lies in the
// closed hemisphere opposite to the excluded pole.
inline SphereCotangent lift_best_chart(const Vec& u, const Vec& v) {
    ChartPoint cp{u, v, Chart::North};
    if (u.squaredNorm() > 1.0) cp = chart_transition(cp);
    return stereographic_lift(cp);
}

// ------------------------------------------------------ Kepler checks

// max over samples of |X_{K_c} - |q| X_H| / |X_H| for points sampled on
// H^{-1}(c): uniform direction, radius uniform in [0.02, 0.98]/|c|, momentum of
// the matching length in a uniform direction.
inline double vf_identity_residual(double c, int samples, int n = 2, std::uint64_t seed = 1) {
    detail::check_negative_energy(c);
    if (samples < 1) throw ValidationError("samples must be positive");
    Rng rng(seed);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double r = rng.uniform(0.02, 0.98) / std::abs(c);
        const Vec q = r * rng.unit_vec(n);
        const Vec p = std::sqrt(2.0 * (c + 1.0 / r)) * rng.unit_vec(n);
        const Vec xh = kepler_vector_field(q, p);
        const Vec xk = regularized_kepler_vector_field(q, p, c);
        worst = std::max(worst, (xk - q.norm() * xh).norm() / xh.norm());
    }
    return worst;
}

// Integrates the K-flow (c = -1/2) from a point of H^{-1}(-1/2), regularizes
// every sample through the switch map and the stereographic lift, and
// returns the largest distance to the unit-speed great circle through the
// first regularized point. On K^{-1}(1) the lifted covector has unit length,
// so K-time is arclength along the geodesic and the pointwise distance at
// equal parameters bounds the Hausdorff distance of the two traces.
inline double kepler_embedding_distance(const Vec& q0, const Vec& p0, int samples = 4096, double tol = 1e-13) {
    if (std::abs(kepler_hamiltonian(q0, p0) + 0.5) > 1e-12)
        throw ValidationError("start point must lie on H = -1/2");
    IntegratorOptions opts;
    opts.tol = tol;
    opts.collision_floor = 1e-9;
    const Eigen::Index n = q0.size();
    FlowIntegrator integ(
        [n](const Vec& w) { return regularized_kepler_vector_field(w.head(n), w.tail(n), -0.5); }, opts,
        [n](const Vec& w) { return w.head(n).norm(); });
    std::vector<double> times(static_cast<std::size_t>(samples) + 1);
    for (int k = 0; k <= samples; ++k) times[static_cast<std::size_t>(k)] = 2.0 * std::numbers::pi * k / samples;
    Vec w0(2 * n);
    w0 << q0, p0;
    const auto states = integ.solve_at(w0, times);
    const auto first = switch_map(q0, p0);
    const SphereCotangent start = lift_best_chart(first.first, first.second);
    double worst = 0.0;
    for (std::size_t k = 0; k < states.size(); ++k) {
        const auto uv = switch_map(states[k].head(n), states[k].tail(n));
        const SphereCotangent sc = lift_best_chart(uv.first, uv.second);
        worst = std::max(worst, (sc.x - geodesic_flow(start, times[k]).x).norm());
    }
    return worst;
}

// ------------------------------------------------------- CR3BP

// iota(phi(state)) for a state of the earth component: shift map followed by
// the stereographic lift, in the chart where the base is not near the
// excluded pole.
inline SphereCotangent regularize_cr3bp_point(const SystemParams& params, const PhaseState& state) {
    const auto uv = cr3bp_shift_map(params, state.q, state.p);
    return lift_best_chart(uv.first, uv.second);
}

// Inverse of regularize_cr3bp_point away from the collision fiber.
inline PhaseState unregularize(const SystemParams& params, const SphereCotangent& sc) {
    const Chart chart = sc.x(sc.n()) <= 0.0 ? Chart::North : Chart::South;
    ChartPoint cp = stereographic_project(sc, chart);
    if (chart == Chart::South) cp = chart_transition(cp);
    return cr3bp_shift_inverse(params, cp.u, cp.v);
}

namespace detail {

constexpr int kMaxFiberDim = 16;

// G = |q - E|(H - c) written in chart coordinates (u, v) of the shifted and
// switched phase space. G < 0 at the fiber origin (the collision q = E) and
// G = 0 exactly on the regularized energy surface. In the south chart
// q = E + s'v' - 2(u'.v')u' and |q - E| = s'|v'| with s' = |u'|^2, which keeps
// G finite over the collision fiber u' = 0.
inline double fiber_defining_function(const SystemParams& params, double c, Chart chart, const double* u,
                                      const double* v) {
    const int n = params.n();
    const double mu = params.mu();
    const double ex = params.earth()(0);
    double q[kMaxFiberDim] = {};
    double su = 0.0, uv = 0.0, vv = 0.0;
    for (int i = 0; i < n; ++i) {
        su += u[i] * u[i];
        uv += u[i] * v[i];
        vv += v[i] * v[i];
    }
    const double vn = std::sqrt(vv);
    double dist_e;
    if (chart == Chart::North) {
        for (int i = 0; i < n; ++i) q[i] = v[i];
        dist_e = vn;
    } else {
        for (int i = 0; i < n; ++i) q[i] = su * v[i] - 2.0 * uv * u[i];
        dist_e = su * vn;
    }
    q[0] += ex;
    double moon_term = 0.0;
    if (mu > 0.0) {
        double dm2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = q[i] - (i == 0 ? ex - 1.0 : 0.0);
            dm2 += d * d;
        }
        moon_term = -mu / std::sqrt(dm2);
    }
    // |q-E| L with p = -u (north) or p = -u'/s' (south).
    const double lever = u[1] * q[0] - u[0] * q[1];
    if (chart == Chart::North)
        return dist_e * (0.5 * su + moon_term - c + lever) - (1.0 - mu);
    return 0.5 * vn - (1.0 - mu) + dist_e * (moon_term - c) + vn * lever;
}

// Fiber over a base point of S^n: chart, chart base coordinate u and the
// map from covectors to chart fiber coordinates.
struct FiberChart {
    Chart chart;
    Vec u;
};

inline FiberChart fiber_chart_for(const Vec& x) {
    const Eigen::Index n = x.size() - 1;
    if (x(n) <= 0.0) return {Chart::North, x.head(n) / (1.0 - x(n))};
    return {Chart::South, x.head(n) / (1.0 + x(n))};
}

// Deterministic base points: a Fibonacci lattice on S^2 turned by a seeded
// random rotation, or seeded uniform points on S^n for n >= 3.
inline std::vector<Vec> sphere_base_points(int n, int count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec> pts;
    pts.reserve(static_cast<std::size_t>(count));
    if (n == 2) {
        Eigen::Vector4d qv(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        qv.normalize();
        const Eigen::Matrix3d rot = Eigen::Quaterniond(qv(0), qv(1), qv(2), qv(3)).toRotationMatrix();
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < count; ++k) {
            const double z = 1.0 - (2.0 * k + 1.0) / count;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const Eigen::Vector3d p(r * std::cos(golden * k), r * std::sin(golden * k), z);
            pts.emplace_back(rot * p);
        }
    } else {
        for (int k = 0; k < count; ++k) pts.push_back(rng.unit_vec(n + 1));
    }
    return pts;
}

// Ray directions in the chart fiber R^n.
inline std::vector<Vec> fiber_rays(int n, int count, Rng& rng) {
    std::vector<Vec> rays;
    rays.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        if (n == 2) {
            const double a = 2.0 * std::numbers::pi * k / count;
            Vec d(2);
            d << std::cos(a), std::sin(a);
            rays.push_back(d);
        } else {
            rays.push_back(rng.unit_vec(n));
        }
    }
    return rays;
}

}  // namespace detail

struct StarshapeOptions {
    int scan_points = 4096;
    double bisect_tol = 1e-12;    // relative to the ray parameter
    double merge_tol = 1e-9;      // relative; closer crossings count once
    double max_distance = 6.0;    // scan until |q - E| reaches this
    double min_distance = 1e-9;
    int locator_resolution = 800;
    std::uint64_t seed = 1;
    bool allow_above_kappa = false;  // negative controls only
    std::size_t max_failures_reported = 20;
};

struct StarshapeFailure {
    Vec base;             // point of S^n
    Vec ray;              // fiber direction as a tangent vector at base
    Chart chart;
    std::vector<double> crossings;  // |y| at each earth-component crossing
};

struct StarshapeReport {
    bool pass = false;
    std::size_t checked = 0;
    std::size_t failed = 0;
    double mu = 0.0;
    double c = 0.0;
    double kappa = 0.0;
    int n = 2;
    std::vector<StarshapeFailure> failures;
};

namespace detail {

struct RayCrossings {
    std::vector<double> r;  // chart fiber radii |v|
};

// Sign changes of G along v = r d, found on a geometric scan and refined by
// bisection; crossings whose q lies outside the earth component are dropped.
inline RayCrossings scan_ray(const SystemParams& params, double c, const FiberChart& fc, const Vec& d,
                             const EarthComponentLocator& locator, const StarshapeOptions& opts) {
    const int n = params.n();
    double u[kMaxFiberDim], v[kMaxFiberDim];
    for (int i = 0; i < n; ++i) u[i] = fc.u(i);
    auto g_at = [&](double r) {
        for (int i = 0; i < n; ++i) v[i] = r * d(i);
        return fiber_defining_function(params, c, fc.chart, u, v);
    };
    const double su = fc.u.squaredNorm();
    // |q - E| = r (north) or s' r (south).
    const double scale = fc.chart == Chart::North ? 1.0 : su;
    const double r_lo = opts.min_distance;
    const double r_hi = std::max(opts.max_distance / std::max(scale, 1e-300), 4.0);
    const double ratio = std::log(r_hi / r_lo) / (opts.scan_points - 1);
    RayCrossings out;
    double r_prev = r_lo, g_prev = g_at(r_lo);
    for (int k = 1; k < opts.scan_points; ++k) {
        const double r = r_lo * std::exp(ratio * k);
        const double g = g_at(r);
        if ((g_prev < 0.0) != (g < 0.0) && std::isfinite(g) && std::isfinite(g_prev)) {
            double a = r_prev, b = r, ga = g_prev;
            while (b - a > opts.bisect_tol * b) {
                const double m = 0.5 * (a + b);
                if (!(m > a && m < b)) break;
                const double gm = g_at(m);
                if ((gm < 0.0) == (ga < 0.0)) {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                }
            }
            const double root = 0.5 * (a + b);
            if (out.r.empty() || root - out.r.back() > opts.merge_tol * root) {
                Vec vv = root * d;
                Vec q;
                if (fc.chart == Chart::North) {
                    q = params.earth() + vv;
                } else {
                    q = params.earth() + su * vv - 2.0 * fc.u.dot(vv) * fc.u;
                }
                if (locator.in_earth_component(q)) out.r.push_back(root);
            }
        }
        r_prev = r;
        g_prev = g;
    }
    return out;
}

// Tangent vector at base x of S^n corresponding to chart fiber direction d.
inline Vec ray_as_covector(const FiberChart& fc, const Vec& d) {
    return stereographic_lift({fc.u, d, fc.chart}).y;
}

}  // namespace detail

// Checks that every sampled fiber ray of the regularized earth component of
// the energy surface is crossed exactly once (fiberwise starshaped about the
// fiber origin).
inline StarshapeReport starshape_check(const SystemParams& params, double c, int base_samples, int ray_samples,
                                       const StarshapeOptions& opts = {}) {
    if (params.n() > detail::kMaxFiberDim) throw ValidationError("dimension too large for the fiber scan");
    if (base_samples < 1 || ray_samples < 1) throw ValidationError("sample counts must be positive");
    if (opts.scan_points < 16) throw ValidationError("scan_points must be >= 16");
    StarshapeReport report;
    report.mu = params.mu();
    report.c = c;
    report.n = params.n();
    report.kappa = first_critical_value(params).kappa;
    if (!(c < report.kappa) && !opts.allow_above_kappa)
        throw ValidationError("starshape check needs c below the first critical value");
    const EarthComponentLocator locator(params, c, opts.locator_resolution);
    const auto bases = detail::sphere_base_points(params.n(), base_samples, opts.seed);
    Rng ray_rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
    const auto rays = detail::fiber_rays(params.n(), ray_samples, ray_rng);

    std::vector<std::vector<StarshapeFailure>> per_base(bases.size());
    parallel_for(bases.size(), [&](std::size_t b) {
        const auto fc = detail::fiber_chart_for(bases[b]);
        for (const auto& d : rays) {
            auto cr = detail::scan_ray(params, c, fc, d, locator, opts);
            if (cr.r.size() == 1) continue;
            StarshapeFailure f{bases[b], detail::ray_as_covector(fc, d), fc.chart, {}};
            const double ylen = 0.5 * (1.0 + fc.u.squaredNorm());
            for (double r : cr.r) f.crossings.push_back(ylen * r);
            per_base[b].push_back(std::move(f));
        }
    });
    report.checked = bases.size() * rays.size();
    for (auto& fs : per_base)
        for (auto& f : fs) {
            ++report.failed;
            if (report.failures.size() < opts.max_failures_reported) report.failures.push_back(std::move(f));
        }
    report.pass = report.failed == 0;
    return report;
}

struct ConvexityOptions {
    int rays = 64;
    double gradient_step = 1e-5;  // relative to |v|
    double hessian_step = 1e-4;   // relative to |v|
    double eigenvalue_floor = 0.0;
    double symmetry_tol = 1e-6;
    StarshapeOptions scan;
};

struct ConvexityWitness {
    Vec base;
    Vec point;  // chart fiber coordinate of the surface point
    Chart chart;
    double curvature;
};

struct ConvexityReport {
    bool pass = false;
    std::size_t checked = 0;
    // Smallest eigenvalue of the second fundamental form of the fiber slice,
    // scaled by |v| to be dimensionless.
    double min_curvature = std::numeric_limits<double>::infinity();
    // Largest |H - H^T| / max|H| of the finite-difference Hessians.
    double max_symmetry_residual = 0.0;
    double mu = 0.0;
    double c = 0.0;
    std::vector<ConvexityWitness> failures;
};

namespace detail {

inline Vec fd_fiber_gradient(const SystemParams& params, double c, const FiberChart& fc, const Vec& v, double h) {
    const int n = params.n();
    Vec g(n);
    Vec a = v, b = v;
    for (int i = 0; i < n; ++i) {
        a(i) = v(i) + h;
        b(i) = v(i) - h;
        g(i) = (fiber_defining_function(params, c, fc.chart, fc.u.data(), a.data()) -
                fiber_defining_function(params, c, fc.chart, fc.u.data(), b.data())) /
               (2.0 * h);
        a(i) = b(i) = v(i);
    }
    return g;
}

}  // namespace detail

// Fiberwise convexity of the regularized rotating Kepler energy surface:
// at each surface point found on the sampled fiber rays the Hessian of the
// defining function, restricted to the tangent space of the fiber slice and
// divided by the gradient length, must be positive definite.
inline ConvexityReport fiber_convexity_check(const SystemParams& params, double c, int base_samples,
                                             const ConvexityOptions& opts = {}) {
    if (params.mu() != 0.0) throw ValidationError("fiber convexity check is defined for mu = 0");
    if (!(c < -1.5)) throw ValidationError("fiber convexity check needs c < -3/2");
    if (base_samples < 1) throw ValidationError("base_samples must be positive");
    const int n = params.n();
    ConvexityReport report;
    report.mu = params.mu();
    report.c = c;
    const EarthComponentLocator locator(params, c, opts.scan.locator_resolution);
    const auto bases = detail::sphere_base_points(n, base_samples, opts.scan.seed);
    Rng ray_rng(opts.scan.seed ^ 0x9e3779b97f4a7c15ULL);
    const auto rays = detail::fiber_rays(n, opts.rays, ray_rng);

    struct Local {
        std::size_t checked = 0;
        double min_curv = std::numeric_limits<double>::infinity();
        double sym = 0.0;
        std::vector<ConvexityWitness> bad;
    };
    std::vector<Local> per_base(bases.size());
    parallel_for(bases.size(), [&](std::size_t b) {
        auto& loc = per_base[b];
        const auto fc = detail::fiber_chart_for(bases[b]);
        for (const auto& d : rays) {
            for (double r : detail::scan_ray(params, c, fc, d, locator, opts.scan).r) {
                const Vec v = r * d;
                const double hg = opts.gradient_step * r, hh = opts.hessian_step * r;
                const Vec g = detail::fd_fiber_gradient(params, c, fc, v, hg);
                Eigen::MatrixXd hess(n, n);
                for (int j = 0; j < n; ++j) {
                    Vec a = v, bb = v;
                    a(j) += hh;
                    bb(j) -= hh;
                    hess.col(j) = (detail::fd_fiber_gradient(params, c, fc, a, hg) -
                                   detail::fd_fiber_gradient(params, c, fc, bb, hg)) /
                                  (2.0 * hh);
                }
                const double scale = std::max(hess.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
                loc.sym = std::max(loc.sym, (hess - hess.transpose()).cwiseAbs().maxCoeff() / scale);
                const Eigen::MatrixXd sym = 0.5 * (hess + hess.transpose());
                // Orthonormal basis of the tangent space g-perp.
                const Vec gh = g.normalized();
                Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(n, n) - gh * gh.transpose();
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pe(proj);
                const Eigen::MatrixXd basis = pe.eigenvectors().rightCols(n - 1);
                const Eigen::MatrixXd second = basis.transpose() * sym * basis / g.norm();
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(second);
                const double curv = se.eigenvalues().minCoeff() * r;
                ++loc.checked;
                loc.min_curv = std::min(loc.min_curv, curv);
                if (!(curv > opts.eigenvalue_floor)) loc.bad.push_back({bases[b], v, fc.chart, curv});
            }
        }
    });
    for (auto& loc : per_base) {
        report.checked += loc.checked;
        report.min_curvature = std::min(report.min_curvature, loc.min_curv);
        report.max_symmetry_residual = std::max(report.max_symmetry_residual, loc.sym);
        for (auto& w : loc.bad)
            if (report.failures.size() < opts.scan.max_failures_reported) report.failures.push_back(std::move(w));
    }
    report.pass = report.failures.empty() && report.checked > 0 && report.max_symmetry_residual <= opts.symmetry_tol;
    return report;
}

}  // namespace km
