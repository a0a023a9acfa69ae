#pragma once

// Birkhoff's reversing symmetry B of the restricted problem, time reversal
// of trajectories, symmetric periodic orbits by perpendicular-crossing
// shooting, and the twisted O(2)-action on loops in S^n.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "km/cr3bp.hpp"
#include "km/errors.hpp"
#include "km/integrator.hpp"
#include "km/moser.hpp"

namespace km {

// B(q1, q2, q^3, p1, p2, p^3) = (q1, -q2, -q^3, -p1, p2, p^3).
inline PhaseState birkhoff_involution(const PhaseState& s) {
    PhaseState out = s;
    out.q.tail(s.q.size() - 1) *= -1.0;
    out.p(0) = -s.p(0);
    return out;
}

// The (constant) Jacobian of B on packed (q, p).
inline Eigen::MatrixXd birkhoff_matrix(int n) {
    Vec d = Vec::Ones(2 * n);
    d.segment(1, n - 1).setConstant(-1.0);
    d(n) = -1.0;
    return d.asDiagonal();
}

inline bool on_birkhoff_fixed_locus(const PhaseState& s, double tol = 0.0) {
    return s.q.tail(s.q.size() - 1).lpNorm<Eigen::Infinity>() <= tol && std::abs(s.p(0)) <= tol;
}

// (R w)(t) = B(w(-t)); the samples come out in increasing time again.
inline Trajectory time_reverse(const Trajectory& traj) {
    Trajectory out;
    out.tol = traj.tol;
    out.jacobi_drift = traj.jacobi_drift;
    out.samples.reserve(traj.samples.size());
    for (auto it = traj.samples.rbegin(); it != traj.samples.rend(); ++it)
        out.samples.push_back({it->t == 0.0 ? 0.0 : -it->t, birkhoff_involution(it->state)});
    return out;
}

// ------------------------------------------------------------ orbits

enum class OrbitBranch { Retrograde, Direct };

struct ShootingOptions {
    double tol = 1e-13;             // integrator tolerance
    double event_time_tol = 1e-12;  // section crossing time
    double defect_tol = 1e-10;      // |p1| at the crossing
    int max_iter = 50;
    int bracket_scan = 64;
    double min_half_period = 1e-3;
    double max_half_period = 50.0;
    double transversality_floor = 1e-8;  // |dq2/dt| at the crossing
    OrbitBranch branch = OrbitBranch::Retrograde;
};

struct SymmetricOrbit {
    double mu = 0.0;
    double c = 0.0;
    double half_period = 0.0;
    PhaseState start;      // on Fix(B)
    PhaseState half_state;  // at half_period, on Fix(B) up to residual
    Trajectory trajectory;  // start to half_period
    double residual = 0.0;  // |q2| + |p1| at half_period
    int iterations = 0;

    double period() const { return 2.0 * half_period; }
    double q1() const { return start.q(0); }
    double p2() const { return start.p(1); }
};

// Start on Fix(B) at energy c: q = (q1, 0), p = (0, p2) with
// p2^2/2 - q1 p2 + V(q1) = c, V the gravitational part of U.
inline PhaseState symmetric_start(const SystemParams& params, double c, double q1, OrbitBranch branch) {
    if (params.n() != 2) throw ValidationError("symmetric shooting is planar (n = 2)");
    Vec q = Vec::Zero(2);
    q(0) = q1;
    const double v = detail::gravity_potential(params, q);
    const double disc = q1 * q1 - 2.0 * (v - c);
    if (disc < 0.0) throw NoSolutionError("no symmetric start at q1 = " + std::to_string(q1) + " on this energy level");
    Vec p = Vec::Zero(2);
    p(1) = branch == OrbitBranch::Retrograde ? q1 - std::sqrt(disc) : q1 + std::sqrt(disc);
    return {q, p};
}

namespace detail {

struct HalfOrbit {
    double t;
    PhaseState end;
};

inline HalfOrbit first_return_to_section(const SystemParams& params, const PhaseState& start,
                                         const ShootingOptions& opts) {
    IntegratorOptions io;
    io.tol = opts.tol;
    auto integ = make_cr3bp_integrator(params, io);
    const auto ev = integ.solve_until(start.packed(), opts.min_half_period, opts.max_half_period,
                                      [](const Vec& w) { return w(1); }, opts.event_time_tol);
    if (!ev) throw NoSolutionError("no return to the section q2 = 0");
    const PhaseState end = PhaseState::unpack(ev->y);
    const double q2dot = hamiltonian_vector_field(params, end)(1);
    if (std::abs(q2dot) < opts.transversality_floor) throw NumericalError("non-transversal section crossing");
    return {ev->t, end};
}

inline double perpendicularity_defect(const SystemParams& params, double c, double q1, const ShootingOptions& opts) {
    return first_return_to_section(params, symmetric_start(params, c, q1, opts.branch), opts).end.p(0);
}

}  // namespace detail

// Finds q1 in the bracket such that the orbit through the symmetric start
// (q1, 0, 0, p2) meets q2 = 0 again perpendicularly (p1 = 0). Secant from
// q1_guess; on failure a scan of the bracket for a sign change of the
// defect followed by safeguarded secant (Illinois) iterations.
inline SymmetricOrbit shoot_symmetric_orbit(const SystemParams& params, double c, double q1_guess,
                                            std::pair<double, double> bracket, const ShootingOptions& opts = {}) {
    auto [lo, hi] = bracket;
    if (!(lo < hi)) throw ValidationError("empty shooting bracket");
    if (!(q1_guess >= lo && q1_guess <= hi)) throw ValidationError("q1 guess outside the bracket");
    auto defect = [&](double q1) -> std::optional<double> {
        try {
            return detail::perpendicularity_defect(params, c, q1, opts);
        } catch (const NumericalError&) {
            return std::nullopt;
        } catch (const DomainError&) {
            return std::nullopt;
        }
    };

    int iterations = 0;
    std::optional<double> root;
    {
        double x0 = q1_guess, x1 = q1_guess + 1e-6 * std::max(1.0, std::abs(q1_guess));
        auto f0 = defect(x0), f1 = defect(x1);
        while (f0 && f1 && iterations < opts.max_iter) {
            ++iterations;
            if (std::abs(*f1) <= opts.defect_tol) {
                root = x1;
                break;
            }
            if (*f1 == *f0) break;
            const double x2 = x1 - *f1 * (x1 - x0) / (*f1 - *f0);
            if (!(x2 >= lo && x2 <= hi)) break;
            x0 = x1;
            f0 = f1;
            x1 = x2;
            f1 = defect(x1);
        }
    }
    if (!root) {
        // Bracket scan, starting from the grid point nearest the guess.
        std::vector<double> xs(static_cast<std::size_t>(opts.bracket_scan) + 1);
        std::vector<std::optional<double>> fs(xs.size());
        for (std::size_t k = 0; k < xs.size(); ++k) {
            xs[k] = lo + (hi - lo) * static_cast<double>(k) / opts.bracket_scan;
            fs[k] = defect(xs[k]);
        }
        std::optional<std::pair<double, double>> best;
        double best_gap = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
            if (!fs[k] || !fs[k + 1] || ((*fs[k] < 0.0) == (*fs[k + 1] < 0.0))) continue;
            const double gap = std::abs(0.5 * (xs[k] + xs[k + 1]) - q1_guess);
            if (gap < best_gap) {
                best_gap = gap;
                best = std::pair{xs[k], xs[k + 1]};
            }
        }
        if (!best) throw ConvergenceError("no sign change of the perpendicularity defect in the bracket");
        double a = best->first, b = best->second;
        double fa = *defect(a), fb = *defect(b);
        int side = 0;
        for (int it = 0; it < opts.max_iter; ++it) {
            ++iterations;
            double x = (a * fb - b * fa) / (fb - fa);
            if (!(x > a && x < b)) x = 0.5 * (a + b);
            const auto fx = defect(x);
            if (!fx) throw ConvergenceError("defect undefined inside the bracket at q1 = " + std::to_string(x));
            if (std::abs(*fx) <= opts.defect_tol || b - a <= 1e-15 * std::max(1.0, std::abs(x))) {
                root = x;
                break;
            }
            if ((*fx < 0.0) == (fa < 0.0)) {
                a = x;
                fa = *fx;
                if (side == -1) fb *= 0.5;
                side = -1;
            } else {
                b = x;
                fb = *fx;
                if (side == 1) fa *= 0.5;
                side = 1;
            }
        }
        if (!root) throw ConvergenceError("shooting did not converge in " + std::to_string(opts.max_iter) + " iterations");
    }

    SymmetricOrbit orbit;
    orbit.mu = params.mu();
    orbit.c = c;
    orbit.iterations = iterations;
    orbit.start = symmetric_start(params, c, *root, opts.branch);
    const auto half = detail::first_return_to_section(params, orbit.start, opts);
    orbit.half_period = half.t;
    orbit.half_state = half.end;
    orbit.residual = std::abs(half.end.q(1)) + std::abs(half.end.p(0));
    orbit.trajectory = integrate(params, orbit.start, orbit.half_period, opts.tol);
    return orbit;
}

// Closed-form circular retrograde orbit of the rotating Kepler problem:
// energy c(r) = -1/(2r) + sqrt(r), period 2 pi / (r^{-3/2} + 1).
inline double kepler_retrograde_energy(double r) { return -0.5 / r + std::sqrt(r); }
inline double kepler_retrograde_period(double r) { return 2.0 * std::numbers::pi / (std::pow(r, -1.5) + 1.0); }

// Radius of the circular retrograde orbit at energy c (c increases with r).
inline double kepler_retrograde_radius(double c) {
    double a = 1e-9, b = 1.0;
    if (!(c > kepler_retrograde_energy(a) && c < kepler_retrograde_energy(b)))
        throw NoSolutionError("energy outside the circular retrograde family below r = 1");
    for (int i = 0; i < 200; ++i) {
        const double m = 0.5 * (a + b);
        if (!(m > a && m < b)) break;
        (kepler_retrograde_energy(m) < c ? a : b) = m;
    }
    return 0.5 * (a + b);
}

// ---------------------------------------------------- O(2) and loops

// Element of O(2) acting on the parameter circle R/Z via t <-> e^{2 pi i t}.
class OrthogonalElement {
public:
    static OrthogonalElement rotation(double angle) {
        Eigen::Matrix2d m;
        m << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
        return OrthogonalElement(m, angle, 1);
    }
    // Reflection e^{i phi} -> e^{i(angle - phi)}, i.e. t -> angle/(2 pi) - t.
    static OrthogonalElement reflection(double angle) {
        Eigen::Matrix2d m;
        m << std::cos(angle), std::sin(angle), std::sin(angle), -std::cos(angle);
        return OrthogonalElement(m, angle, -1);
    }
    static OrthogonalElement identity() { return rotation(0.0); }

    const Eigen::Matrix2d& matrix() const { return m_; }
    int det() const { return det_; }
    int iota() const { return (1 - det_) / 2; }
    double angle() const { return angle_; }

    // Action on the parameter t in R/Z, computed from the angle so that
    // grid-aligned elements map grid points to grid points exactly.
    double act(double t) const {
        const double a = angle_ / (2.0 * std::numbers::pi);
        return det_ == 1 ? a + t : a - t;
    }

    OrthogonalElement operator*(const OrthogonalElement& h) const {
        // (g h)(t) = g(h(t)); angles compose affinely.
        if (det_ == 1 && h.det_ == 1) return rotation(angle_ + h.angle_);
        if (det_ == 1) return reflection(angle_ + h.angle_);
        if (h.det_ == 1) return reflection(angle_ - h.angle_);
        return rotation(angle_ - h.angle_);
    }

private:
    OrthogonalElement(Eigen::Matrix2d m, double angle, int det) : m_(m), angle_(angle), det_(det) {}
    Eigen::Matrix2d m_;
    double angle_;
    int det_;
};

// rho: reflection of R^{n+1} in the hyperplane x1 = 0.
inline Vec equator_reflection(Vec x) {
    x(0) = -x(0);
    return x;
}

// Loop in S^n sampled at t_k = k/N, k = 0..N-1 (sample N is sample 0).
struct LoopOnSphere {
    std::vector<Vec> samples;

    std::size_t size() const { return samples.size(); }

    // Value at any t (mod 1): the sample itself on grid points, otherwise
    // 4-point cubic interpolation renormalized to the sphere.
    Vec at(double t) const {
        const std::size_t n = samples.size();
        const double s = (t - std::floor(t)) * static_cast<double>(n);
        const double k = std::round(s);
        if (std::abs(s - k) <= 1e-9) return samples[static_cast<std::size_t>(k) % n];
        const auto i = static_cast<long>(std::floor(s));
        const double f = s - static_cast<double>(i);
        auto idx = [&](long j) { return samples[static_cast<std::size_t>(((j % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n))]; };
        const double w0 = -f * (f - 1.0) * (f - 2.0) / 6.0;
        const double w1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
        const double w2 = -(f + 1.0) * f * (f - 2.0) / 2.0;
        const double w3 = (f + 1.0) * f * (f - 1.0) / 6.0;
        Vec v = w0 * idx(i - 1) + w1 * idx(i) + w2 * idx(i + 1) + w3 * idx(i + 2);
        return v / v.norm();
    }
};

// (g_* v)(t) = rho^{iota(g)} v(g t). As written this is a right action:
// (g h)_* = h_* o g_*.
inline LoopOnSphere twisted_action(const OrthogonalElement& g, const LoopOnSphere& loop) {
    LoopOnSphere out;
    const std::size_t n = loop.size();
    out.samples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        Vec v = loop.at(g.act(static_cast<double>(k) / static_cast<double>(n)));
        if (g.iota() == 1) v = equator_reflection(std::move(v));
        out.samples.push_back(std::move(v));
    }
    return out;
}

// The standard (untwisted) action v(g t), for comparison.
inline LoopOnSphere standard_action(const OrthogonalElement& g, const LoopOnSphere& loop) {
    LoopOnSphere out;
    const std::size_t n = loop.size();
    for (std::size_t k = 0; k < n; ++k) out.samples.push_back(loop.at(g.act(static_cast<double>(k) / n)));
    return out;
}

inline double loop_distance(const LoopOnSphere& a, const LoopOnSphere& b) {
    if (a.size() != b.size()) throw ValidationError("loops have different sample counts");
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, (a.samples[k] - b.samples[k]).norm());
    return worst;
}

// I o d*rho on T*S^n: (x, y) -> (rho x, -rho y).
inline SphereCotangent extended_involution(const SphereCotangent& sc) {
    return {equator_reflection(sc.x), -equator_reflection(sc.y)};
}

// ------------------------------------------------------ Observation

struct ObservationOptions {
    int samples = 1024;
    double tol = 1e-13;
    bool apply_rho = true;  // false gives the untwisted negative control
    int golden_iterations = 60;
};

struct ObservationReport {
    double residual = 0.0;
    double phase = 0.0;  // t0 as a fraction of the period
    int samples = 0;
    bool twisted = true;
};

// Base loop in S^n of the regularized orbit through start: the full period
// integrated at N uniform times, each state regularized and projected to the
// base.
inline LoopOnSphere regularized_base_loop(const SystemParams& params, const PhaseState& start, double period,
                                          int samples, double tol = 1e-13) {
    if (samples < 8) throw ValidationError("loop needs at least 8 samples");
    std::vector<double> times(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k) times[static_cast<std::size_t>(k)] = period * k / samples;
    const auto traj = integrate_at(params, start, times, tol);
    LoopOnSphere loop;
    loop.samples.reserve(times.size());
    for (const auto& s : traj.samples) loop.samples.push_back(regularize_cr3bp_point(params, s.state).x);
    return loop;
}

// sup_t |rho(v(t0 - t)) - v(t0 + t)| minimized over the phase t0 (grid search
// over the samples, then golden-section refinement around the best one).
inline ObservationReport observation_residual(const LoopOnSphere& loop, const ObservationOptions& opts = {}) {
    const std::size_t n = loop.size();
    auto mirror = [&](const Vec& x) { return opts.apply_rho ? equator_reflection(x) : x; };
    auto residual_at = [&](double t0) {
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double t = static_cast<double>(k) / n;
            worst = std::max(worst, (mirror(loop.at(t0 - t)) - loop.at(t0 + t)).norm());
        }
        return worst;
    };
    // On the grid both sides are samples: exact index arithmetic.
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < n; ++j) {
        double worst = 0.0;
        for (std::size_t k = 0; k < n && worst < best; ++k)
            worst = std::max(worst, (mirror(loop.samples[(j + n - k) % n]) - loop.samples[(j + k) % n]).norm());
        if (worst < best) {
            best = worst;
            best_j = j;
        }
    }
    ObservationReport rep;
    rep.samples = static_cast<int>(n);
    rep.twisted = opts.apply_rho;
    rep.residual = best;
    rep.phase = static_cast<double>(best_j) / n;
    // Golden-section search on [t0 - 1/N, t0 + 1/N].
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = rep.phase - 1.0 / n, b = rep.phase + 1.0 / n;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = residual_at(x1), f2 = residual_at(x2);
    for (int it = 0; it < opts.golden_iterations; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = residual_at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = residual_at(x2);
        }
    }
    const double tg = f1 < f2 ? x1 : x2, fg = std::min(f1, f2);
    if (fg < rep.residual) {
        rep.residual = fg;
        rep.phase = tg - std::floor(tg);
    }
    return rep;
}

// Regularizes the periodic orbit through start and measures how far time
// reversal is from the twisted O(2) reflection on its base loop.
inline ObservationReport verify_observation(const SystemParams& params, const PhaseState& start, double period,
                                            const ObservationOptions& opts = {}) {
    return observation_residual(regularized_base_loop(params, start, period, opts.samples, opts.tol), opts);
}

inline ObservationReport verify_observation(const SymmetricOrbit& orbit, const SystemParams& params,
                                            const ObservationOptions& opts = {}) {
    if (!(orbit.residual <= 1e-8)) throw ValidationError("orbit residual above 1e-8");
    return verify_observation(params, orbit.start, orbit.period(), opts);
}

}  // namespace km
