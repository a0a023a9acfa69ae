#pragma once

// Circular restricted three-body problem in the rotating frame.
//
// Units: total mass 1, primary separation 1, angular speed 1. The earth
// (mass 1-mu) sits at E = mu*e1 and the moon (mass mu) at M = -(1-mu)*e1.
// Phase space is T*R^n with symplectic form sum dq_i ^ dp_i; the
// Hamiltonian vector field is X_H = (dH/dp, -dH/dq).

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "km/errors.hpp"

namespace km {

using Vec = Eigen::VectorXd;

class SystemParams {
public:
    SystemParams(int n, double mu) : n_(n), mu_(mu) {
        if (n < 2) throw ValidationError("dimension n must be >= 2, got " + std::to_string(n));
        if (!(mu >= 0.0 && mu < 1.0))
            throw ValidationError("mass ratio mu must lie in [0,1), got " + std::to_string(mu));
        earth_ = Vec::Zero(n);
        moon_ = Vec::Zero(n);
        earth_(0) = mu;
        moon_(0) = -(1.0 - mu);
    }

    int n() const { return n_; }
    double mu() const { return mu_; }
    double earth_mass() const { return 1.0 - mu_; }
    double moon_mass() const { return mu_; }
    const Vec& earth() const { return earth_; }
    const Vec& moon() const { return moon_; }

private:
    int n_;
    double mu_;
    Vec earth_;
    Vec moon_;
};

struct PhaseState {
    Vec q;
    Vec p;

    int dim() const { return static_cast<int>(q.size()); }

    Vec packed() const {
        Vec w(2 * q.size());
        w << q, p;
        return w;
    }

    static PhaseState unpack(const Vec& w) {
        const auto n = w.size() / 2;
        return {w.head(n), w.tail(n)};
    }
};

inline PhaseState make_state(std::initializer_list<double> q, std::initializer_list<double> p) {
    PhaseState s{Vec(static_cast<Eigen::Index>(q.size())), Vec(static_cast<Eigen::Index>(p.size()))};
    Eigen::Index i = 0;
    for (double v : q) s.q(i++) = v;
    i = 0;
    for (double v : p) s.p(i++) = v;
    return s;
}

namespace detail {

inline void check_dims(const SystemParams& params, const Vec& q) {
    if (q.size() != params.n())
        throw ValidationError("position has dimension " + std::to_string(q.size()) +
                              ", expected " + std::to_string(params.n()));
}

struct PrimaryDistances {
    double to_earth;
    double to_moon;
};

inline PrimaryDistances primary_distances(const SystemParams& params, const Vec& q) {
    check_dims(params, q);
    const double re = (q - params.earth()).norm();
    const double rm = (q - params.moon()).norm();
    if (re == 0.0) throw DomainError("position coincides with the earth");
    // For mu = 0 the moon is massless and its position is not singular.
    if (rm == 0.0 && params.mu() > 0.0) throw DomainError("position coincides with the moon");
    return {re, rm};
}

// Gravitational part -(1-mu)/|q-E| - mu/|q-M|.
inline double gravity_potential(const SystemParams& params, const Vec& q) {
    const auto [re, rm] = primary_distances(params, q);
    double v = -params.earth_mass() / re;
    if (params.mu() > 0.0) v -= params.moon_mass() / rm;
    return v;
}

// Gradient of gravity_potential.
inline Vec gravity_gradient(const SystemParams& params, const Vec& q) {
    const auto [re, rm] = primary_distances(params, q);
    Vec g = params.earth_mass() / (re * re * re) * (q - params.earth());
    if (params.mu() > 0.0) g += params.moon_mass() / (rm * rm * rm) * (q - params.moon());
    return g;
}

}  // namespace detail

// U(q) = -(1-mu)/|q-E| - mu/|q-M| - (q1^2+q2^2)/2
inline double effective_potential(const SystemParams& params, const Vec& q) {
    return detail::gravity_potential(params, q) - 0.5 * (q(0) * q(0) + q(1) * q(1));
}

inline Vec effective_potential_gradient(const SystemParams& params, const Vec& q) {
    Vec g = detail::gravity_gradient(params, q);
    g(0) -= q(0);
    g(1) -= q(1);
    return g;
}

inline Eigen::MatrixXd effective_potential_hessian(const SystemParams& params, const Vec& q) {
    const auto [re, rm] = detail::primary_distances(params, q);
    const auto n = q.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    auto add_body = [&](double mass, const Vec& pos, double r) {
        const Vec d = q - pos;
        const double r3 = r * r * r;
        h += mass / r3 * Eigen::MatrixXd::Identity(n, n) - 3.0 * mass / (r3 * r * r) * d * d.transpose();
    };
    add_body(params.earth_mass(), params.earth(), re);
    if (params.mu() > 0.0) add_body(params.moon_mass(), params.moon(), rm);
    h(0, 0) -= 1.0;
    h(1, 1) -= 1.0;
    return h;
}

// L = p1 q2 - p2 q1
inline double angular_momentum(const PhaseState& s) {
    return s.p(0) * s.q(1) - s.p(1) * s.q(0);
}

// H = |p|^2/2 - (1-mu)/|q-E| - mu/|q-M| + L(q,p)
inline double hamiltonian(const SystemParams& params, const PhaseState& s) {
    return 0.5 * s.p.squaredNorm() + detail::gravity_potential(params, s.q) + angular_momentum(s);
}

// H = ((p1+q2)^2 + (p2-q1)^2 + sum_{i>=3} p_i^2)/2 + U(q)
inline double hamiltonian_rewritten(const SystemParams& params, const PhaseState& s) {
    const double a = s.p(0) + s.q(1);
    const double b = s.p(1) - s.q(0);
    double kin = a * a + b * b;
    for (Eigen::Index i = 2; i < s.p.size(); ++i) kin += s.p(i) * s.p(i);
    return 0.5 * kin + effective_potential(params, s.q);
}

// (dH/dq, dH/dp) packed as a 2n-vector.
inline Vec hamiltonian_gradient(const SystemParams& params, const PhaseState& s) {
    const auto n = s.q.size();
    Vec g(2 * n);
    Vec dq = detail::gravity_gradient(params, s.q);
    dq(0) -= s.p(1);
    dq(1) += s.p(0);
    Vec dp = s.p;
    dp(0) += s.q(1);
    dp(1) -= s.q(0);
    g << dq, dp;
    return g;
}

// X_H = (dH/dp, -dH/dq) packed as a 2n-vector.
inline Vec hamiltonian_vector_field(const SystemParams& params, const PhaseState& s) {
    const auto n = s.q.size();
    const Vec g = hamiltonian_gradient(params, s);
    Vec x(2 * n);
    x << g.tail(n), -g.head(n);
    return x;
}

// Point of the energy surface H = c above q. The fiber {p : H(q,p) = c} is
// the sphere |p + (q2,-q1,0,...)| = sqrt(2(c - U(q))); direction selects the
// point on it.
inline PhaseState sample_energy_surface(const SystemParams& params, double c, const Vec& q,
                                        const Vec& direction) {
    detail::check_dims(params, q);
    if (direction.size() != q.size()) throw ValidationError("direction has wrong dimension");
    const double dn = direction.norm();
    if (!(std::abs(dn - 1.0) <= 1e-9)) throw ValidationError("direction must be a unit vector");
    const double u = effective_potential(params, q);
    if (u > c)
        throw NoSolutionError("position outside the Hill region: U(q) = " + std::to_string(u) +
                              " > c = " + std::to_string(c));
    const double radius = std::sqrt(2.0 * (c - u));
    Vec p = radius * direction / dn;
    p(0) -= q(1);
    p(1) += q(0);
    return {q, p};
}

}  // namespace km
