#pragma once

// Adaptive 8th-order Runge-Kutta integration of autonomous flows.
//
// The stepper is Fehlberg 7(8) (13 stages, 8th-order propagation, 7th-order
// embedded error estimate) from Boost.Odeint; step control, collision
// guarding, output grids and event location are done here.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include "km/cr3bp.hpp"
#include "km/errors.hpp"

namespace km {

struct IntegratorOptions {
    double tol = 1e-12;
    // Distance to a primary below which integration stops with CollisionError.
    double collision_floor = 1e-6;
    double initial_step = 1e-3;
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 20'000'000;
};

struct TrajectorySample {
    double t;
    PhaseState state;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    double tol = 0.0;
    // max_i |H(state_i) - H(state_0)| over every accepted step, not only the
    // recorded samples.
    double jacobi_drift = 0.0;

    std::size_t size() const { return samples.size(); }
    const TrajectorySample& front() const { return samples.front(); }
    const TrajectorySample& back() const { return samples.back(); }
};

// Generic flow of dy/dt = f(y) on R^d.
class FlowIntegrator {
public:
    using Field = std::function<Vec(const Vec&)>;
    // Returns the distance to the nearest singularity; integration aborts
    // when it drops below options.collision_floor. May be empty.
    using Guard = std::function<double(const Vec&)>;
    // Called after every accepted step with (t, y).
    using Monitor = std::function<void(double, const Vec&)>;

    FlowIntegrator(Field field, IntegratorOptions options, Guard guard = {})
        : field_(std::move(field)), opts_(options), guard_(std::move(guard)) {
        if (!(opts_.tol > 0.0)) throw ValidationError("integrator tolerance must be positive");
    }

    const IntegratorOptions& options() const { return opts_; }

    // Integrates to each of the (nondecreasing, >= 0) output times and returns
    // the states there. Steps are clipped to land exactly on the outputs.
    std::vector<Vec> solve_at(const Vec& y0, std::span<const double> times,
                              const Monitor& monitor = {}) {
        std::vector<Vec> out;
        out.reserve(times.size());
        Vec y = y0;
        double t = 0.0;
        check_guard(0.0, y);
        for (double target : times) {
            if (target < t) throw ValidationError("output times must be nondecreasing and >= 0");
            advance(y, t, target, monitor);
            out.push_back(y);
        }
        return out;
    }

    // Integrates to t_end recording every accepted step.
    std::vector<std::pair<double, Vec>> solve_dense(const Vec& y0, double t_end,
                                                    const Monitor& monitor = {}) {
        if (t_end < 0.0) throw ValidationError("t_end must be >= 0");
        std::vector<std::pair<double, Vec>> out;
        out.emplace_back(0.0, y0);
        Vec y = y0;
        double t = 0.0;
        check_guard(0.0, y);
        advance(y, t, t_end, [&](double ts, const Vec& ys) {
            out.emplace_back(ts, ys);
            if (monitor) monitor(ts, ys);
        });
        return out;
    }

    struct Event {
        double t;
        Vec y;
    };

    // Integrates until event(y) changes sign (after t_min), up to t_max.
    // The crossing time is located by bisection to time_tol using single
    // steps from the last accepted state.
    std::optional<Event> solve_until(const Vec& y0, double t_min, double t_max,
                                     const std::function<double(const Vec&)>& event,
                                     double time_tol = 1e-12, const Monitor& monitor = {}) {
        Vec y = y0;
        double t = 0.0;
        check_guard(0.0, y);
        double h = opts_.initial_step;
        double g_prev = event(y);
        std::size_t steps = 0;
        while (t < t_max) {
            Vec y_prev = y;
            const double t_prev = t;
            const double h_try = std::min(h, t_max - t);
            double h_used = 0.0;
            h = step(y, t, h_try, h_used);
            if (monitor) monitor(t, y);
            if (++steps > opts_.max_steps) throw NumericalError("integrator step budget exhausted");
            const double g = event(y);
            if (t > t_min && ((g_prev < 0.0 && g >= 0.0) || (g_prev > 0.0 && g <= 0.0))) {
                double lo = 0.0, hi = h_used;
                const double g_lo = g_prev;
                Vec y_hi = y;
                while (hi - lo > time_tol) {
                    const double mid = 0.5 * (lo + hi);
                    if (!(mid > lo && mid < hi)) break;
                    Vec y_mid = single_step(y_prev, mid);
                    const double gm = event(y_mid);
                    if ((gm < 0.0) == (g_lo < 0.0) && gm != 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                        y_hi = std::move(y_mid);
                    }
                }
                return Event{t_prev + hi, y_hi};
            }
            g_prev = g;
        }
        return std::nullopt;
    }

private:
    using State = std::vector<double>;
    using Stepper = boost::numeric::odeint::runge_kutta_fehlberg78<State>;

    void check_guard(double t, const Vec& y) const {
        if (!guard_) return;
        const double d = guard_(y);
        if (d < opts_.collision_floor)
            throw CollisionError("trajectory approached a primary closer than the collision floor "
                                 "(switch to the regularized flow)",
                                 t, d);
    }

    void rhs(const State& x, State& dxdt, double /*t*/) const {
        const Eigen::Map<const Vec> xm(x.data(), static_cast<Eigen::Index>(x.size()));
        const Vec f = field_(Vec(xm));
        dxdt.assign(f.data(), f.data() + f.size());
    }

    Vec single_step(const Vec& y, double h) {
        State in(y.data(), y.data() + y.size()), out(in.size()), err(in.size());
        stepper_.do_step([this](const State& x, State& d, double t) { rhs(x, d, t); }, in, 0.0,
                         out, h, err);
        return Eigen::Map<const Vec>(out.data(), static_cast<Eigen::Index>(out.size()));
    }

    // One accepted adaptive step of at most h_max. Advances (y, t), reports
    // the step actually taken, and returns the proposed next step size.
    double step(Vec& y, double& t, double h_max, double& h_used) {
        double h = std::min(h_max, opts_.max_step);
        const std::size_t d = static_cast<std::size_t>(y.size());
        State in(y.data(), y.data() + d), out(d), err(d);
        for (int attempt = 0;; ++attempt) {
            if (!(h > 0.0) || h < 1e-15 * std::max(1.0, std::abs(t)) || attempt > 200)
                throw NumericalError("step size underflow at t = " + std::to_string(t));
            stepper_.do_step([this](const State& x, State& dd, double tt) { rhs(x, dd, tt); }, in,
                             t, out, h, err);
            double err_norm = 0.0;
            bool finite = true;
            for (std::size_t i = 0; i < d; ++i) {
                if (!std::isfinite(out[i])) finite = false;
                const double scale = opts_.tol * (1.0 + std::max(std::abs(in[i]), std::abs(out[i])));
                err_norm = std::max(err_norm, std::abs(err[i]) / scale);
            }
            if (!finite || !std::isfinite(err_norm)) {
                h *= 0.25;
                continue;
            }
            if (guard_) {
                const Eigen::Map<const Vec> trial(out.data(), static_cast<Eigen::Index>(d));
                // Reject steps that jump past the collision floor so the
                // approach is resolved before it is reported.
                if (guard_(trial) < opts_.collision_floor && h > 1e-12) {
                    h *= 0.5;
                    continue;
                }
            }
            if (err_norm <= 1.0) {
                y = Eigen::Map<const Vec>(out.data(), static_cast<Eigen::Index>(d));
                t += h;
                h_used = h;
                check_guard(t, y);
                const double fac =
                    err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -1.0 / 8.0), 0.2, 5.0);
                return h * fac;
            }
            h *= std::clamp(0.9 * std::pow(err_norm, -1.0 / 8.0), 0.1, 0.9);
        }
    }

    void advance(Vec& y, double& t, double target, const Monitor& monitor) {
        std::size_t steps = 0;
        while (t < target) {
            const double remaining = target - t;
            double h_used = 0.0;
            const double h_try = std::min(next_h_, remaining);
            const double h_next = step(y, t, h_try, h_used);
            if (h_used >= remaining * (1.0 - 1e-14)) t = target;
            // A step clipped to hit an output time says nothing about the
            // natural step size; keep the previous proposal then.
            const bool clipped = h_used == h_try && h_try < next_h_;
            if (!clipped) next_h_ = h_next;
            if (monitor) monitor(t, y);
            if (++steps > opts_.max_steps) throw NumericalError("integrator step budget exhausted");
        }
    }

    Field field_;
    IntegratorOptions opts_;
    Guard guard_;
    Stepper stepper_;
    double next_h_ = opts_.initial_step;
};

// Distance from q to the nearest massive primary.
inline double distance_to_primaries(const SystemParams& params, const Vec& q) {
    double d = (q - params.earth()).norm();
    if (params.mu() > 0.0) d = std::min(d, (q - params.moon()).norm());
    return d;
}

inline FlowIntegrator make_cr3bp_integrator(const SystemParams& params, IntegratorOptions opts) {
    const int n = params.n();
    return FlowIntegrator(
        [params](const Vec& w) { return hamiltonian_vector_field(params, PhaseState::unpack(w)); },
        opts, [params, n](const Vec& w) { return distance_to_primaries(params, w.head(n)); });
}

// Integrates the rotating-frame flow from start to t_end, recording every
// accepted step and the Jacobi drift.
inline Trajectory integrate(const SystemParams& params, const PhaseState& start, double t_end,
                            double tol, IntegratorOptions opts = {}) {
    opts.tol = tol;
    if (!(tol > 0.0)) throw ValidationError("tol must be positive");
    if (t_end < 0.0) throw ValidationError("t_end must be >= 0");
    auto integ = make_cr3bp_integrator(params, opts);
    const double h0 = hamiltonian(params, start);
    Trajectory traj;
    traj.tol = tol;
    auto monitor = [&](double, const Vec& w) {
        traj.jacobi_drift =
            std::max(traj.jacobi_drift, std::abs(hamiltonian(params, PhaseState::unpack(w)) - h0));
    };
    for (auto& [t, w] : integ.solve_dense(start.packed(), t_end, monitor))
        traj.samples.push_back({t, PhaseState::unpack(w)});
    return traj;
}

// Same flow sampled exactly at the given nondecreasing times (first >= 0).
inline Trajectory integrate_at(const SystemParams& params, const PhaseState& start,
                               std::span<const double> times, double tol,
                               IntegratorOptions opts = {}) {
    opts.tol = tol;
    auto integ = make_cr3bp_integrator(params, opts);
    const double h0 = hamiltonian(params, start);
    Trajectory traj;
    traj.tol = tol;
    auto monitor = [&](double, const Vec& w) {
        traj.jacobi_drift =
            std::max(traj.jacobi_drift, std::abs(hamiltonian(params, PhaseState::unpack(w)) - h0));
    };
    const auto states = integ.solve_at(start.packed(), times, monitor);
    for (std::size_t i = 0; i < times.size(); ++i)
        traj.samples.push_back({times[i], PhaseState::unpack(states[i])});
    return traj;
}

// Largest deviation between consecutive samples and the flow re-integrated
// from the earlier sample: max_i |w_{i+1} - Phi_{t_{i+1}-t_i}(w_i)|.
inline double flow_residual(const SystemParams& params, const Trajectory& traj, double tol = 1e-13) {
    double worst = 0.0;
    IntegratorOptions opts;
    opts.tol = tol;
    for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        auto integ = make_cr3bp_integrator(params, opts);
        const double dt = traj.samples[i + 1].t - traj.samples[i].t;
        const double times[] = {dt};
        const Vec w = integ.solve_at(traj.samples[i].state.packed(), times).front();
        worst = std::max(worst, (w - traj.samples[i + 1].state.packed()).norm());
    }
    return worst;
}

}  // namespace km
