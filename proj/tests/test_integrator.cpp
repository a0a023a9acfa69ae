#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "km/integrator.hpp"
#include "test_support.hpp"

using namespace km;

namespace {

// Circular retrograde Kepler orbit of radius r seen in the rotating frame:
// inertial angular speed r^{-3/2}, frame speed 1, so the rotating period is
// 2 pi / (r^{-3/2} + 1).
double retrograde_rotating_period(double r) { return 2.0 * std::numbers::pi / (std::pow(r, -1.5) + 1.0); }

PhaseState retrograde_start(double r) { return make_state({r, 0}, {0, -1.0 / std::sqrt(r)}); }

}  // namespace

TEST(Integrate, ZeroDurationGivesSingleSample) {
    SystemParams params(2, 0.1);
    const auto traj = integrate(params, make_state({0.3, 0}, {0, -1.5}), 0.0, 1e-10);
    ASSERT_EQ(traj.size(), 1u);
    EXPECT_EQ(traj.front().t, 0.0);
    EXPECT_EQ(traj.jacobi_drift, 0.0);
}

TEST(Integrate, TimesStrictlyIncrease) {
    SystemParams params(2, 0.1);
    const auto traj = integrate(params, make_state({0.3, 0}, {0, -1.5}), 3.0, 1e-10);
    for (std::size_t i = 1; i < traj.size(); ++i) EXPECT_GT(traj.samples[i].t, traj.samples[i - 1].t);
    EXPECT_DOUBLE_EQ(traj.back().t, 3.0);
}

TEST(Integrate, CircularRetrogradeOrbitCloses) {
    SystemParams kepler(2, 0.0);
    const double r = 0.16;
    const auto start = retrograde_start(r);
    const auto traj = integrate(kepler, start, retrograde_rotating_period(r), 1e-12);
    EXPECT_LE((traj.back().state.packed() - start.packed()).norm(), 1e-8);
}

TEST(Integrate, CircularOrbitMatchesClosedFormPointwise) {
    SystemParams kepler(2, 0.0);
    const double r = 0.3;
    const double omega = -(std::pow(r, -1.5) + 1.0);
    std::vector<double> times;
    for (int k = 1; k <= 20; ++k) times.push_back(0.1 * k);
    const auto traj = integrate_at(kepler, retrograde_start(r), times, 1e-12);
    for (const auto& s : traj.samples) {
        EXPECT_NEAR(s.state.q(0), r * std::cos(omega * s.t), 1e-9);
        EXPECT_NEAR(s.state.q(1), r * std::sin(omega * s.t), 1e-9);
    }
}

TEST(Integrate, JacobiDriftBoundedOnLongRuns) {
    testkit::Rng rng(2024);
    for (int i = 0; i < 4; ++i) {
        SystemParams params(2, i == 0 ? 0.0 : 0.1);
        const double r = rng.uniform(0.15, 0.3);
        auto start = retrograde_start(r);
        start.q(0) += params.mu();
        start.p(1) += params.mu();  // p = inertial velocity + frame term of the shift
        start.p *= rng.uniform(0.9, 1.05);
        const double t_end = 50.0;
        const double tol = 1e-12;
        const auto traj = integrate(params, start, t_end, tol);
        EXPECT_LE(traj.jacobi_drift, 1e-9);
        EXPECT_LE(traj.jacobi_drift, 10.0 * tol * t_end);
    }
}

TEST(Integrate, CollisionFloorRaisesStructuredError) {
    SystemParams kepler(2, 0.0);
    // Zero inertial velocity: radial infall into the earth.
    const auto start = make_state({0.5, 0}, {0, 0});
    try {
        integrate(kepler, start, 10.0, 1e-10);
        FAIL() << "expected CollisionError";
    } catch (const CollisionError& e) {
        EXPECT_LT(e.distance, 1e-6);
        EXPECT_GT(e.time, 0.0);
    }
}

TEST(Integrate, OutputGridIsHitExactly) {
    SystemParams params(3, 0.2);
    const std::vector<double> times = {0.0, 0.25, 0.5, 0.5, 1.0};
    const auto traj = integrate_at(params, make_state({0.4, 0, 0.1}, {0, -1.2, 0}), times, 1e-11);
    ASSERT_EQ(traj.size(), times.size());
    for (std::size_t i = 0; i < times.size(); ++i) EXPECT_EQ(traj.samples[i].t, times[i]);
    EXPECT_EQ(traj.samples[2].state.packed(), traj.samples[3].state.packed());
}

TEST(FlowIntegrator, EventLocatedToTimeTolerance) {
    SystemParams kepler(2, 0.0);
    const double r = 0.16;
    auto integ = make_cr3bp_integrator(kepler, IntegratorOptions{});
    const auto ev = integ.solve_until(retrograde_start(r).packed(), 0.0, 10.0,
                                      [](const Vec& w) { return w(1); });
    ASSERT_TRUE(ev.has_value());
    EXPECT_NEAR(ev->t, 0.5 * retrograde_rotating_period(r), 1e-11);
    EXPECT_NEAR(ev->y(0), -r, 1e-10);
}

TEST(FlowIntegrator, ResidualOfIntegratedTrajectoryIsSmall) {
    SystemParams params(2, 0.3);
    const auto traj = integrate(params, make_state({0.5, 0}, {0, -1.0}), 1.0, 1e-12);
    EXPECT_LE(flow_residual(params, traj), 1e-10);
}
