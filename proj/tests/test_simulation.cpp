#include <gtest/gtest.h>

#include <cmath>

#include "phcbf/errors.hpp"
#include "phcbf/simulation.hpp"

using namespace phcbf;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

// x = (r cos ωt, r sin ωt) with H = h-value free of drift.
Trajectory circle(double t_end, double dt, double (*radius)(double)) {
    Trajectory traj;
    traj.n = 2;
    traj.m = 1;
    for (double t = 0.0; t <= t_end + 1e-12; t += dt) {
        TrajectoryRecord r;
        r.t = t;
        const double rad = radius(t);
        r.x = vec({rad * std::cos(2.0 * t), rad * std::sin(2.0 * t)});
        r.u = Vector::Zero(1);
        r.H = 0.5 * rad * rad;
        traj.records.push_back(r);
    }
    return traj;
}

}  // namespace

TEST(SimConfig, Validation) {
    SimConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.steps(), 10000);
    cfg.dt = 0.0;
    EXPECT_THROW(cfg.validate(), ContractViolation);
    cfg = SimConfig{};
    cfg.t_end = -1.0;
    EXPECT_THROW(cfg.validate(), ContractViolation);
    cfg = SimConfig{};
    cfg.record_stride = 0;
    EXPECT_THROW(cfg.validate(), ContractViolation);
}

TEST(Simulation, Rk4IsFourthOrder) {
    const auto ms = make_mass_spring();
    const auto sys = to_ph(ms);
    const double omega = 0.5;  // √(k/m)
    auto error = [&](double dt) {
        SimConfig cfg;
        cfg.dt = dt;
        cfg.t_end = 5.0;
        const auto traj = simulate(vec({1.0, 0.0}), sys, nullptr, cfg);
        const double t = traj.records.back().t;
        return std::abs(traj.records.back().x[0] - std::cos(omega * t));
    };
    const double ratio = error(0.1) / error(0.05);
    EXPECT_NEAR(ratio, 16.0, 1.5);
}

TEST(Simulation, RecordsEveryStrideAndEndpoint) {
    const auto sys = to_ph(make_mass_spring());
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.t_end = 1.0;
    cfg.record_stride = 10;
    const auto traj = simulate(vec({1.0, 0.0}), sys, nullptr, cfg);
    ASSERT_EQ(traj.records.size(), 11u);
    EXPECT_NEAR(traj.records.back().t, 1.0, 1e-12);
    EXPECT_TRUE(traj.complete());
}

TEST(Simulation, UnforcedPendulumDissipates) {
    const auto ms = make_double_pendulum();
    const auto sys = to_ph(ms);
    const auto split = energy_split(ms);
    SimConfig cfg;
    cfg.t_end = 5.0;
    const auto traj = simulate(vec({1.0, -0.5, 0.0, 0.0}), sys, nullptr, cfg, &split);
    for (std::size_t i = 1; i < traj.records.size(); ++i) {
        EXPECT_LE(traj.records[i].H, traj.records[i - 1].H + 1e-12);
        EXPECT_GE(traj.records[i].p_diss, 0.0);
        EXPECT_NEAR(traj.records[i].Ke + traj.records[i].V, traj.records[i].H, 1e-10);
    }
    const auto rep = audit(traj);
    EXPECT_TRUE(rep.passed());
    EXPECT_LT(rep.max_balance_residual, rep.residual_tolerance);
}

TEST(Simulation, FilterOffBeforeActivation) {
    const auto ms = make_mass_spring();
    const auto sys = to_ph(ms);
    auto b = make_energy_barrier(sys, -1, 10.0, ClassKFunction::linear(1.0));
    b.t_on = 2.0;
    SimConfig cfg;
    cfg.t_end = 4.0;
    const auto traj = simulate(vec({0.0, 8.0}), sys, &b, cfg);
    for (const auto& r : traj.records) {
        if (r.t < 2.0) {
            EXPECT_EQ(r.u[0], 0.0);
            EXPECT_FALSE(r.active);
            EXPECT_NEAR(r.H, 16.0, 1e-9);
            EXPECT_LT(r.psi, 0.0);
        }
    }
    EXPECT_LT(traj.records.back().H, 16.0);
    const auto rep = audit(traj);
    EXPECT_GE(rep.excluded_stencils, 1);
}

TEST(Simulation, DegeneracyStopsTheRunAndKeepsRecords) {
    const auto sys = to_ph(make_mass_spring());
    Barrier b{[](const Vector& x) { return x[0] + 1.0; },
              [](const Vector&) -> Vector { return vec({1.0, 0.0}); },
              ClassKFunction::linear(1.0)};
    SimConfig cfg;
    cfg.t_end = 10.0;
    const auto traj = simulate(vec({0.0, -1.0}), sys, &b, cfg);
    ASSERT_FALSE(traj.complete());
    EXPECT_NE(traj.failure->find("degeneracy"), std::string::npos);
    EXPECT_FALSE(traj.records.empty());
    EXPECT_LT(traj.records.back().t, 10.0);
}

TEST(Audit, FlagsTamperedEnergy) {
    const auto sys = to_ph(make_double_pendulum());
    SimConfig cfg;
    cfg.t_end = 2.0;
    auto traj = simulate(vec({1.0, 0.0, 0.0, 0.0}), sys, nullptr, cfg);
    ASSERT_TRUE(audit(traj).passed());
    traj.records[1000].H += 1e-3;
    const auto rep = audit(traj);
    EXPECT_FALSE(rep.passed());
    EXPECT_EQ(rep.balance_violations, 2);
}

TEST(Audit, FlagsNegativeDissipation) {
    const auto sys = to_ph(make_double_pendulum());
    SimConfig cfg;
    cfg.t_end = 0.1;
    auto traj = simulate(vec({1.0, 0.0, 0.0, 0.0}), sys, nullptr, cfg);
    traj.records[5].p_diss = -1e-6;
    EXPECT_FALSE(audit(traj).passed());
}

TEST(Audit, InvarianceAfterEntry) {
    Trajectory traj = circle(1.0, 0.01, [](double) { return 1.0; });
    for (auto& r : traj.records) r.h = r.t < 0.5 ? r.t - 0.3 : 0.2;
    auto rep = audit(traj);
    EXPECT_TRUE(rep.entered_safe_set);
    EXPECT_NEAR(rep.entry_time, 0.3, 1e-9);
    EXPECT_TRUE(rep.invariance_ok());
    traj.records.back().h = -1e-3;
    rep = audit(traj);
    EXPECT_FALSE(rep.invariance_ok());
    EXPECT_NEAR(rep.max_invariance_violation, -1e-3, 1e-15);
}

TEST(Audit, NeedsTwoRecords) {
    Trajectory traj;
    EXPECT_THROW(audit(traj), ContractViolation);
}

TEST(LimitCycle, DetectsPeriodicOrbit) {
    const auto traj = circle(30.0, 1e-3, [](double) { return 1.0; });
    const auto lc = detect_limit_cycle(traj, 10.0, 0.1);
    EXPECT_TRUE(lc.detected);
    EXPECT_TRUE(lc.energy_bounded);
    EXPECT_TRUE(lc.recurrent);
    EXPECT_NEAR(lc.period, M_PI, 1e-2);
    EXPECT_LT(lc.recurrence_distance, 1e-2);
}

TEST(LimitCycle, RejectsSpiral) {
    const auto traj = circle(30.0, 1e-3, [](double t) { return std::exp(-0.2 * t); });
    const auto lc = detect_limit_cycle(traj, 10.0, 1.0);
    EXPECT_TRUE(lc.energy_bounded);
    EXPECT_FALSE(lc.recurrent);
    EXPECT_FALSE(lc.detected);
}

TEST(LimitCycle, RejectsEnergyOutsideBand) {
    const auto traj = circle(30.0, 1e-3, [](double) { return 3.0; });
    auto lc = detect_limit_cycle(traj, 10.0, 0.1);
    EXPECT_TRUE(lc.detected);
    auto noisy = traj;
    for (std::size_t i = 0; i < noisy.records.size(); i += 2) noisy.records[i].H += 0.5;
    lc = detect_limit_cycle(noisy, 10.0, 0.1);
    EXPECT_FALSE(lc.energy_bounded);
    EXPECT_FALSE(lc.detected);
}

TEST(LimitCycle, RestIsNotACycle) {
    const auto traj = circle(30.0, 1e-2, [](double) { return 0.0; });
    EXPECT_FALSE(detect_limit_cycle(traj, 10.0, 1.0).detected);
}

TEST(LimitCycle, NeedsTwoWindows) {
    const auto traj = circle(15.0, 1e-2, [](double) { return 1.0; });
    EXPECT_THROW(detect_limit_cycle(traj, 10.0, 1.0), ContractViolation);
}
