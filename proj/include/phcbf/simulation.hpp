// Fixed-step closed-loop simulation under the safety filter, with trajectory
// recording and a numerical audit of the power balance.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phcbf/cbf_filter.hpp"
#include "phcbf/mechanical.hpp"

namespace phcbf {

enum class Integrator { rk4 };

struct SimConfig {
    double dt = 1e-3;
    double t_end = 10.0;
    int record_stride = 1;
    Integrator integrator = Integrator::rk4;

    /// Throws ContractViolation on dt ≤ 0, t_end ≤ 0 or stride < 1.
    void validate() const;
    [[nodiscard]] long long steps() const;
};

/// Optional split of H into kinetic and potential energy for recording.
struct EnergySplit {
    ScalarField kinetic;
    ScalarField potential;
};

EnergySplit energy_split(const MechanicalSystem& ms);

struct TrajectoryRecord {
    double t = 0.0;
    Vector x;
    Vector u;
    double H = 0.0;
    double Ke = 0.0;  ///< 0 when no energy split is known
    double V = 0.0;   ///< 0 when no energy split is known
    double h = 0.0;   ///< 0 when simulated without a barrier
    double psi = 0.0;
    bool active = false;
    double p_inj = 0.0;
    double p_diss = 0.0;
};

struct Trajectory {
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    double t_on = 0.0;                   ///< barrier activation time, if any
    std::vector<TrajectoryRecord> records;
    std::optional<std::string> failure;  ///< set when the run stopped early

    [[nodiscard]] bool complete() const { return !failure.has_value(); }
};

/// Closed-loop input at (x, t): the filter output once t ≥ t_on, zero otherwise.
FilterResult control_at(const StateVector& x, double t, const PhSystem& sys,
                        const Barrier* barrier, const Tolerances& tol = default_tolerances());

/// One classical RK4 step of ẋ = (J − R)∇H + g·u_safe(x), with the filter
/// re-evaluated at every stage. Throws DivergenceError on non-finite states.
StateVector step(const StateVector& x, double t, const PhSystem& sys, const Barrier* barrier,
                 const SimConfig& cfg, const Tolerances& tol = default_tolerances());

/// Integrates from x0 over [0, t_end]. Errors stop the run; the records up
/// to the failure are kept and `failure` holds the reason.
Trajectory simulate(const StateVector& x0, const PhSystem& sys, const Barrier* barrier,
                    const SimConfig& cfg, const EnergySplit* split = nullptr,
                    const Tolerances& tol = default_tolerances());

struct AuditOptions {
    /// Residual tolerance is factor·Δt²·(1 + max|H|) + floor, Δt the record spacing.
    double residual_factor = 10.0;
    double residual_floor = 1e-8;
    /// Forward invariance: h ≥ −invariance_rel·(1 + |h(x0)|) after entry into C.
    double invariance_rel = 1e-6;
    double stability_tol = 1e-12;
};

struct AuditReport {
    double max_balance_residual = 0.0;      ///< smooth stencils only
    double max_balance_residual_all = 0.0;  ///< including activation switches
    double residual_tolerance = 0.0;
    int balance_violations = 0;
    int excluded_stencils = 0;
    double max_invariance_violation = 0.0;  ///< min h after entry into C (0 if never entered)
    bool entered_safe_set = false;
    double entry_time = 0.0;
    double invariance_tolerance = 0.0;
    int passivity_violations = 0;
    int stability_condition_violations = 0;  ///< informational: energy injection events
    double max_dissipation_defect = 0.0;     ///< most negative p_diss
    double max_p_inj = 0.0;

    [[nodiscard]] bool invariance_ok() const {
        return !entered_safe_set || max_invariance_violation >= -invariance_tolerance;
    }
    /// Power balance, passivity and forward invariance all hold.
    [[nodiscard]] bool passed() const {
        return balance_violations == 0 && passivity_violations == 0 && invariance_ok() &&
               max_dissipation_defect >= -1e-12;
    }
};

/// Central-difference audit of Ḣ = −p_diss + p_inj over the recorded
/// columns. Stencils whose records disagree on `active`, or that straddle
/// t_on, are excluded from the residual maximum.
AuditReport audit(const Trajectory& traj, const AuditOptions& opts = {});

struct LimitCycleResult {
    bool detected = false;
    bool energy_bounded = false;
    bool recurrent = false;
    double energy_mean = 0.0;
    double energy_spread = 0.0;  ///< max |H − mean| over the window
    double recurrence_distance = 0.0;
    double period = 0.0;
};

/// Looks for a periodic orbit in the final `window` seconds: H within ±band
/// of its mean, and some post-transient state revisited within `epsilon` in
/// the state metric normalised by each coordinate's standard deviation.
LimitCycleResult detect_limit_cycle(const Trajectory& traj, double window, double band,
                                    double epsilon = default_tolerances().recurrence);

}  // namespace phcbf
