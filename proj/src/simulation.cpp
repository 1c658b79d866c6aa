#include "phcbf/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "phcbf/errors.hpp"

namespace phcbf {

void SimConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ContractViolation("SimConfig: dt must be positive");
    }
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw ContractViolation("SimConfig: t_end must be positive");
    }
    if (record_stride < 1) {
        throw ContractViolation("SimConfig: record_stride must be at least 1");
    }
}

long long SimConfig::steps() const {
    return std::llround(t_end / dt);
}

EnergySplit energy_split(const MechanicalSystem& ms) {
    return EnergySplit{
        [ms](const Vector& x) { return kinetic_energy(ms, x.head(ms.dof), x.tail(ms.dof)); },
        [ms](const Vector& x) { return ms.potential(x.head(ms.dof)); }};
}

FilterResult control_at(const StateVector& x, double t, const PhSystem& sys,
                        const Barrier* barrier, const Tolerances& tol) {
    if (barrier == nullptr) {
        FilterResult off;
        off.u_safe = Vector::Zero(sys.m);
        return off;
    }
    if (t < barrier->t_on) {
        FilterResult off;
        off.u_safe = Vector::Zero(sys.m);
        off.psi = psi(x, sys, *barrier);
        return off;
    }
    return filter(x, sys, *barrier, tol);
}

namespace {

Vector closed_loop(const StateVector& x, double t, const PhSystem& sys, const Barrier* barrier,
                   const Tolerances& tol) {
    const Vector f = drift(x, sys);
    const FilterResult r = control_at(x, t, sys, barrier, tol);
    if (!r.active) {
        return f;
    }
    return f + sys.g(x) * r.u_safe;
}

bool all_finite(const Vector& v) {
    return v.allFinite();
}

TrajectoryRecord make_record(double t, const StateVector& x, const PhSystem& sys,
                             const Barrier* barrier, const EnergySplit* split,
                             const Tolerances& tol) {
    TrajectoryRecord rec;
    rec.t = t;
    rec.x = x;
    const FilterResult r = control_at(x, t, sys, barrier, tol);
    rec.u = r.u_safe;
    rec.psi = r.psi;
    rec.active = r.active;
    rec.p_inj = r.p_inj;
    rec.H = sys.H(x);
    if (split != nullptr) {
        rec.Ke = split->kinetic(x);
        rec.V = split->potential(x);
    }
    if (barrier != nullptr) {
        rec.h = barrier->h(x);
    }
    rec.p_diss = power_terms(x, Vector::Zero(sys.m), sys).dissipation;
    return rec;
}

}  // namespace

StateVector step(const StateVector& x, double t, const PhSystem& sys, const Barrier* barrier,
                 const SimConfig& cfg, const Tolerances& tol) {
    const double dt = cfg.dt;
    const double half = 0.5 * dt;
    const Vector k1 = closed_loop(x, t, sys, barrier, tol);
    const Vector k2 = closed_loop(x + half * k1, t + half, sys, barrier, tol);
    const Vector k3 = closed_loop(x + half * k2, t + half, sys, barrier, tol);
    const Vector k4 = closed_loop(x + dt * k3, t + dt, sys, barrier, tol);
    StateVector next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!all_finite(next)) {
        std::ostringstream os;
        os << "simulation diverged at t = " << t + dt;
        throw DivergenceError(os.str(), t + dt);
    }
    return next;
}

Trajectory simulate(const StateVector& x0, const PhSystem& sys, const Barrier* barrier,
                    const SimConfig& cfg, const EnergySplit* split, const Tolerances& tol) {
    cfg.validate();
    if (x0.size() != sys.n) {
        throw ContractViolation("simulate: x0 has wrong length");
    }
    require_finite(x0, "simulate: x0");

    Trajectory traj;
    traj.n = sys.n;
    traj.m = sys.m;
    traj.t_on = barrier != nullptr ? barrier->t_on : 0.0;
    const long long steps = cfg.steps();
    traj.records.reserve(static_cast<std::size_t>(steps / cfg.record_stride + 2));

    StateVector x = x0;
    long long i = 0;
    try {
        for (; i <= steps; ++i) {
            const double t = static_cast<double>(i) * cfg.dt;
            if (i % cfg.record_stride == 0 || i == steps) {
                traj.records.push_back(make_record(t, x, sys, barrier, split, tol));
            }
            if (i == steps) {
                break;
            }
            x = step(x, t, sys, barrier, cfg, tol);
        }
    } catch (const NumericalError& e) {
        std::ostringstream os;
        os << "stopped at t = " << static_cast<double>(i) * cfg.dt << ": " << e.what();
        traj.failure = os.str();
    }
    return traj;
}

AuditReport audit(const Trajectory& traj, const AuditOptions& opts) {
    const auto& rec = traj.records;
    if (rec.size() < 2) {
        throw ContractViolation("audit: need at least two records");
    }
    AuditReport rep;

    double max_abs_H = 0.0;
    double max_spacing = 0.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        max_abs_H = std::max(max_abs_H, std::abs(rec[i].H));
        rep.max_dissipation_defect = std::min(rep.max_dissipation_defect, rec[i].p_diss);
        rep.max_p_inj = std::max(rep.max_p_inj, rec[i].p_inj);
        if (i > 0) {
            max_spacing = std::max(max_spacing, rec[i].t - rec[i - 1].t);
        }
        if (rec[i].active && rec[i].p_inj > opts.stability_tol) {
            // P ≤ 0 ⇔ 𝕀_{ψ<0}[H,h]_{ggᵀ} ≤ 0 since ψ < 0 and [h,h]_{ggᵀ} > 0.
            ++rep.stability_condition_violations;
        }
    }
    rep.residual_tolerance =
        opts.residual_factor * max_spacing * max_spacing * (1.0 + max_abs_H) + opts.residual_floor;

    for (std::size_t i = 1; i + 1 < rec.size(); ++i) {
        const auto& a = rec[i - 1];
        const auto& b = rec[i];
        const auto& c = rec[i + 1];
        const double dHdt = (c.H - a.H) / (c.t - a.t);
        const double residual = std::abs(dHdt - (-b.p_diss + b.p_inj));
        const bool straddles_on = a.t < traj.t_on && c.t >= traj.t_on && traj.t_on > 0.0;
        const bool switching = a.active != b.active || b.active != c.active;
        if (!straddles_on && dHdt - b.p_inj > rep.residual_tolerance) {
            ++rep.passivity_violations;
        }
        if (straddles_on) {
            ++rep.excluded_stencils;
            continue;
        }
        rep.max_balance_residual_all = std::max(rep.max_balance_residual_all, residual);
        if (switching) {
            ++rep.excluded_stencils;
            continue;
        }
        rep.max_balance_residual = std::max(rep.max_balance_residual, residual);
        if (residual > rep.residual_tolerance) {
            ++rep.balance_violations;
        }
    }

    for (const auto& r : rec) {
        if (r.t < traj.t_on) {
            continue;
        }
        if (!rep.entered_safe_set) {
            if (r.h >= 0.0) {
                rep.entered_safe_set = true;
                rep.entry_time = r.t;
                rep.invariance_tolerance = opts.invariance_rel * (1.0 + std::abs(rec.front().h));
                rep.max_invariance_violation = r.h;
            }
            continue;
        }
        rep.max_invariance_violation = std::min(rep.max_invariance_violation, r.h);
    }
    if (rep.entered_safe_set) {
        rep.max_invariance_violation = std::min(rep.max_invariance_violation, 0.0);
    }
    return rep;
}

}  // namespace phcbf
