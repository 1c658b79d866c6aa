// Closed-form CBF safety filter for pH systems with zero nominal input,
// its power accounting, and an independent QP oracle.
#pragma once

#include "phcbf/ph_system.hpp"

namespace phcbf {

/// Extended class-K function. Only the linear kind α(h) = γh is provided.
struct ClassKFunction {
    enum class Kind { linear };

    Kind kind = Kind::linear;
    double gamma = 1.0;

    /// Throws ContractViolation unless gamma > 0.
    static ClassKFunction linear(double gamma);

    [[nodiscard]] double operator()(double h) const;
};

/// Safe set C = {x : h(x) ≥ 0} with the class-K gain used to approach it.
struct Barrier {
    ScalarField h;
    VectorField grad_h;
    ClassKFunction alpha;
    double t_on = 0.0;  ///< activation time, enforced by the simulation loop
};

struct FilterResult {
    Vector u_safe;
    double psi = 0.0;
    bool active = false;  ///< ψ < 0
    double denom = 0.0;   ///< [h,h]_{ggᵀ}
    double p_inj = 0.0;   ///< power injected by u_safe (negative: extracted)
};

/// ψ = {h,H}_J − [h,H]_R + α(h): the CBF constraint margin at zero input.
double psi(const StateVector& x, const PhSystem& sys, const Barrier& b);

/// u_safe = −𝕀_{ψ<0} gᵀ∇h ψ / [h,h]_{ggᵀ}, and
/// p_inj = −𝕀_{ψ<0} [H,h]_{ggᵀ} ψ / [h,h]_{ggᵀ}.
///
/// Throws CbfDegeneracy if ψ < 0 while [h,h]_{ggᵀ} < tol.degeneracy.
FilterResult filter(const StateVector& x, const PhSystem& sys, const Barrier& b,
                    const Tolerances& tol = default_tolerances());

/// Solves min ‖u − u_nom‖² s.t. ḣ(x,u) ≥ −α(h) by halfspace projection and
/// cross-checks it against a bisection on the KKT multiplier. Returns the
/// projection; throws NumericalError if the two disagree beyond
/// tol.qp_agreement and QpInfeasible for a zero constraint row that is
/// violated.
Vector qp_oracle(const StateVector& x, const PhSystem& sys, const Barrier& b,
                 const Vector& u_nom, const Tolerances& tol = default_tolerances());

/// 𝕀_{ψ<0}·[H,h]_{ggᵀ}. Non-positive values certify that the filter only
/// extracts energy at x.
double stability_condition(const StateVector& x, const PhSystem& sys, const Barrier& b);

/// h = c − H for sign = −1 (safe set H ≤ c), h = H − c for sign = +1.
Barrier make_energy_barrier(const PhSystem& sys, int sign, double c, ClassKFunction alpha);

/// ḣ(x,u) = {h,H}_J − [h,H]_R + ∇hᵀ g u.
double barrier_rate(const StateVector& x, const Vector& u, const PhSystem& sys, const Barrier& b);

}  // namespace phcbf
