// Fully actuated mechanical systems in canonical coordinates x = (q, p):
//
//   J − R = [0 I; −I −D],  g = [0; B],  H = ½ pᵀM⁻¹(q)p + V(q),  y = Bᵀq̇
//
// plus the energy-based barrier class h = ±K_e(q,p) + h̄(q) + c.
#pragma once

#include <functional>
#include <vector>

#include "phcbf/cbf_filter.hpp"
#include "phcbf/ph_system.hpp"

namespace phcbf {

struct MechanicalSystem {
    Eigen::Index dof = 0;
    std::function<Matrix(const Vector&)> mass;                ///< M(q), SPD
    std::function<std::vector<Matrix>(const Vector&)> dmass;  ///< ∂M/∂q_i
    ScalarField potential;                                    ///< V(q) [J]
    VectorField grad_potential;                               ///< ∂V/∂q
    Matrix damping;                                           ///< D = Dᵀ ⪰ 0
    Matrix input_map;                                         ///< B, full rank

    [[nodiscard]] Vector positions(const StateVector& x) const { return x.head(dof); }
    [[nodiscard]] Vector momenta(const StateVector& x) const { return x.tail(dof); }
};

/// q̇ = M⁻¹(q)p. Throws NumericalError naming q if M(q) is not SPD.
Vector velocity(const MechanicalSystem& ms, const Vector& q, const Vector& p);

/// K_e = ½ pᵀM⁻¹(q)p.
double kinetic_energy(const MechanicalSystem& ms, const Vector& q, const Vector& p);

/// ∂K_e/∂q_i = −½ q̇ᵀ (∂M/∂q_i) q̇.
Vector kinetic_energy_grad_q(const MechanicalSystem& ms, const Vector& q, const Vector& p);

double total_energy(const MechanicalSystem& ms, const Vector& q, const Vector& p);

/// The pH realisation of a mechanical system (state dimension 2·dof).
PhSystem to_ph(const MechanicalSystem& ms);

struct MechanicalReport {
    double max_mass_asymmetry = 0.0;
    double min_mass_eigenvalue = 0.0;
    double max_dmass_error = 0.0;    ///< ∂M/∂q vs central differences
    double max_potential_grad_error = 0.0;
    double min_damping_eigenvalue = 0.0;
    double min_input_singular_value = 0.0;
    std::vector<std::string> failures;

    [[nodiscard]] bool passed() const { return failures.empty(); }
};

/// Sampling-based check of the MechanicalSystem invariants over configurations.
MechanicalReport validate_mechanical(const MechanicalSystem& ms,
                                     const std::vector<Vector>& configurations,
                                     const Tolerances& tol = default_tolerances());

/// h(q,p) = sign·K_e(q,p) + h̄(q) + c.
struct EnergyCbfSpec {
    int sign = -1;
    ScalarField hbar = [](const Vector&) { return 0.0; };
    VectorField grad_hbar;  ///< empty means h̄ ≡ 0
    double c = 0.0;
    ClassKFunction alpha;
};

double energy_cbf_value(const MechanicalSystem& ms, const EnergyCbfSpec& spec, const Vector& q,
                        const Vector& p);

/// (∂h/∂q, ∂h/∂p) stacked; ∂h/∂p = sign·q̇.
Vector energy_cbf_gradient(const MechanicalSystem& ms, const EnergyCbfSpec& spec, const Vector& q,
                           const Vector& p);

/// Compiles the spec into the generic barrier used by `filter`.
Barrier to_barrier(const MechanicalSystem& ms, const EnergyCbfSpec& spec, double t_on = 0.0);

/// ψ = {h,H} − ∂ₚhᵀ D q̇ + α(h) through the canonical Poisson bracket.
double mech_psi(const Vector& q, const Vector& p, const MechanicalSystem& ms,
                const EnergyCbfSpec& spec);

/// Closed form of ψ for the energy-based class without brackets:
/// ψ = −sign·V̇ + h̄̇ − sign·q̇ᵀDq̇ + α(h). For sign = −1 this reads
/// V̇ + h̄̇ + q̇ᵀDq̇ + α(h).
double psi_prop2(const Vector& q, const Vector& p, const MechanicalSystem& ms,
                 const EnergyCbfSpec& spec);

/// P = −𝕀_{ψ<0} (q̇ᵀBBᵀ∂ₚh)/(∂ₚhᵀBBᵀ∂ₚh) ψ. Throws CbfDegeneracy when active
/// with a vanishing denominator.
double mech_power(const Vector& q, const Vector& p, const MechanicalSystem& ms,
                  const EnergyCbfSpec& spec, const Tolerances& tol = default_tolerances());

/// 𝕀_{ψ<0}·q̇ᵀBBᵀ∂ₚh, the mechanical form of the stability condition.
double mech_stability_condition(const Vector& q, const Vector& p, const MechanicalSystem& ms,
                                const EnergyCbfSpec& spec);

struct MassSpringParams {
    double mass = 2.0;
    double stiffness = 0.5;
};

/// 1-dof oscillator H = p²/2m + kq²/2, D = 0, B = 1.
MechanicalSystem make_mass_spring(const MassSpringParams& params = {});

struct DoublePendulumParams {
    double m1 = 1.5;
    double m2 = 1.5;
    double l1 = 1.0;
    double l2 = 1.0;
    double joint_damping = 0.3;
    double gravity = 9.81;
};

/// Point masses at the link tips, relative joint angles measured from the
/// downward vertical, D = bI₂, B = I₂. V is zero at the first joint height
/// and negative below it.
MechanicalSystem make_double_pendulum(const DoublePendulumParams& params = {});

}  // namespace phcbf
