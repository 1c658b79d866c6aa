// Input-state-output port-Hamiltonian systems
//
//   ẋ = (J(x) − R(x)) ∇H(x) + g(x) u,     y = g(x)ᵀ ∇H(x)
//
// together with the two bilinear brackets that structure their power flows:
//   {A,B}_J = ∇Aᵀ J ∇B   (energy routing, skew)
//   [A,B]_Y = ∇Aᵀ Y ∇B   (symmetric, e.g. dissipation for Y = R)
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "phcbf/types.hpp"

namespace phcbf {

using ScalarField = std::function<double(const Vector&)>;
using VectorField = std::function<Vector(const Vector&)>;
using MatrixField = std::function<Matrix(const Vector&)>;

/// Evaluable pH structure. All maps are pure and may be shared across threads.
struct PhSystem {
    Eigen::Index n = 0;  ///< state dimension
    Eigen::Index m = 0;  ///< input dimension
    MatrixField J;       ///< n×n, skew-symmetric
    MatrixField R;       ///< n×n, symmetric PSD
    MatrixField g;       ///< n×m
    ScalarField H;       ///< Hamiltonian [J]
    VectorField grad_H;  ///< ∂ₓH
};

/// Builds a PhSystem whose J, R and g do not depend on the state.
PhSystem make_constant_ph(Matrix J, Matrix R, Matrix g, ScalarField H, VectorField grad_H);

/// {A,B}_J = ∇Aᵀ J(x) ∇B.
double bracket_j(const Vector& grad_a, const Vector& grad_b, const StateVector& x,
                 const PhSystem& sys);

/// [A,B]_Y = ∇Aᵀ Y ∇B for a symmetric Y. Throws ContractViolation otherwise.
double bracket_y(const Vector& grad_a, const Vector& grad_b, const Matrix& Y,
                 const Tolerances& tol = default_tolerances());

/// Unforced flow (J − R) ∇H.
Vector drift(const StateVector& x, const PhSystem& sys);

/// Collocated output y = gᵀ ∇H.
Vector output(const StateVector& x, const PhSystem& sys);

/// The three addends of Ḣ = {H,H}_J − [H,H]_R + yᵀu.
struct PowerTerms {
    double routing = 0.0;      ///< {H,H}_J, identically zero
    double dissipation = 0.0;  ///< [H,H]_R ≥ 0
    double supplied = 0.0;     ///< yᵀu

    [[nodiscard]] double dH() const { return routing - dissipation + supplied; }
};

PowerTerms power_terms(const StateVector& x, const Vector& u, const PhSystem& sys);

/// Central-difference gradient of a scalar field.
Vector finite_difference_gradient(const ScalarField& f, const Vector& x, double step);

/// ‖a − b‖∞ / max(1, ‖a‖∞): relative for large gradients, absolute near zero.
double gradient_error(const Vector& analytic, const Vector& numeric);

struct StructureReport {
    double max_skew_defect = 0.0;    ///< max |J + Jᵀ|
    double max_r_asymmetry = 0.0;    ///< max |R − Rᵀ|
    double min_r_eigenvalue = 0.0;
    double max_gradient_error = 0.0; ///< ∇H vs central differences
    double max_routing = 0.0;        ///< max |{H,H}_J|
    std::vector<std::string> failures;

    [[nodiscard]] bool passed() const { return failures.empty(); }
};

/// Sampling-based check of the PhSystem invariants.
StructureReport validate_structure(const PhSystem& sys, const std::vector<StateVector>& samples,
                                   const Tolerances& tol = default_tolerances());

/// `count` states drawn uniformly from the box [lo, hi] (per coordinate).
std::vector<StateVector> sample_box(const Vector& lo, const Vector& hi, std::size_t count,
                                    std::uint64_t seed);

/// Throws NumericalError naming the first non-finite component.
void require_finite(const Vector& v, const std::string& what);

}  // namespace phcbf
