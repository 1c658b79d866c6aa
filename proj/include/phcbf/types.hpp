// Shared linear-algebra aliases and numerical tolerances.
#pragma once

#include <Eigen/Dense>

namespace phcbf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// State of a port-Hamiltonian system; for mechanical systems x = (q, p).
using StateVector = Vector;

/// Every numerical tolerance used by validation, filtering and auditing.
///
/// Kept in one record so the numbers behind each claim can be audited and
/// overridden in a single place.
struct Tolerances {
    double skew = 1e-12;             ///< |J + Jᵀ| entrywise
    double symmetric = 1e-12;        ///< |Y − Yᵀ| entrywise for bracket_y
    double psd = 1e-10;              ///< min eigenvalue of R, D ≥ −psd
    double gradient_rel = 1e-5;      ///< analytic vs central differences
    double fd_step = 1e-6;           ///< central-difference step
    double routing = 1e-10;          ///< |{H,H}_J|
    double degeneracy = 1e-12;       ///< minimum [h,h]_{ggᵀ} while active
    double qp_agreement = 1e-6;      ///< projection vs bisection QP routes
    double barrier_regularity = 1e-9;///< ‖∇h‖ on {h = 0}
    double mass_min_eig = 1e-9;      ///< M(q) positive definiteness
    double input_min_sv = 1e-9;      ///< B full rank
    double recurrence = 1e-2;        ///< limit-cycle return distance
};

inline const Tolerances& default_tolerances() {
    static const Tolerances tol{};
    return tol;
}

}  // namespace phcbf
