#include "phcbf/mechanical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "phcbf/errors.hpp"

namespace phcbf {

namespace {

Eigen::LLT<Matrix> factor_mass(const MechanicalSystem& ms, const Vector& q) {
    Eigen::LLT<Matrix> llt(ms.mass(q));
    if (llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << "mass matrix is singular or indefinite at q = (";
        for (Eigen::Index i = 0; i < q.size(); ++i) {
            os << (i ? ", " : "") << q[i];
        }
        os << ")";
        throw NumericalError(os.str());
    }
    return llt;
}

struct EnergyCbfParts {
    Vector qdot;
    Vector dh_dq;
    Vector dh_dp;
    double h = 0.0;
};

EnergyCbfParts evaluate_parts(const MechanicalSystem& ms, const EnergyCbfSpec& spec,
                              const Vector& q, const Vector& p) {
    const double s = spec.sign;
    EnergyCbfParts parts;
    parts.qdot = velocity(ms, q, p);
    parts.h = s * 0.5 * p.dot(parts.qdot) + spec.hbar(q) + spec.c;
    parts.dh_dq = s * kinetic_energy_grad_q(ms, q, p);
    if (spec.grad_hbar) {
        parts.dh_dq += spec.grad_hbar(q);
    }
    parts.dh_dp = s * parts.qdot;
    return parts;
}

void require_sign(const EnergyCbfSpec& spec) {
    if (spec.sign != 1 && spec.sign != -1) {
        throw ContractViolation("EnergyCbfSpec: sign must be +1 or -1");
    }
}

}  // namespace

Vector velocity(const MechanicalSystem& ms, const Vector& q, const Vector& p) {
    return factor_mass(ms, q).solve(p);
}

double kinetic_energy(const MechanicalSystem& ms, const Vector& q, const Vector& p) {
    return 0.5 * p.dot(velocity(ms, q, p));
}

Vector kinetic_energy_grad_q(const MechanicalSystem& ms, const Vector& q, const Vector& p) {
    // ∂M⁻¹/∂q_i = −M⁻¹ (∂M/∂q_i) M⁻¹
    const Vector qdot = velocity(ms, q, p);
    const std::vector<Matrix> dM = ms.dmass(q);
    Vector grad(ms.dof);
    for (Eigen::Index i = 0; i < ms.dof; ++i) {
        grad[i] = -0.5 * qdot.dot(dM[static_cast<std::size_t>(i)] * qdot);
    }
    return grad;
}

double total_energy(const MechanicalSystem& ms, const Vector& q, const Vector& p) {
    return kinetic_energy(ms, q, p) + ms.potential(q);
}

PhSystem to_ph(const MechanicalSystem& ms) {
    const Eigen::Index n = ms.dof;
    Matrix J = Matrix::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n) = Matrix::Identity(n, n);
    J.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);
    Matrix R = Matrix::Zero(2 * n, 2 * n);
    R.bottomRightCorner(n, n) = ms.damping;
    Matrix g = Matrix::Zero(2 * n, ms.input_map.cols());
    g.bottomRows(n) = ms.input_map;

    auto H = [ms](const Vector& x) {
        return total_energy(ms, x.head(ms.dof), x.tail(ms.dof));
    };
    auto grad_H = [ms](const Vector& x) -> Vector {
        const Vector q = x.head(ms.dof);
        const Vector p = x.tail(ms.dof);
        Vector grad(2 * ms.dof);
        grad.head(ms.dof) = kinetic_energy_grad_q(ms, q, p) + ms.grad_potential(q);
        grad.tail(ms.dof) = velocity(ms, q, p);
        return grad;
    };
    return make_constant_ph(std::move(J), std::move(R), std::move(g), std::move(H),
                            std::move(grad_H));
}

MechanicalReport validate_mechanical(const MechanicalSystem& ms,
                                     const std::vector<Vector>& configurations,
                                     const Tolerances& tol) {
    if (configurations.empty()) {
        throw ContractViolation("validate_mechanical: empty sample list");
    }
    MechanicalReport rep;
    rep.min_mass_eigenvalue = std::numeric_limits<double>::infinity();
    for (const auto& q : configurations) {
        if (q.size() != ms.dof) {
            throw ContractViolation("validate_mechanical: configuration has wrong length");
        }
        const Matrix M = ms.mass(q);
        rep.max_mass_asymmetry =
            std::max(rep.max_mass_asymmetry, (M - M.transpose()).cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (M + M.transpose()),
                                                  Eigen::EigenvaluesOnly);
        rep.min_mass_eigenvalue = std::min(rep.min_mass_eigenvalue, eig.eigenvalues().minCoeff());

        const std::vector<Matrix> dM = ms.dmass(q);
        for (Eigen::Index i = 0; i < ms.dof; ++i) {
            Vector qp = q;
            Vector qm = q;
            qp[i] += tol.fd_step;
            qm[i] -= tol.fd_step;
            const Matrix fd = (ms.mass(qp) - ms.mass(qm)) / (2.0 * tol.fd_step);
            const Matrix& an = dM[static_cast<std::size_t>(i)];
            const double scale = std::max(1.0, an.cwiseAbs().maxCoeff());
            rep.max_dmass_error =
                std::max(rep.max_dmass_error, (an - fd).cwiseAbs().maxCoeff() / scale);
        }
        rep.max_potential_grad_error = std::max(
            rep.max_potential_grad_error,
            gradient_error(ms.grad_potential(q),
                           finite_difference_gradient(ms.potential, q, tol.fd_step)));
    }
    const double d_asym = (ms.damping - ms.damping.transpose()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> deig(0.5 * (ms.damping + ms.damping.transpose()),
                                               Eigen::EigenvaluesOnly);
    rep.min_damping_eigenvalue = deig.eigenvalues().minCoeff();
    Eigen::JacobiSVD<Matrix> svd(ms.input_map);
    rep.min_input_singular_value = svd.singularValues().minCoeff();

    if (rep.max_mass_asymmetry > tol.symmetric) {
        rep.failures.emplace_back("M(q) not symmetric");
    }
    if (rep.min_mass_eigenvalue <= tol.mass_min_eig) {
        rep.failures.emplace_back("M(q) not positive definite");
    }
    if (rep.max_dmass_error > tol.gradient_rel) {
        rep.failures.emplace_back("dM/dq does not match finite differences");
    }
    if (rep.max_potential_grad_error > tol.gradient_rel) {
        rep.failures.emplace_back("dV/dq does not match finite differences");
    }
    if (d_asym > tol.symmetric || rep.min_damping_eigenvalue < -tol.psd) {
        rep.failures.emplace_back("D not symmetric PSD");
    }
    if (ms.input_map.rows() != ms.dof || ms.input_map.cols() != ms.dof ||
        rep.min_input_singular_value <= tol.input_min_sv) {
        rep.failures.emplace_back("B not square full rank");
    }
    return rep;
}

double energy_cbf_value(const MechanicalSystem& ms, const EnergyCbfSpec& spec, const Vector& q,
                        const Vector& p) {
    require_sign(spec);
    return spec.sign * kinetic_energy(ms, q, p) + spec.hbar(q) + spec.c;
}

Vector energy_cbf_gradient(const MechanicalSystem& ms, const EnergyCbfSpec& spec, const Vector& q,
                           const Vector& p) {
    require_sign(spec);
    const EnergyCbfParts parts = evaluate_parts(ms, spec, q, p);
    Vector grad(2 * ms.dof);
    grad << parts.dh_dq, parts.dh_dp;
    return grad;
}

Barrier to_barrier(const MechanicalSystem& ms, const EnergyCbfSpec& spec, double t_on) {
    require_sign(spec);
    Barrier b;
    b.h = [ms, spec](const Vector& x) {
        return energy_cbf_value(ms, spec, x.head(ms.dof), x.tail(ms.dof));
    };
    b.grad_h = [ms, spec](const Vector& x) {
        return energy_cbf_gradient(ms, spec, x.head(ms.dof), x.tail(ms.dof));
    };
    b.alpha = spec.alpha;
    b.t_on = t_on;
    return b;
}

double mech_psi(const Vector& q, const Vector& p, const MechanicalSystem& ms,
                const EnergyCbfSpec& spec) {
    require_sign(spec);
    const EnergyCbfParts parts = evaluate_parts(ms, spec, q, p);
    const Vector dH_dq = kinetic_energy_grad_q(ms, q, p) + ms.grad_potential(q);
    const Vector& dH_dp = parts.qdot;
    const double poisson = parts.dh_dq.dot(dH_dp) - parts.dh_dp.dot(dH_dq);
    return poisson - parts.dh_dp.dot(ms.damping * parts.qdot) + spec.alpha(parts.h);
}

double psi_prop2(const Vector& q, const Vector& p, const MechanicalSystem& ms,
                 const EnergyCbfSpec& spec) {
    require_sign(spec);
    const double s = spec.sign;
    const Vector qdot = velocity(ms, q, p);
    const double v_rate = ms.grad_potential(q).dot(qdot);
    const double hbar_rate = spec.grad_hbar ? spec.grad_hbar(q).dot(qdot) : 0.0;
    const double dissipation = qdot.dot(ms.damping * qdot);
    const double h = s * 0.5 * p.dot(qdot) + spec.hbar(q) + spec.c;
    // The damping addend carries the same ∓ as V̇: −∂ₚhᵀDq̇ = −sign·q̇ᵀDq̇.
    return -s * v_rate + hbar_rate - s * dissipation + spec.alpha(h);
}

double mech_power(const Vector& q, const Vector& p, const MechanicalSystem& ms,
                  const EnergyCbfSpec& spec, const Tolerances& tol) {
    const double psi_value = mech_psi(q, p, ms, spec);
    if (!(psi_value < 0.0)) {
        return 0.0;
    }
    const EnergyCbfParts parts = evaluate_parts(ms, spec, q, p);
    const Vector bt_dh = ms.input_map.transpose() * parts.dh_dp;
    const double denom = bt_dh.squaredNorm();
    if (denom < tol.degeneracy) {
        std::ostringstream os;
        os << "CBF degeneracy: dh/dp^T B B^T dh/dp = " << denom << " while psi = " << psi_value;
        throw CbfDegeneracy(os.str());
    }
    const double num = (ms.input_map.transpose() * parts.qdot).dot(bt_dh);
    return -num / denom * psi_value;
}

double mech_stability_condition(const Vector& q, const Vector& p, const MechanicalSystem& ms,
                                const EnergyCbfSpec& spec) {
    if (!(mech_psi(q, p, ms, spec) < 0.0)) {
        return 0.0;
    }
    const EnergyCbfParts parts = evaluate_parts(ms, spec, q, p);
    return (ms.input_map.transpose() * parts.qdot).dot(ms.input_map.transpose() * parts.dh_dp);
}

MechanicalSystem make_mass_spring(const MassSpringParams& params) {
    const double m = params.mass;
    const double k = params.stiffness;
    MechanicalSystem ms;
    ms.dof = 1;
    ms.mass = [m](const Vector&) { return Matrix::Constant(1, 1, m); };
    ms.dmass = [](const Vector&) { return std::vector<Matrix>{Matrix::Zero(1, 1)}; };
    ms.potential = [k](const Vector& q) { return 0.5 * k * q[0] * q[0]; };
    ms.grad_potential = [k](const Vector& q) { return Vector::Constant(1, k * q[0]); };
    ms.damping = Matrix::Zero(1, 1);
    ms.input_map = Matrix::Identity(1, 1);
    return ms;
}

MechanicalSystem make_double_pendulum(const DoublePendulumParams& params) {
    const DoublePendulumParams P = params;
    MechanicalSystem ms;
    ms.dof = 2;
    ms.mass = [P](const Vector& q) {
        const double c2 = std::cos(q[1]);
        const double m11 = P.m1 * P.l1 * P.l1 +
                           P.m2 * (P.l1 * P.l1 + P.l2 * P.l2 + 2.0 * P.l1 * P.l2 * c2);
        const double m12 = P.m2 * (P.l2 * P.l2 + P.l1 * P.l2 * c2);
        const double m22 = P.m2 * P.l2 * P.l2;
        Matrix M(2, 2);
        M << m11, m12, m12, m22;
        return M;
    };
    ms.dmass = [P](const Vector& q) {
        const double a = -P.m2 * P.l1 * P.l2 * std::sin(q[1]);
        Matrix d2(2, 2);
        d2 << 2.0 * a, a, a, 0.0;
        return std::vector<Matrix>{Matrix::Zero(2, 2), d2};
    };
    ms.potential = [P](const Vector& q) {
        return -(P.m1 + P.m2) * P.gravity * P.l1 * std::cos(q[0]) -
               P.m2 * P.gravity * P.l2 * std::cos(q[0] + q[1]);
    };
    ms.grad_potential = [P](const Vector& q) {
        const double s12 = P.m2 * P.gravity * P.l2 * std::sin(q[0] + q[1]);
        Vector g(2);
        g << (P.m1 + P.m2) * P.gravity * P.l1 * std::sin(q[0]) + s12, s12;
        return g;
    };
    ms.damping = P.joint_damping * Matrix::Identity(2, 2);
    ms.input_map = Matrix::Identity(2, 2);
    return ms;
}

}  // namespace phcbf
