#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "phcbf/errors.hpp"
#include "phcbf/mechanical.hpp"

using namespace phcbf;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double r) {
    std::uniform_real_distribution<double> U(-r, r);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = U(rng);
    return v;
}

EnergyCbfSpec kinetic_bound(double c, double gamma) {
    EnergyCbfSpec s;
    s.sign = -1;
    s.c = c;
    s.alpha = ClassKFunction::linear(gamma);
    return s;
}

// A configuration-dependent h̄ to exercise the generic path.
EnergyCbfSpec shaped_spec(int sign) {
    EnergyCbfSpec s;
    s.sign = sign;
    s.c = 3.0;
    s.alpha = ClassKFunction::linear(1.7);
    s.hbar = [](const Vector& q) { return std::cos(q[0]) + 0.5 * q.squaredNorm(); };
    s.grad_hbar = [](const Vector& q) -> Vector {
        Vector g = q;
        g[0] -= std::sin(q[0]);
        return g;
    };
    return s;
}

}  // namespace

TEST(Mechanical, PlantsPassValidation) {
    std::mt19937_64 rng(1);
    for (const auto& ms : {make_mass_spring(), make_double_pendulum()}) {
        std::vector<Vector> qs, xs;
        for (int k = 0; k < 100; ++k) {
            qs.push_back(random_vector(rng, ms.dof, 3.0));
            xs.push_back(random_vector(rng, 2 * ms.dof, 3.0));
        }
        const auto rep = validate_mechanical(ms, qs);
        EXPECT_TRUE(rep.passed());
        EXPECT_GT(rep.min_mass_eigenvalue, 0.0);
        EXPECT_LT(rep.max_dmass_error, 1e-5);
        EXPECT_LT(rep.max_potential_grad_error, 1e-5);
        EXPECT_GE(rep.min_damping_eigenvalue, 0.0);
        EXPECT_TRUE(validate_structure(to_ph(ms), xs).passed());
    }
}

TEST(Mechanical, MassSpringParameters) {
    const auto ms = make_mass_spring();
    EXPECT_DOUBLE_EQ(ms.mass(vec({0.0}))(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(ms.potential(vec({2.0})), 1.0);
    EXPECT_DOUBLE_EQ(total_energy(ms, vec({0.0}), vec({8.0})), 16.0);
    EXPECT_DOUBLE_EQ(total_energy(ms, vec({0.0}), vec({2.0})), 1.0);
}

TEST(Mechanical, DoublePendulumHandValues) {
    const auto ms = make_double_pendulum();
    EXPECT_NEAR(ms.potential(vec({0.0, 0.0})), -44.145, 1e-12);
    EXPECT_NEAR(ms.potential(vec({M_PI, 0.0})), 44.145, 1e-12);
    const Matrix M = ms.mass(vec({0.0, 0.0}));
    // Stretched: M = [m1 l1² + m2 (l1+l2)², m2 l2 (l1+l2); ·, m2 l2²].
    EXPECT_NEAR(M(0, 0), 7.5, 1e-12);
    EXPECT_NEAR(M(0, 1), 3.0, 1e-12);
    EXPECT_NEAR(M(1, 1), 1.5, 1e-12);
    EXPECT_NEAR(ms.damping(0, 0), 0.3, 0.0);
    EXPECT_NEAR(ms.damping(1, 1), 0.3, 0.0);
}

TEST(Mechanical, KineticEnergyGradientMatchesFiniteDifferences) {
    const auto ms = make_double_pendulum();
    std::mt19937_64 rng(4);
    for (int k = 0; k < 100; ++k) {
        const Vector q = random_vector(rng, 2, 3.0), p = random_vector(rng, 2, 5.0);
        const Vector fd = finite_difference_gradient(
            [&](const Vector& qq) { return kinetic_energy(ms, qq, p); }, q, 1e-6);
        EXPECT_LT(gradient_error(kinetic_energy_grad_q(ms, q, p), fd), 1e-5);
    }
}

TEST(Mechanical, EnergyCbfGradientMatchesFiniteDifferences) {
    const auto ms = make_double_pendulum();
    std::mt19937_64 rng(8);
    for (int sign : {-1, +1}) {
        const auto spec = shaped_spec(sign);
        for (int k = 0; k < 100; ++k) {
            const Vector x = random_vector(rng, 4, 3.0);
            const Vector q = x.head(2), p = x.tail(2);
            const Vector fd = finite_difference_gradient(
                [&](const Vector& y) { return energy_cbf_value(ms, spec, y.head(2), y.tail(2)); },
                x, 1e-6);
            EXPECT_LT(gradient_error(energy_cbf_gradient(ms, spec, q, p), fd), 1e-5);
        }
    }
}

TEST(Mechanical, VelocityRejectsIndefiniteMass) {
    auto ms = make_mass_spring();
    ms.mass = [](const Vector&) { return Matrix::Constant(1, 1, -1.0); };
    try {
        velocity(ms, vec({0.25}), vec({1.0}));
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("0.25"), std::string::npos);
    }
}

TEST(Mechanical, ValidationFlagsBadModels) {
    auto ms = make_double_pendulum();
    ms.damping(0, 0) = -0.1;
    ms.input_map = Matrix::Zero(2, 2);
    const auto rep = validate_mechanical(ms, {vec({0.1, 0.2})});
    EXPECT_FALSE(rep.passed());
    EXPECT_GE(rep.failures.size(), 2u);
}

TEST(Mechanical, KineticBoundHandValues) {
    const auto ms = make_mass_spring();
    const auto spec = kinetic_bound(20.0, 1.0);
    EXPECT_NEAR(mech_psi(vec({3.0}), vec({10.0}), ms, spec), 2.5, 1e-12);
    EXPECT_EQ(mech_power(vec({3.0}), vec({10.0}), ms, spec), 0.0);

    const auto sys = to_ph(ms);
    const auto b = to_barrier(ms, spec);
    const auto r = filter(vec({-3.0, 10.0}), sys, b);
    EXPECT_TRUE(r.active);
    EXPECT_NEAR(r.u_safe[0], -2.5, 1e-12);
    EXPECT_NEAR(r.p_inj, -12.5, 1e-12);
    EXPECT_NEAR(r.psi, -12.5, 1e-12);
    EXPECT_NEAR(mech_power(vec({-3.0}), vec({10.0}), ms, spec), -12.5, 1e-12);
    EXPECT_FALSE(filter(vec({3.0, 10.0}), sys, b).active);
}

TEST(MechanicalProperty, PsiIdentityHoldsForBothSigns) {
    std::mt19937_64 rng(16);
    for (const auto& ms : {make_mass_spring(), make_double_pendulum()}) {
        for (int sign : {-1, +1}) {
            const auto spec = shaped_spec(sign);
            for (int k = 0; k < 1000; ++k) {
                const Vector q = random_vector(rng, ms.dof, 3.0), p = random_vector(rng, ms.dof, 6.0);
                const double a = mech_psi(q, p, ms, spec), b = psi_prop2(q, p, ms, spec);
                EXPECT_LT(std::abs(a - b), 1e-10) << "sign " << sign;
            }
        }
    }
}

TEST(MechanicalProperty, PsiAgreesWithGenericFilter) {
    const auto ms = make_double_pendulum();
    const auto sys = to_ph(ms);
    std::mt19937_64 rng(17);
    for (int sign : {-1, +1}) {
        const auto spec = shaped_spec(sign);
        const auto b = to_barrier(ms, spec);
        for (int k = 0; k < 200; ++k) {
            const Vector x = random_vector(rng, 4, 3.0);
            EXPECT_NEAR(psi(x, sys, b), mech_psi(x.head(2), x.tail(2), ms, spec), 1e-9);
            const auto r = filter(x, sys, b);
            EXPECT_NEAR(r.p_inj, mech_power(x.head(2), x.tail(2), ms, spec),
                        1e-9 * (1.0 + std::abs(r.p_inj)));
        }
    }
}

TEST(MechanicalProperty, KineticUpperBoundOnlyExtractsEnergy) {
    std::mt19937_64 rng(23);
    for (const auto& ms : {make_mass_spring(), make_double_pendulum()}) {
        for (double gamma : {0.5, 1.0, 2.0, 5.0}) {
            const auto spec = kinetic_bound(20.0, gamma);
            for (int k = 0; k < 500; ++k) {
                const Vector q = random_vector(rng, ms.dof, 4.0), p = random_vector(rng, ms.dof, 12.0);
                EXPECT_LE(mech_power(q, p, ms, spec), 1e-12);
                EXPECT_LE(mech_stability_condition(q, p, ms, spec), 1e-12);
            }
        }
    }
}

TEST(Mechanical, DegeneracyAtRest) {
    // h = K_e − 1 at p = 0: ∂ₚh = 0 while ψ < 0.
    const auto ms = make_mass_spring();
    EnergyCbfSpec spec;
    spec.sign = +1;
    spec.c = -1.0;
    spec.alpha = ClassKFunction::linear(1.0);
    EXPECT_THROW(mech_power(vec({0.5}), vec({0.0}), ms, spec), CbfDegeneracy);
}
