#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "phcbf/errors.hpp"
#include "phcbf/ph_system.hpp"

using namespace phcbf;

namespace {

// Mass-spring oscillator with m = 2, k = 0.5, written directly in pH form.
PhSystem oscillator(double damping = 0.0) {
    Matrix J(2, 2), R = Matrix::Zero(2, 2), g(2, 1);
    J << 0, 1, -1, 0;
    R(1, 1) = damping;
    g << 0, 1;
    return make_constant_ph(
        J, R, g, [](const Vector& x) { return x[1] * x[1] / 4.0 + 0.25 * x[0] * x[0]; },
        [](const Vector& x) {
            Vector d(2);
            d << 0.5 * x[0], x[1] / 2.0;
            return d;
        });
}

Vector random_vector(std::mt19937_64& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = U(rng);
    return v;
}

}  // namespace

TEST(PhSystem, OscillatorStructureIsValid) {
    const auto sys = oscillator(0.3);
    const auto samples = sample_box(Vector::Constant(2, -5), Vector::Constant(2, 5), 200, 7);
    const auto rep = validate_structure(sys, samples);
    EXPECT_TRUE(rep.passed());
    EXPECT_LT(rep.max_gradient_error, 1e-5);
    EXPECT_LT(rep.max_routing, 1e-10);
    EXPECT_NEAR(rep.min_r_eigenvalue, 0.0, 1e-12);
}

TEST(PhSystem, DetectsBrokenStructure) {
    Matrix J(2, 2), R(2, 2), g(2, 1);
    J << 0, 1, 1, 0;
    R << -1, 0, 0, 0;
    g << 0, 1;
    auto H = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
    auto dH = [](const Vector& x) -> Vector { return x; };
    const auto sys = make_constant_ph(J, R, g, H, dH);
    const auto rep = validate_structure(sys, {Vector::Ones(2)});
    ASSERT_FALSE(rep.passed());
    bool skew = false, psd = false;
    for (const auto& f : rep.failures) {
        skew |= f.find("J not skew-symmetric") != std::string::npos;
        psd |= f.find("R not PSD") != std::string::npos;
    }
    EXPECT_TRUE(skew);
    EXPECT_TRUE(psd);
}

TEST(PhSystem, DetectsWrongGradient) {
    auto sys = oscillator();
    sys.grad_H = [](const Vector& x) -> Vector { return x; };
    const auto rep = validate_structure(sys, {Vector::Ones(2)});
    EXPECT_FALSE(rep.passed());
    EXPECT_GT(rep.max_gradient_error, 1e-2);
}

TEST(PhSystem, EmptySampleSetIsAContractViolation) {
    EXPECT_THROW(validate_structure(oscillator(), {}), ContractViolation);
}

TEST(PhSystem, BracketsAreBilinear) {
    const auto sys = oscillator();
    std::mt19937_64 rng(11);
    Matrix Y(2, 2);
    Y << 2, 0.5, 0.5, 1;
    for (int k = 0; k < 200; ++k) {
        const Vector x = random_vector(rng, 2);
        const Vector a = random_vector(rng, 2), b = random_vector(rng, 2), c = random_vector(rng, 2);
        const double s = std::uniform_real_distribution<double>(-3, 3)(rng);
        const Vector as = s * a + c;
        EXPECT_NEAR(bracket_j(as, b, x, sys), s * bracket_j(a, b, x, sys) + bracket_j(c, b, x, sys),
                    1e-9);
        EXPECT_NEAR(bracket_j(a, b, x, sys), -bracket_j(b, a, x, sys), 1e-12);
        EXPECT_NEAR(bracket_j(a, a, x, sys), 0.0, 1e-12);
        EXPECT_NEAR(bracket_y(as, b, Y), s * bracket_y(a, b, Y) + bracket_y(c, b, Y), 1e-9);
        EXPECT_NEAR(bracket_y(a, b, Y), bracket_y(b, a, Y), 1e-12);
    }
}

TEST(PhSystem, BracketYRejectsAsymmetricWeight) {
    Matrix Y(2, 2);
    Y << 1, 2, 0, 1;
    EXPECT_THROW(bracket_y(Vector::Ones(2), Vector::Ones(2), Y), ContractViolation);
}

TEST(PhSystem, BracketJRejectsDimensionMismatch) {
    EXPECT_THROW(bracket_j(Vector::Ones(3), Vector::Ones(2), Vector::Ones(2), oscillator()),
                 ContractViolation);
}

TEST(PhSystem, PowerTermsMatchChainRule) {
    const auto sys = oscillator(0.4);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 100; ++k) {
        const Vector x = random_vector(rng, 2);
        const Vector u = random_vector(rng, 1);
        const Vector xdot = drift(x, sys) + sys.g(x) * u;
        const auto pt = power_terms(x, u, sys);
        EXPECT_NEAR(pt.dH(), sys.grad_H(x).dot(xdot), 1e-10);
        EXPECT_GE(pt.dissipation, 0.0);
        EXPECT_NEAR(pt.routing, 0.0, 1e-12);
        EXPECT_NEAR(pt.supplied, output(x, sys).dot(u), 1e-12);
    }
}

TEST(PhSystem, OutputIsCollocated) {
    const auto sys = oscillator();
    Vector x(2);
    x << 1.0, 3.0;
    EXPECT_DOUBLE_EQ(output(x, sys)[0], 1.5);
}

TEST(PhSystem, DriftRejectsNonFiniteState) {
    Vector x(2);
    x << std::nan(""), 0.0;
    EXPECT_THROW(drift(x, oscillator()), NumericalError);
}

TEST(PhSystem, FiniteDifferenceGradient) {
    auto f = [](const Vector& x) { return std::sin(x[0]) * x[1] * x[1]; };
    Vector x(2);
    x << 0.3, -1.2;
    const Vector fd = finite_difference_gradient(f, x, 1e-6);
    Vector exact(2);
    exact << std::cos(0.3) * 1.44, 2.0 * std::sin(0.3) * -1.2;
    EXPECT_LT(gradient_error(exact, fd), 1e-8);
}

TEST(PhSystem, GradientErrorIsRelativeAboveOne) {
    Vector a(1), b(1);
    a << 1000.0;
    b << 1001.0;
    EXPECT_NEAR(gradient_error(a, b), 1e-3, 1e-15);
    a << 0.1;
    b << 0.2;
    EXPECT_NEAR(gradient_error(a, b), 0.1, 1e-15);
}

TEST(PhSystem, SampleBoxIsSeededAndBounded) {
    const Vector lo = Vector::Constant(3, -1), hi = Vector::Constant(3, 2);
    const auto a = sample_box(lo, hi, 50, 42);
    const auto b = sample_box(lo, hi, 50, 42);
    ASSERT_EQ(a.size(), 50u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i], b[i]);
        EXPECT_TRUE((a[i].array() >= -1).all() && (a[i].array() <= 2).all());
    }
    EXPECT_NE(sample_box(lo, hi, 1, 43)[0], a[0]);
}
