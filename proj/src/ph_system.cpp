#include "phcbf/ph_system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "phcbf/errors.hpp"

namespace phcbf {

namespace {

void require_size(const Vector& v, Eigen::Index n, const char* name) {
    if (v.size() != n) {
        std::ostringstream os;
        os << name << " has length " << v.size() << ", expected " << n;
        throw ContractViolation(os.str());
    }
}

double max_abs_asymmetry(const Matrix& A) {
    return (A - A.transpose()).cwiseAbs().maxCoeff();
}

double max_abs_skew_defect(const Matrix& A) {
    return (A + A.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace

PhSystem make_constant_ph(Matrix J, Matrix R, Matrix g, ScalarField H, VectorField grad_H) {
    PhSystem sys;
    sys.n = J.rows();
    sys.m = g.cols();
    sys.J = [J = std::move(J)](const Vector&) { return J; };
    sys.R = [R = std::move(R)](const Vector&) { return R; };
    sys.g = [g = std::move(g)](const Vector&) { return g; };
    sys.H = std::move(H);
    sys.grad_H = std::move(grad_H);
    return sys;
}

double bracket_j(const Vector& grad_a, const Vector& grad_b, const StateVector& x,
                 const PhSystem& sys) {
    require_size(grad_a, sys.n, "gradA");
    require_size(grad_b, sys.n, "gradB");
    require_size(x, sys.n, "x");
    return grad_a.dot(sys.J(x) * grad_b);
}

double bracket_y(const Vector& grad_a, const Vector& grad_b, const Matrix& Y,
                 const Tolerances& tol) {
    if (Y.rows() != Y.cols()) {
        throw ContractViolation("bracket_y: Y is not square");
    }
    require_size(grad_a, Y.rows(), "gradA");
    require_size(grad_b, Y.rows(), "gradB");
    if (Y.size() > 0 && max_abs_asymmetry(Y) > tol.symmetric) {
        throw ContractViolation("bracket_y: Y is not symmetric");
    }
    return grad_a.dot(Y * grad_b);
}

void require_finite(const Vector& v, const std::string& what) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            std::ostringstream os;
            os << what << ": component " << i << " is not finite (" << v[i] << ")";
            throw NumericalError(os.str());
        }
    }
}

Vector drift(const StateVector& x, const PhSystem& sys) {
    require_size(x, sys.n, "x");
    require_finite(x, "drift: state");
    Vector f = (sys.J(x) - sys.R(x)) * sys.grad_H(x);
    require_finite(f, "drift");
    return f;
}

Vector output(const StateVector& x, const PhSystem& sys) {
    require_size(x, sys.n, "x");
    return sys.g(x).transpose() * sys.grad_H(x);
}

PowerTerms power_terms(const StateVector& x, const Vector& u, const PhSystem& sys) {
    require_size(x, sys.n, "x");
    require_size(u, sys.m, "u");
    const Vector dH = sys.grad_H(x);
    PowerTerms p;
    p.routing = dH.dot(sys.J(x) * dH);
    p.dissipation = dH.dot(sys.R(x) * dH);
    p.supplied = (sys.g(x).transpose() * dH).dot(u);
    return p;
}

Vector finite_difference_gradient(const ScalarField& f, const Vector& x, double step) {
    Vector grad(x.size());
    Vector xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        xp[i] = xi + step;
        const double fp = f(xp);
        xp[i] = xi - step;
        const double fm = f(xp);
        xp[i] = xi;
        grad[i] = (fp - fm) / (2.0 * step);
    }
    return grad;
}

double gradient_error(const Vector& analytic, const Vector& numeric) {
    if (analytic.size() == 0) {
        return 0.0;
    }
    const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
    return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

StructureReport validate_structure(const PhSystem& sys, const std::vector<StateVector>& samples,
                                   const Tolerances& tol) {
    if (samples.empty()) {
        throw ContractViolation("validate_structure: empty sample list");
    }
    StructureReport rep;
    rep.min_r_eigenvalue = std::numeric_limits<double>::infinity();
    for (const auto& x : samples) {
        require_size(x, sys.n, "sample");
        const Matrix J = sys.J(x);
        const Matrix R = sys.R(x);
        rep.max_skew_defect = std::max(rep.max_skew_defect, max_abs_skew_defect(J));
        rep.max_r_asymmetry = std::max(rep.max_r_asymmetry, max_abs_asymmetry(R));
        const Matrix Rsym = 0.5 * (R + R.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(Rsym, Eigen::EigenvaluesOnly);
        rep.min_r_eigenvalue = std::min(rep.min_r_eigenvalue, eig.eigenvalues().minCoeff());
        const Vector grad = sys.grad_H(x);
        const Vector fd = finite_difference_gradient(sys.H, x, tol.fd_step);
        rep.max_gradient_error = std::max(rep.max_gradient_error, gradient_error(grad, fd));
        rep.max_routing = std::max(rep.max_routing, std::abs(grad.dot(J * grad)));
    }
    if (rep.max_skew_defect > tol.skew) {
        rep.failures.emplace_back("J not skew-symmetric");
    }
    if (rep.max_r_asymmetry > tol.symmetric) {
        rep.failures.emplace_back("R not symmetric");
    }
    if (rep.min_r_eigenvalue < -tol.psd) {
        rep.failures.emplace_back("R not PSD");
    }
    if (rep.max_gradient_error > tol.gradient_rel) {
        rep.failures.emplace_back("gradient of H does not match finite differences");
    }
    if (rep.max_routing > tol.routing) {
        rep.failures.emplace_back("{H,H}_J not zero");
    }
    return rep;
}

std::vector<StateVector> sample_box(const Vector& lo, const Vector& hi, std::size_t count,
                                    std::uint64_t seed) {
    if (lo.size() != hi.size()) {
        throw ContractViolation("sample_box: bound lengths differ");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<StateVector> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        StateVector x(lo.size());
        for (Eigen::Index i = 0; i < lo.size(); ++i) {
            x[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
        }
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace phcbf
