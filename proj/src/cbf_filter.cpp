#include "phcbf/cbf_filter.hpp"

#include <cmath>
#include <sstream>

#include "phcbf/errors.hpp"

namespace phcbf {

namespace {

std::string describe_state(const StateVector& x) {
    std::ostringstream os;
    os << "x = (";
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        os << (i ? ", " : "") << x[i];
    }
    os << ")";
    return os.str();
}

// {h,H}_J − [h,H]_R, the rate of h along the unforced flow.
double unforced_rate(const StateVector& x, const Vector& grad_h, const PhSystem& sys) {
    const Vector grad_H = sys.grad_H(x);
    return grad_h.dot((sys.J(x) - sys.R(x)) * grad_H);
}

// Solves a·u(λ) = b for λ ≥ 0 with u(λ) = u_nom + λa by bracketing and bisection.
Vector bisect_multiplier(const Vector& a, double rhs, const Vector& u_nom) {
    auto residual = [&](double lambda) { return a.dot(u_nom + lambda * a) - rhs; };
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 2100 && residual(hi) < 0.0; ++i) {
        lo = hi;
        hi *= 2.0;
    }
    if (residual(hi) < 0.0) {
        throw NumericalError("qp_oracle: multiplier bracket overflow");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        (residual(mid) < 0.0 ? lo : hi) = mid;
    }
    return u_nom + hi * a;
}

}  // namespace

ClassKFunction ClassKFunction::linear(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw ContractViolation("class-K gain must be positive and finite");
    }
    return ClassKFunction{Kind::linear, gamma};
}

double ClassKFunction::operator()(double h) const {
    switch (kind) {
        case Kind::linear:
            return gamma * h;
    }
    return gamma * h;
}

double psi(const StateVector& x, const PhSystem& sys, const Barrier& b) {
    return unforced_rate(x, b.grad_h(x), sys) + b.alpha(b.h(x));
}

double barrier_rate(const StateVector& x, const Vector& u, const PhSystem& sys, const Barrier& b) {
    const Vector grad_h = b.grad_h(x);
    return unforced_rate(x, grad_h, sys) + grad_h.dot(sys.g(x) * u);
}

FilterResult filter(const StateVector& x, const PhSystem& sys, const Barrier& b,
                    const Tolerances& tol) {
    const Vector grad_h = b.grad_h(x);
    const Vector grad_H = sys.grad_H(x);
    const Matrix g = sys.g(x);
    const Vector gh = g.transpose() * grad_h;

    FilterResult r;
    r.psi = grad_h.dot((sys.J(x) - sys.R(x)) * grad_H) + b.alpha(b.h(x));
    r.denom = gh.squaredNorm();
    r.active = r.psi < 0.0;
    r.u_safe = Vector::Zero(sys.m);
    if (!r.active) {
        return r;
    }
    if (r.denom < tol.degeneracy) {
        std::ostringstream os;
        os << "CBF degeneracy: [h,h]_ggT = " << r.denom << " while psi = " << r.psi << " at "
           << describe_state(x);
        throw CbfDegeneracy(os.str());
    }
    r.u_safe = -(r.psi / r.denom) * gh;
    const double cross = (g.transpose() * grad_H).dot(gh);  // [H,h]_{ggᵀ}
    r.p_inj = -cross / r.denom * r.psi;
    return r;
}

Vector qp_oracle(const StateVector& x, const PhSystem& sys, const Barrier& b, const Vector& u_nom,
                 const Tolerances& tol) {
    if (u_nom.size() != sys.m) {
        throw ContractViolation("qp_oracle: u_nom has wrong length");
    }
    // Constraint a·u ≥ rhs.
    const Vector grad_h = b.grad_h(x);
    const Vector a = sys.g(x).transpose() * grad_h;
    const double rhs = -b.alpha(b.h(x)) - unforced_rate(x, grad_h, sys);

    if (a.dot(u_nom) >= rhs) {
        return u_nom;
    }
    const double aa = a.squaredNorm();
    if (aa == 0.0) {
        throw QpInfeasible("QP infeasible: constraint row vanishes at " + describe_state(x));
    }
    const Vector projected = u_nom + (rhs - a.dot(u_nom)) / aa * a;
    const Vector bisected = bisect_multiplier(a, rhs, u_nom);
    const double gap = (projected - bisected).norm();
    if (gap > tol.qp_agreement * std::max(1.0, projected.norm())) {
        std::ostringstream os;
        os << "qp_oracle: projection and bisection disagree by " << gap;
        throw NumericalError(os.str());
    }
    return projected;
}

double stability_condition(const StateVector& x, const PhSystem& sys, const Barrier& b) {
    if (!(psi(x, sys, b) < 0.0)) {
        return 0.0;
    }
    const Matrix g = sys.g(x);
    return (g.transpose() * sys.grad_H(x)).dot(g.transpose() * b.grad_h(x));
}

Barrier make_energy_barrier(const PhSystem& sys, int sign, double c, ClassKFunction alpha) {
    if (sign != 1 && sign != -1) {
        throw ContractViolation("make_energy_barrier: sign must be +1 or -1");
    }
    const double s = sign;
    Barrier b;
    b.h = [H = sys.H, s, c](const Vector& x) { return s * (H(x) - c); };
    b.grad_h = [gH = sys.grad_H, s](const Vector& x) -> Vector { return s * gH(x); };
    b.alpha = alpha;
    return b;
}

}  // namespace phcbf
