#pragma once

#include <stdexcept>
#include <string>

namespace phcbf {

/// A caller broke a documented precondition (dimensions, symmetry, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Evaluation produced a non-finite value or a singular matrix.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The filter is active but [h,h]_{ggᵀ} vanishes, so no finite input exists.
class CbfDegeneracy : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class QpInfeasible : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The integrated state left the finite reals.
class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, double t)
        : NumericalError(what), time_(t) {}
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

/// Invalid scenario configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace phcbf
