#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace plis {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A coefficient or derivative evaluated to a non-finite value.
struct EvaluationError : Error {
    using Error::Error;
};

/// A time argument fell outside the signal/system horizon.
struct RangeError : Error {
    using Error::Error;
};

/// Two traces that must share a sample grid do not.
struct AlignmentError : Error {
    using Error::Error;
};

/// A simulated state became non-finite.
struct DivergenceError : Error {
    DivergenceError(const std::string& what, double first_bad_time)
        : Error(what), first_bad_time(first_bad_time) {}
    double first_bad_time;
};

/// Adaptive step size underflowed (problem too stiff for an explicit solver).
struct StiffnessError : Error {
    using Error::Error;
};

/// Block shapes do not agree when assembling a composite system.
struct ConstructionError : Error {
    using Error::Error;
};

/// Invalid configuration value or schema violation.
struct ConfigError : Error {
    using Error::Error;
};

/// Not enough (or degenerate) data for a model fit.
struct FitError : Error {
    using Error::Error;
};

}  // namespace plis
