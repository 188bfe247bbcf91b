#pragma once

#include <functional>

#include "plis/common.hpp"

namespace plis {

using MatrixFn = std::function<Matrix(double)>;

/// Linear plant with time-varying coefficients:
///
///   dx/dt = A(t) x + B(t) u,   x in R^n, u in R^m.
///
/// A and B are evaluable coefficient functions of time (minutes). Derivative
/// functions dA/dt, dB/dt may be supplied analytically; when omitted they fall
/// back to a central finite difference with step `kFdStep`.
class TimeVaryingLinearSystem {
public:
    /// Finite-difference step (minutes) for the derivative fallback.
    static constexpr double kFdStep = 0.01;

    TimeVaryingLinearSystem(int n, int m, MatrixFn A, MatrixFn B,
                            MatrixFn dA_dt = nullptr, MatrixFn dB_dt = nullptr);

    [[nodiscard]] int state_dim() const noexcept { return n_; }
    [[nodiscard]] int input_dim() const noexcept { return m_; }

    /// Evaluate A(t). Throws EvaluationError naming the entry and time if any
    /// entry is non-finite or the shape is wrong.
    [[nodiscard]] Matrix A(double t) const;
    [[nodiscard]] Matrix B(double t) const;

    /// Coefficient derivatives, analytic where supplied.
    [[nodiscard]] Matrix dA_dt(double t) const;
    [[nodiscard]] Matrix dB_dt(double t) const;

    [[nodiscard]] bool has_analytic_derivatives() const noexcept {
        return static_cast<bool>(dA_) && static_cast<bool>(dB_);
    }

private:
    Matrix checked(const MatrixFn& fn, double t, int rows, int cols, const char* name) const;

    int n_;
    int m_;
    MatrixFn A_;
    MatrixFn B_;
    MatrixFn dA_;
    MatrixFn dB_;
};

/// Coefficients held constant over one sub-interval [tau_start, tau_end].
/// Entries equal the parent system's A(tau_start), B(tau_start) exactly.
struct FrozenSystem {
    Matrix A;
    Matrix B;
    double tau_start = 0.0;
    double tau_end = 0.0;
};

/// Zero-order hold: freeze the coefficients at the interval start.
FrozenSystem zero_order_hold(const TimeVaryingLinearSystem& sys, double tau_j,
                             double tau_next);

}  // namespace plis
