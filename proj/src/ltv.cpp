#include "plis/ltv.hpp"

#include <cmath>
#include <sstream>

namespace plis {

TimeVaryingLinearSystem::TimeVaryingLinearSystem(int n, int m, MatrixFn A, MatrixFn B,
                                                 MatrixFn dA_dt, MatrixFn dB_dt)
    : n_(n), m_(m), A_(std::move(A)), B_(std::move(B)),
      dA_(std::move(dA_dt)), dB_(std::move(dB_dt)) {
    if (n_ <= 0 || m_ <= 0) {
        throw ConstructionError("system dimensions must be positive");
    }
    if (!A_ || !B_) {
        throw ConstructionError("coefficient functions A and B are required");
    }
}

Matrix TimeVaryingLinearSystem::checked(const MatrixFn& fn, double t, int rows, int cols,
                                        const char* name) const {
    Matrix value = fn(t);
    if (value.rows() != rows || value.cols() != cols) {
        std::ostringstream msg;
        msg << name << "(t) returned shape " << value.rows() << "x" << value.cols()
            << ", expected " << rows << "x" << cols;
        throw EvaluationError(msg.str());
    }
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            if (!std::isfinite(value(i, j))) {
                std::ostringstream msg;
                msg << name << "(" << i << "," << j << ") is non-finite at t=" << t;
                throw EvaluationError(msg.str());
            }
        }
    }
    return value;
}

Matrix TimeVaryingLinearSystem::A(double t) const { return checked(A_, t, n_, n_, "A"); }

Matrix TimeVaryingLinearSystem::B(double t) const { return checked(B_, t, n_, m_, "B"); }

Matrix TimeVaryingLinearSystem::dA_dt(double t) const {
    if (dA_) return checked(dA_, t, n_, n_, "dA_dt");
    return (A(t + kFdStep) - A(t - kFdStep)) / (2.0 * kFdStep);
}

Matrix TimeVaryingLinearSystem::dB_dt(double t) const {
    if (dB_) return checked(dB_, t, n_, m_, "dB_dt");
    return (B(t + kFdStep) - B(t - kFdStep)) / (2.0 * kFdStep);
}

FrozenSystem zero_order_hold(const TimeVaryingLinearSystem& sys, double tau_j,
                             double tau_next) {
    if (tau_next < tau_j) {
        throw ConstructionError("frozen interval end precedes its start");
    }
    return FrozenSystem{sys.A(tau_j), sys.B(tau_j), tau_j, tau_next};
}

}  // namespace plis
