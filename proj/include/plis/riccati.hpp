#pragma once

#include "plis/common.hpp"

namespace plis {

struct RiccatiResult {
    Matrix P;         // stabilizing solution
    Matrix K;         // optimal gain
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Continuous-time algebraic Riccati equation A'P + PA - PBR^-1B'P + Q = 0,
/// solved by Kleinman iteration (requires A - B K0 stabilizable from K0 = 0,
/// i.e. A Hurwitz, which holds for every plant in this library).
/// Gain K = R^-1 B' P.
RiccatiResult care_solve(const Matrix& A, const Matrix& B, const Matrix& Q,
                         const Matrix& R, double tol = 1e-12, int max_iter = 200);

/// Discrete-time algebraic Riccati equation
/// P = A'PA - A'PB (R + B'PB)^-1 B'PA + Q, by fixed-point iteration.
/// Gain K = (R + B'PB)^-1 B'PA.
RiccatiResult dare_solve(const Matrix& A, const Matrix& B, const Matrix& Q,
                         const Matrix& R, double tol = 1e-12, int max_iter = 10000);

/// Residual norms of the corresponding Riccati equations (max-abs entry).
double care_residual(const Matrix& A, const Matrix& B, const Matrix& Q,
                     const Matrix& R, const Matrix& P);
double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q,
                     const Matrix& R, const Matrix& P);

}  // namespace plis
