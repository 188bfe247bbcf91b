#include "plis/riccati.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace plis {

namespace {

/// Solve the Lyapunov equation A'P + PA = C for symmetric C via the
/// Kronecker-vectorized linear system (systems here are tiny).
Matrix lyapunov_solve(const Matrix& A, const Matrix& C) {
    const auto n = A.rows();
    Matrix M = Matrix::Zero(n * n, n * n);
    const Matrix At = A.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            // vec index of P(i, j), column-major.
            const Eigen::Index row = i + j * n;
            for (Eigen::Index k = 0; k < n; ++k) {
                M(row, k + j * n) += At(i, k);  // (A' P)(i,j)
                M(row, i + k * n) += A(k, j);   // (P A)(i,j)
            }
        }
    }
    Vector rhs(n * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) rhs(i + j * n) = C(i, j);
    }
    Vector sol = M.fullPivLu().solve(rhs);
    Matrix P(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) P(i, j) = sol(i + j * n);
    }
    return 0.5 * (P + P.transpose());
}

}  // namespace

double care_residual(const Matrix& A, const Matrix& B, const Matrix& Q,
                     const Matrix& R, const Matrix& P) {
    const Matrix res = A.transpose() * P + P * A -
                       P * B * R.ldlt().solve(B.transpose() * P) + Q;
    return res.cwiseAbs().maxCoeff();
}

double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q,
                     const Matrix& R, const Matrix& P) {
    const Matrix BtPB = R + B.transpose() * P * B;
    const Matrix res = A.transpose() * P * A -
                       A.transpose() * P * B * BtPB.ldlt().solve(B.transpose() * P * A) +
                       Q - P;
    return res.cwiseAbs().maxCoeff();
}

RiccatiResult care_solve(const Matrix& A, const Matrix& B, const Matrix& Q,
                         const Matrix& R, double tol, int max_iter) {
    RiccatiResult out;
    const auto n = A.rows();
    Matrix K = Matrix::Zero(B.cols(), n);
    Matrix P = Matrix::Zero(n, n);
    for (int it = 0; it < max_iter; ++it) {
        const Matrix Acl = A - B * K;
        const Matrix rhs = -(Q + K.transpose() * R * K);
        const Matrix P_next = lyapunov_solve(Acl, rhs);
        const double delta = (P_next - P).cwiseAbs().maxCoeff();
        P = P_next;
        K = R.ldlt().solve(B.transpose() * P);
        out.iterations = it + 1;
        if (delta < tol) {
            out.converged = true;
            break;
        }
    }
    out.P = P;
    out.K = K;
    out.residual = care_residual(A, B, Q, R, P);
    return out;
}

RiccatiResult dare_solve(const Matrix& A, const Matrix& B, const Matrix& Q,
                         const Matrix& R, double tol, int max_iter) {
    RiccatiResult out;
    Matrix P = Q;
    for (int it = 0; it < max_iter; ++it) {
        const Matrix BtPB = R + B.transpose() * P * B;
        const Matrix gain = BtPB.ldlt().solve(B.transpose() * P * A);
        const Matrix P_next =
            A.transpose() * P * A - A.transpose() * P * B * gain + Q;
        const double delta = (P_next - P).cwiseAbs().maxCoeff();
        P = 0.5 * (P_next + P_next.transpose());
        out.iterations = it + 1;
        if (delta < tol) {
            out.converged = true;
            break;
        }
    }
    out.P = P;
    const Matrix BtPB = R + B.transpose() * P * B;
    out.K = BtPB.ldlt().solve(B.transpose() * P * A);
    out.residual = dare_residual(A, B, Q, R, P);
    return out;
}

}  // namespace plis
