#pragma once

#include <functional>

#include "plis/common.hpp"
#include "plis/input_signal.hpp"
#include "plis/ltv.hpp"
#include "plis/trace.hpp"

namespace plis {

/// Right-hand side writing dx/dt into `dxdt` (preallocated, size n).
using OdeRhs = std::function<void(double t, const Vector& x, const Vector& u, Vector& dxdt)>;

/// Generic carrier for an initial-value problem driven by a piecewise-constant
/// input. The input signal covers [0, T] with [t_start, t_end] inside it.
struct OdeProblem {
    OdeRhs rhs;
    InputSignal input = InputSignal::constant(Vector::Zero(1), 1.0);
    Vector x0;
    double t_start = 0.0;
    double t_end = 0.0;
};

struct SolverConfig {
    double q_sim = 1.0;     // fixed step / output grid (minutes)
    double rel_tol = 1e-6;  // adaptive relative tolerance
    double abs_tol = 1e-8;  // adaptive absolute tolerance
    double max_step = 30.0; // adaptive step ceiling (minutes)
};

/// Output grid shared by every engine: {t_start + k q_sim} with a final
/// partial step shortened to land exactly on t_end.
std::vector<double> sample_grid(double t_start, double t_end, double q_sim);

/// Explicit Euler on the uniform grid: x_{k+1} = x_k + h rhs(t_k, x_k, u(t_k)).
Trace euler_fixed(const OdeProblem& problem, double q_sim);

/// Step kernel of euler_fixed with a constant input, appending every sample
/// after t_start to `out` and advancing `x` in place. Identical arithmetic to
/// euler_fixed on a span where u(t) is constant.
void euler_extend(const OdeRhs& rhs, const Vector& u, Vector& x, double t_start,
                  double t_end, double q_sim, Trace& out);

/// Dormand-Prince 4(5) embedded pair with a PI step controller. Dense output
/// is resampled onto the q_sim grid so all engines share a grid. Integration
/// restarts at every input breakpoint.
Trace rk45_adaptive(const OdeProblem& problem, const SolverConfig& cfg);

/// rhs closure for dx/dt = A x + B u with fixed coefficient matrices.
/// Accumulation order is a plain row-major loop, so results are reproducible
/// across state paddings (a zero block appended to A leaves sums bit-identical).
OdeRhs linear_rhs(Matrix A, Matrix B);

/// rhs closure evaluating the time-varying coefficients at every call.
OdeRhs ltv_rhs(const TimeVaryingLinearSystem& sys);

}  // namespace plis
