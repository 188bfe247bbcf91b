#pragma once

#include <vector>

#include "plis/common.hpp"
#include "plis/input_signal.hpp"
#include "plis/ltv.hpp"

namespace plis {

/// Dual error budget: eps_p bounds each trajectory piece, psi_p the whole trace.
struct ErrorBudget {
    double eps_p = 0.03;
    double psi_p = 0.05;

    void validate() const;
};

/// Conservative per-entry coefficient perturbation over one sub-interval:
/// the signed maximum-magnitude slope of each coefficient times q_inv.
/// Entries are zero wherever the coefficient is constant.
struct SlopeEstimate {
    Matrix nu_A;  // n x n
    Matrix nu_B;  // n x m
};

/// Stacked error-propagation system over [X_p; mu]:
///
///   A_ex = [ A_j + nu_A   A_j ]      B_ex = [ B_j + nu_B ]
///          [ nu_A         0   ]             [ nu_B       ]
///
/// The mu block carries the zero-order-hold coefficient error; its initial
/// condition is zero at every interval start.
struct ExtendedSystem {
    Matrix A_ex;  // 2n x 2n
    Matrix B_ex;  // 2n x m
};

SlopeEstimate estimate_nu(const TimeVaryingLinearSystem& sys, double tau_start,
                          double tau_end, double q_inv, double q_sim);

ExtendedSystem build_extended_system(const FrozenSystem& frozen, const SlopeEstimate& nu);

struct IntervalBound {
    double r_max = 0.0;     // max over states of the relative RMSE bound
    Vector per_state_rmse;  // relative RMSE bound per state
};

/// Simulate the extended system and the frozen system over the interval with
/// the same fixed-step Euler kernel; the per-state relative RMSE between the
/// top block of H and X_p upper-bounds the coefficient-freezing error.
IntervalBound interval_error_bound(const FrozenSystem& frozen, const SlopeEstimate& nu,
                                   const Vector& x_start, const InputSignal& input,
                                   double q_sim);

enum class TraceErrorMode {
    alg1_sum,    // sum of per-interval bounds (conservative)
    trace_rmse,  // relative RMSE over the whole concatenated bound trace
};

struct PlanOptions {
    double initial_q_inv = 60.0;  // minutes
    double decrement = 1.0;       // shrink step d (minutes)
    double q_sim = 1.0;           // Euler step and slope-sampling grid
    TraceErrorMode error_mode = TraceErrorMode::trace_rmse;
};

struct PlanInterval {
    FrozenSystem frozen;
    SlopeEstimate nu;
    double r_max = 0.0;
};

/// Result of the invariant-step search: the interval width q_inv, the frozen
/// systems and slope estimates per interval, per-interval error bounds and
/// both trace-level error aggregates.
struct InvariantStepPlan {
    double q_inv = 0.0;
    std::vector<PlanInterval> intervals;
    double worst_interval_error = 0.0;
    double trace_error_alg1_sum = 0.0;
    double trace_error_rmse = 0.0;
    bool converged = false;

    [[nodiscard]] double trace_error(TraceErrorMode mode) const {
        return mode == TraceErrorMode::alg1_sum ? trace_error_alg1_sum : trace_error_rmse;
    }
};

/// Shrink-and-restart search for the widest q_inv whose per-interval bounds
/// stay within eps_p and whose trace-level bound stays within psi_p.
///
/// The span is partitioned into q_inv-wide intervals; interval boundaries are
/// also forced at every sign change of a coefficient derivative so the
/// max-slope bound applies to monotone pieces. On failure the search shrinks
/// q_inv by `decrement` and restarts; if the q_sim floor still violates a
/// budget the best (floor) plan is returned with converged = false.
InvariantStepPlan compute_invariant_step(const TimeVaryingLinearSystem& sys,
                                         const InputSignal& input, double t_start,
                                         double t_end, const Vector& x0,
                                         const ErrorBudget& budget,
                                         const PlanOptions& opts = {});

}  // namespace plis
