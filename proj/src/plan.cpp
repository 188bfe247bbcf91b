#include "plis/plan.hpp"

#include <algorithm>
#include <cmath>

#include "plis/solvers.hpp"

namespace plis {

namespace {

constexpr double kDenomFloor = 1e-9;
constexpr double kSnap = 1e-9;

/// Signed value of the maximum-magnitude entry seen so far.
void track_extreme(Matrix& extreme, const Matrix& sample) {
    for (Eigen::Index i = 0; i < sample.rows(); ++i) {
        for (Eigen::Index j = 0; j < sample.cols(); ++j) {
            if (std::abs(sample(i, j)) > std::abs(extreme(i, j))) {
                extreme(i, j) = sample(i, j);
            }
        }
    }
}

/// Grid times covering [t0, t1] inclusive at step q.
std::vector<double> slope_grid(double t0, double t1, double q) {
    std::vector<double> grid;
    for (long k = 0;; ++k) {
        const double t = t0 + static_cast<double>(k) * q;
        if (t > t1 + kSnap) break;
        grid.push_back(std::min(t, t1));
    }
    if (grid.empty() || grid.back() < t1 - kSnap) grid.push_back(t1);
    return grid;
}

struct IntervalDetail {
    IntervalBound bound;
    Vector sq_err;   // per-state squared-error sums (H top vs X_p)
    Vector sq_ref;   // per-state squared-reference sums (X_p)
    long samples = 0;
    Vector x_end;    // chained X_p state at the interval end
};

IntervalDetail interval_error_detail(const FrozenSystem& frozen, const SlopeEstimate& nu,
                                     const Vector& x_start, const InputSignal& input,
                                     double q_sim) {
    const auto n = frozen.A.rows();
    const ExtendedSystem ext = build_extended_system(frozen, nu);

    OdeProblem plain;
    plain.rhs = linear_rhs(frozen.A, frozen.B);
    plain.input = input;
    plain.x0 = x_start;
    plain.t_start = frozen.tau_start;
    plain.t_end = frozen.tau_end;
    const Trace x_trace = euler_fixed(plain, q_sim);

    OdeProblem stacked;
    stacked.rhs = linear_rhs(ext.A_ex, ext.B_ex);
    stacked.input = input;
    Vector h0 = Vector::Zero(2 * n);
    h0.head(n) = x_start;
    stacked.x0 = h0;
    stacked.t_start = frozen.tau_start;
    stacked.t_end = frozen.tau_end;
    const Trace h_trace = euler_fixed(stacked, q_sim);

    IntervalDetail detail;
    detail.sq_err = Vector::Zero(n);
    detail.sq_ref = Vector::Zero(n);
    detail.samples = static_cast<long>(x_trace.size());
    for (std::size_t k = 0; k < x_trace.size(); ++k) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = h_trace.states[k](i) - x_trace.states[k](i);
            detail.sq_err(i) += d * d;
            detail.sq_ref(i) += x_trace.states[k](i) * x_trace.states[k](i);
        }
    }
    detail.bound.per_state_rmse.resize(n);
    const auto count = static_cast<double>(detail.samples);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double rmse = std::sqrt(detail.sq_err(i) / count);
        const double rms = std::max(std::sqrt(detail.sq_ref(i) / count), kDenomFloor);
        detail.bound.per_state_rmse(i) = rmse / rms;
        detail.bound.r_max = std::max(detail.bound.r_max, rmse / rms);
    }
    detail.x_end = x_trace.states.back();
    return detail;
}

/// Grid points where any coefficient derivative flips sign; the max-slope
/// bound assumes monotone coefficients within an interval.
std::vector<double> sign_change_times(const TimeVaryingLinearSystem& sys, double t0,
                                      double t1, double q_sim) {
    std::vector<double> splits;
    const auto grid = slope_grid(t0, t1, q_sim);
    if (grid.size() < 2) return splits;
    Matrix prev_a = sys.dA_dt(grid[0]);
    Matrix prev_b = sys.dB_dt(grid[0]);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const Matrix cur_a = sys.dA_dt(grid[k]);
        const Matrix cur_b = sys.dB_dt(grid[k]);
        bool flip = false;
        for (Eigen::Index i = 0; i < cur_a.rows() && !flip; ++i) {
            for (Eigen::Index j = 0; j < cur_a.cols() && !flip; ++j) {
                if (prev_a(i, j) * cur_a(i, j) < 0.0) flip = true;
            }
        }
        for (Eigen::Index i = 0; i < cur_b.rows() && !flip; ++i) {
            for (Eigen::Index j = 0; j < cur_b.cols() && !flip; ++j) {
                if (prev_b(i, j) * cur_b(i, j) < 0.0) flip = true;
            }
        }
        if (flip && grid[k] > t0 + kSnap && grid[k] < t1 - kSnap) {
            splits.push_back(grid[k]);
        }
        prev_a = cur_a;
        prev_b = cur_b;
    }
    return splits;
}

/// Partition into q_inv-wide intervals; a forced split ends the current
/// interval early and the cadence restarts there, so every interval spans
/// exactly q_inv except those cut short by a split or by the horizon.
std::vector<double> build_boundaries(double t0, double t1, double q_inv,
                                     const std::vector<double>& splits) {
    std::vector<double> bounds{t0};
    std::size_t split_idx = 0;
    double anchor = t0;
    long k = 1;
    while (true) {
        double next = anchor + static_cast<double>(k) * q_inv;
        while (split_idx < splits.size() && splits[split_idx] <= bounds.back() + kSnap) {
            ++split_idx;
        }
        if (split_idx < splits.size() && splits[split_idx] < next - kSnap) {
            next = splits[split_idx];
            ++split_idx;
            anchor = next;
            k = 1;
        } else {
            ++k;
        }
        if (next >= t1 - kSnap) break;
        bounds.push_back(next);
    }
    bounds.push_back(t1);
    return bounds;
}

}  // namespace

void ErrorBudget::validate() const {
    if (!(eps_p > 0.0 && eps_p <= psi_p && psi_p < 1.0)) {
        throw ConfigError("error budget must satisfy 0 < eps_p <= psi_p < 1");
    }
}

SlopeEstimate estimate_nu(const TimeVaryingLinearSystem& sys, double tau_start,
                          double tau_end, double q_inv, double q_sim) {
    Matrix extreme_a = Matrix::Zero(sys.state_dim(), sys.state_dim());
    Matrix extreme_b = Matrix::Zero(sys.state_dim(), sys.input_dim());
    for (double t : slope_grid(tau_start, tau_end, q_sim)) {
        track_extreme(extreme_a, sys.dA_dt(t));
        track_extreme(extreme_b, sys.dB_dt(t));
    }
    if (!extreme_a.allFinite() || !extreme_b.allFinite()) {
        throw EvaluationError("coefficient derivative is non-finite on the interval");
    }
    return SlopeEstimate{extreme_a * q_inv, extreme_b * q_inv};
}

ExtendedSystem build_extended_system(const FrozenSystem& frozen, const SlopeEstimate& nu) {
    const auto n = frozen.A.rows();
    const auto m = frozen.B.cols();
    if (nu.nu_A.rows() != n || nu.nu_A.cols() != n || nu.nu_B.rows() != n ||
        nu.nu_B.cols() != m) {
        throw ConstructionError("slope estimate shape does not match the frozen system");
    }
    ExtendedSystem ext;
    ext.A_ex = Matrix::Zero(2 * n, 2 * n);
    ext.A_ex.topLeftCorner(n, n) = frozen.A + nu.nu_A;
    ext.A_ex.topRightCorner(n, n) = frozen.A;
    ext.A_ex.bottomLeftCorner(n, n) = nu.nu_A;
    ext.B_ex = Matrix::Zero(2 * n, m);
    ext.B_ex.topRows(n) = frozen.B + nu.nu_B;
    ext.B_ex.bottomRows(n) = nu.nu_B;
    return ext;
}

IntervalBound interval_error_bound(const FrozenSystem& frozen, const SlopeEstimate& nu,
                                   const Vector& x_start, const InputSignal& input,
                                   double q_sim) {
    return interval_error_detail(frozen, nu, x_start, input, q_sim).bound;
}

InvariantStepPlan compute_invariant_step(const TimeVaryingLinearSystem& sys,
                                         const InputSignal& input, double t_start,
                                         double t_end, const Vector& x0,
                                         const ErrorBudget& budget,
                                         const PlanOptions& opts) {
    budget.validate();
    if (!(opts.q_sim > 0.0) || !(opts.decrement > 0.0)) {
        throw ConfigError("plan options require positive q_sim and decrement");
    }
    const auto splits = sign_change_times(sys, t_start, t_end, opts.q_sim);

    const auto attempt = [&](double q_inv, InvariantStepPlan& plan) {
        plan = InvariantStepPlan{};
        plan.q_inv = q_inv;
        const auto boundaries = build_boundaries(t_start, t_end, q_inv, splits);
        Vector x = x0;
        const auto n = sys.state_dim();
        Vector sq_err = Vector::Zero(n);
        Vector sq_ref = Vector::Zero(n);
        long samples = 0;
        for (std::size_t j = 0; j + 1 < boundaries.size(); ++j) {
            FrozenSystem frozen = zero_order_hold(sys, boundaries[j], boundaries[j + 1]);
            SlopeEstimate nu =
                estimate_nu(sys, boundaries[j], boundaries[j + 1], q_inv, opts.q_sim);
            IntervalDetail detail = interval_error_detail(frozen, nu, x, input, opts.q_sim);
            plan.worst_interval_error = std::max(plan.worst_interval_error, detail.bound.r_max);
            plan.trace_error_alg1_sum += detail.bound.r_max;
            plan.intervals.push_back(
                PlanInterval{std::move(frozen), std::move(nu), detail.bound.r_max});
            sq_err += detail.sq_err;
            sq_ref += detail.sq_ref;
            samples += detail.samples;
            x = detail.x_end;
        }
        const auto count = static_cast<double>(samples);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double rmse = std::sqrt(sq_err(i) / count);
            const double rms = std::max(std::sqrt(sq_ref(i) / count), kDenomFloor);
            plan.trace_error_rmse = std::max(plan.trace_error_rmse, rmse / rms);
        }
        return plan.worst_interval_error <= budget.eps_p &&
               plan.trace_error(opts.error_mode) <= budget.psi_p;
    };

    // Keep q_inv on the q_sim lattice so interval boundaries stay on the grid.
    const double floor_q = opts.q_sim;
    double q_inv = std::max(floor_q, std::floor(opts.initial_q_inv / opts.q_sim + kSnap) *
                                         opts.q_sim);
    InvariantStepPlan plan;
    while (true) {
        if (attempt(q_inv, plan)) {
            plan.converged = true;
            return plan;
        }
        if (q_inv <= floor_q + kSnap) {
            plan.converged = false;  // budgets unattainable above the q_sim floor
            return plan;
        }
        q_inv = std::max(floor_q, q_inv - opts.decrement);
    }
}

}  // namespace plis
