#include "plis/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace plis {

namespace {

constexpr double kGridSnap = 1e-9;

[[noreturn]] void throw_divergence(const char* solver, double t) {
    std::ostringstream msg;
    msg << solver << ": state became non-finite at t=" << t;
    throw DivergenceError(msg.str(), t);
}

/// Manual mat-vec with linear accumulation; see linear_rhs contract.
void affine_apply(const Matrix& A, const Vector& x, const Matrix& B, const Vector& u,
                  Vector& out) {
    const auto n = A.rows();
    const auto nc = A.cols();
    const auto mc = B.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < nc; ++k) acc += A(i, k) * x(k);
        for (Eigen::Index k = 0; k < mc; ++k) acc += B(i, k) * u(k);
        out(i) = acc;
    }
}

}  // namespace

std::vector<double> sample_grid(double t_start, double t_end, double q_sim) {
    if (!(q_sim > 0.0)) throw ConstructionError("q_sim must be positive");
    if (!(t_end > t_start)) throw ConstructionError("span must have positive width");
    std::vector<double> grid;
    const double span = t_end - t_start;
    grid.reserve(static_cast<std::size_t>(span / q_sim) + 2);
    for (long k = 0;; ++k) {
        const double t = t_start + static_cast<double>(k) * q_sim;
        if (t >= t_end - kGridSnap) break;
        grid.push_back(t);
    }
    grid.push_back(t_end);
    return grid;
}

OdeRhs linear_rhs(Matrix A, Matrix B) {
    return [A = std::move(A), B = std::move(B)](double, const Vector& x, const Vector& u,
                                                Vector& dxdt) {
        affine_apply(A, x, B, u, dxdt);
    };
}

OdeRhs ltv_rhs(const TimeVaryingLinearSystem& sys) {
    return [&sys](double t, const Vector& x, const Vector& u, Vector& dxdt) {
        affine_apply(sys.A(t), x, sys.B(t), u, dxdt);
    };
}

Trace euler_fixed(const OdeProblem& problem, double q_sim) {
    if (!problem.x0.allFinite()) throw ConstructionError("initial state must be finite");
    const auto grid = sample_grid(problem.t_start, problem.t_end, q_sim);

    Trace trace;
    trace.times = grid;
    trace.states.reserve(grid.size());

    Vector x = problem.x0;
    Vector dxdt(x.size());
    trace.states.push_back(x);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double t = grid[k];
        const double h = grid[k + 1] - grid[k];
        const Vector& u = problem.input.at(t);
        problem.rhs(t, x, u, dxdt);
        x += h * dxdt;
        if (!x.allFinite()) throw_divergence("euler_fixed", grid[k + 1]);
        trace.states.push_back(x);
    }
    return trace;
}

void euler_extend(const OdeRhs& rhs, const Vector& u, Vector& x, double t_start,
                  double t_end, double q_sim, Trace& out) {
    Vector dxdt(x.size());
    long k = 0;
    double t = t_start;
    while (t < t_end - kGridSnap) {
        ++k;
        double t_next = t_start + static_cast<double>(k) * q_sim;
        if (t_next >= t_end - kGridSnap) t_next = t_end;
        const double h = t_next - t;
        rhs(t, x, u, dxdt);
        x += h * dxdt;
        if (!x.allFinite()) throw_divergence("euler_fixed", t_next);
        out.times.push_back(t_next);
        out.states.push_back(x);
        t = t_next;
    }
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// Error weights (5th minus embedded 4th order).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

// 4th-order dense-output polynomial: y(t0+θh) = y0 + hθ Σ_i k_i P_i(θ).
constexpr double kDense[7][4] = {
    {1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0,
     -12715105075.0 / 11282082432.0},
    {0.0, 0.0, 0.0, 0.0},
    {0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0,
     87487479700.0 / 32700410799.0},
    {0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0,
     -10690763975.0 / 1880347072.0},
    {0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0,
     701980252875.0 / 199316789632.0},
    {0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0,
     -1453857185.0 / 822651844.0},
    {0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0}};

constexpr double kMinStep = 1e-10;

struct Dopri5 {
    const OdeRhs& rhs;
    const Vector& u;
    Vector k[7];
    Vector y_stage;
    Vector y_new;
    Vector err;

    explicit Dopri5(const OdeRhs& rhs, const Vector& u, Eigen::Index n)
        : rhs(rhs), u(u), y_stage(n), y_new(n), err(n) {
        for (auto& ki : k) ki.resize(n);
    }

    /// One trial step from (t, y) with size h; k[0] must hold f(t, y).
    void attempt(double t, const Vector& y, double h) {
        y_stage = y + h * (a21 * k[0]);
        rhs(t + c2 * h, y_stage, u, k[1]);
        y_stage = y + h * (a31 * k[0] + a32 * k[1]);
        rhs(t + c3 * h, y_stage, u, k[2]);
        y_stage = y + h * (a41 * k[0] + a42 * k[1] + a43 * k[2]);
        rhs(t + c4 * h, y_stage, u, k[3]);
        y_stage = y + h * (a51 * k[0] + a52 * k[1] + a53 * k[2] + a54 * k[3]);
        rhs(t + c5 * h, y_stage, u, k[4]);
        y_stage = y + h * (a61 * k[0] + a62 * k[1] + a63 * k[2] + a64 * k[3] + a65 * k[4]);
        rhs(t + h, y_stage, u, k[5]);
        y_new = y + h * (b1 * k[0] + b3 * k[2] + b4 * k[3] + b5 * k[4] + b6 * k[5]);
        rhs(t + h, y_new, u, k[6]);  // FSAL
        err = h * (e1 * k[0] + e3 * k[2] + e4 * k[3] + e5 * k[4] + e6 * k[5] + e7 * k[6]);
    }

    [[nodiscard]] double error_norm(const Vector& y, const SolverConfig& cfg) const {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double scale =
                cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y(i)), std::abs(y_new(i)));
            const double r = err(i) / scale;
            sum += r * r;
        }
        return std::sqrt(sum / static_cast<double>(y.size()));
    }

    /// Dense interpolation within the accepted step [t0, t0+h].
    void interpolate(const Vector& y0, double h, double theta, Vector& out) const {
        out = y0;
        for (int i = 0; i < 7; ++i) {
            const double p =
                kDense[i][0] +
                theta * (kDense[i][1] + theta * (kDense[i][2] + theta * kDense[i][3]));
            out += (h * theta * p) * k[i];
        }
    }
};

}  // namespace

Trace rk45_adaptive(const OdeProblem& problem, const SolverConfig& cfg) {
    if (!problem.x0.allFinite()) throw ConstructionError("initial state must be finite");
    const auto grid = sample_grid(problem.t_start, problem.t_end, cfg.q_sim);

    Trace trace;
    trace.times = grid;
    trace.states.reserve(grid.size());
    trace.states.push_back(problem.x0);
    std::size_t next_sample = 1;

    // Segment ends: input breakpoints inside the span, then t_end.
    std::vector<double> segment_ends;
    for (double bp : problem.input.breakpoints()) {
        if (bp > problem.t_start + kGridSnap && bp < problem.t_end - kGridSnap) {
            segment_ends.push_back(bp);
        }
    }
    segment_ends.push_back(problem.t_end);

    const auto n = problem.x0.size();
    Vector y = problem.x0;
    double t = problem.t_start;
    double err_prev = 1.0;

    for (double seg_end : segment_ends) {
        const Vector& u = problem.input.at(t);
        Dopri5 stepper(problem.rhs, u, n);
        problem.rhs(t, y, u, stepper.k[0]);
        double h = std::min(cfg.max_step, seg_end - t);

        while (t < seg_end - kGridSnap) {
            h = std::min(h, seg_end - t);
            if (h < kMinStep) {
                throw StiffnessError("rk45_adaptive: step size underflow");
            }
            stepper.attempt(t, y, h);
            if (!stepper.y_new.allFinite()) throw_divergence("rk45_adaptive", t + h);
            const double err = stepper.error_norm(y, cfg);
            if (err <= 1.0) {
                // Emit grid samples covered by this step.
                while (next_sample < grid.size() && grid[next_sample] <= t + h + kGridSnap) {
                    if (std::abs(grid[next_sample] - (t + h)) <= kGridSnap) {
                        trace.states.push_back(stepper.y_new);
                    } else {
                        const double theta =
                            std::clamp((grid[next_sample] - t) / h, 0.0, 1.0);
                        Vector sample(n);
                        stepper.interpolate(y, h, theta, sample);
                        trace.states.push_back(std::move(sample));
                    }
                    ++next_sample;
                }
                t += h;
                y = stepper.y_new;
                stepper.k[0] = stepper.k[6];  // FSAL
                const double safe_err = std::max(err, 1e-10);
                double factor = 0.9 * std::pow(safe_err, -0.7 / 5.0) *
                                std::pow(std::max(err_prev, 1e-10), 0.4 / 5.0);
                factor = std::clamp(factor, 0.2, 5.0);
                h = std::min(h * factor, cfg.max_step);
                err_prev = safe_err;
            } else {
                h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
            }
        }
        // Land exactly on the segment boundary.
        t = seg_end;
        if (next_sample < grid.size() && grid[next_sample] <= seg_end + kGridSnap) {
            trace.states.push_back(y);
            ++next_sample;
        }
    }
    while (next_sample < grid.size()) {  // numeric tail guard
        trace.states.push_back(y);
        ++next_sample;
    }
    return trace;
}

}  // namespace plis
