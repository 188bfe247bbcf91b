#include "plis/engines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace plis {

namespace {

constexpr double kSnap = 1e-9;

bool near(double a, double b) { return std::abs(a - b) <= kSnap; }

/// Advances one constant-input segment; concrete engines differ only here.
/// Samples after `a` are appended to `out` and `x` is updated in place.
struct SegmentIntegrator {
    virtual ~SegmentIntegrator() = default;
    virtual void extend(double a, double b, Vector& x, const Vector& u, Trace& out) = 0;
};

struct OracleIntegrator final : SegmentIntegrator {
    OdeRhs rhs;
    SolverConfig cfg;
    OracleIntegrator(const TimeVaryingLinearSystem& sys, const SolverConfig& cfg)
        : rhs(ltv_rhs(sys)), cfg(cfg) {}
    void extend(double a, double b, Vector& x, const Vector& u, Trace& out) override {
        Trace segment =
            rk45_adaptive(OdeProblem{rhs, InputSignal::constant(u, b), x, a, b}, cfg);
        for (std::size_t k = 1; k < segment.times.size(); ++k) {
            out.times.push_back(segment.times[k]);
            out.states.push_back(std::move(segment.states[k]));
        }
        x = out.states.back();
    }
};

struct PlisIntegrator final : SegmentIntegrator {
    const TimeVaryingLinearSystem& sys;
    const InvariantStepPlan& plan;
    double q_sim;
    std::size_t idx = 0;
    OdeRhs frozen_rhs;
    double tau_start = 0.0, tau_end = 0.0;
    bool primed = false;
    PlisIntegrator(const TimeVaryingLinearSystem& sys, const InvariantStepPlan& plan,
                   double q_sim)
        : sys(sys), plan(plan), q_sim(q_sim) {}
    void extend(double a, double b, Vector& x, const Vector& u, Trace& out) override {
        bool advanced = !primed;
        while (idx + 1 < plan.intervals.size() &&
               plan.intervals[idx].frozen.tau_end <= a + kSnap) {
            ++idx;
            advanced = true;
        }
        if (advanced) {
            // Freeze the coefficients at the interval start (the plan fixes
            // the boundaries; the hold itself is the engine's job).
            const auto& slot = plan.intervals[idx].frozen;
            const FrozenSystem frozen = zero_order_hold(sys, slot.tau_start, slot.tau_end);
            frozen_rhs = linear_rhs(frozen.A, frozen.B);
            tau_start = frozen.tau_start;
            tau_end = frozen.tau_end;
            primed = true;
        }
        if (a < tau_start - kSnap || b > tau_end + kSnap) {
            throw RangeError("segment crosses a plan interval boundary");
        }
        Trace piece =
            euler_fixed(OdeProblem{frozen_rhs, InputSignal::constant(u, b), x, a, b}, q_sim);
        for (std::size_t k = 1; k < piece.times.size(); ++k) {
            out.times.push_back(piece.times[k]);
            out.states.push_back(std::move(piece.states[k]));
        }
        x = out.states.back();
    }
};

struct KoopmanIntegrator final : SegmentIntegrator {
    const KoopmanModel& model;
    Vector z;
    Vector z_next;
    KoopmanIntegrator(const KoopmanModel& model, const Vector& x0)
        : model(model), z(model.n_k), z_next(model.n_k) {
        std::vector<Vector> window(static_cast<std::size_t>(model.max_delay()) + 1, x0);
        z = model.lift(window);
    }
    void extend(double a, double b, Vector& x, const Vector& u, Trace& out) override {
        long k = 0;
        double t = a;
        while (t < b - kSnap) {
            ++k;
            double t_next = a + static_cast<double>(k) * model.step;
            if (t_next >= b - kSnap) t_next = b;
            z_next.noalias() = model.A_k * z;
            z_next.noalias() += model.B_k * u;
            z.swap(z_next);
            if (!z.allFinite()) {
                throw DivergenceError("koopman_simulate: lifted state diverged", t_next);
            }
            out.times.push_back(t_next);
            out.states.push_back(model.unlift(z));
            t = t_next;
        }
        x = out.states.back();
    }
};

/// Event application, controller ticks, segment integration and trace merging
/// shared by every engine. The wall clock covers exactly this loop.
RunResult drive(const LoopSetup& setup, const Vector& x0, double t0, double t1,
                double q_sim, SegmentIntegrator& integrator, const char* label,
                const std::vector<double>& extra_breakpoints) {
    if (!(t1 > t0)) throw ConfigError("simulation span must have positive width");
    if (setup.exogenous.horizon() < t1 - kSnap) {
        throw ConfigError("exogenous input does not cover the simulation span");
    }

    std::vector<double> ticks;
    if (setup.controller != nullptr) {
        for (long k = 0;; ++k) {
            const double t = t0 + static_cast<double>(k) * setup.tick_period;
            if (t >= t1 - kSnap) break;
            ticks.push_back(t);
        }
    }
    std::vector<double> events;
    if (setup.schedule != nullptr) {
        for (const auto& ev : setup.schedule->events) {
            if (ev.time >= t0 - kSnap && ev.time < t1 - kSnap) events.push_back(ev.time);
        }
    }

    std::vector<double> breakpoints{t0, t1};
    breakpoints.insert(breakpoints.end(), ticks.begin(), ticks.end());
    breakpoints.insert(breakpoints.end(), events.begin(), events.end());
    breakpoints.insert(breakpoints.end(), extra_breakpoints.begin(), extra_breakpoints.end());
    for (double bp : setup.exogenous.breakpoints()) {
        if (bp > t0 + kSnap && bp < t1 - kSnap) breakpoints.push_back(bp);
    }
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end(), near),
                      breakpoints.end());
    for (double bp : breakpoints) {
        const double steps = (bp - t0) / q_sim;
        if (std::abs(steps - std::round(steps)) > 1e-6) {
            throw ConfigError("breakpoints must lie on the q_sim grid");
        }
    }

    RunResult result;
    Trace& trace = result.trace;
    trace.engine_label = label;
    trace.times.reserve(static_cast<std::size_t>((t1 - t0) / q_sim) + 2);
    trace.states.reserve(trace.times.capacity());
    trace.times.push_back(t0);
    trace.states.push_back(x0);

    Controller* ctrl = setup.controller;
    if (ctrl != nullptr) ctrl->reset();
    double command = setup.basal_command;
    Vector x = x0;
    Vector u(setup.exogenous.dim());
    std::size_t event_idx = 0;
    static const std::vector<WmnEvent> kNoEvents;
    const auto& schedule_events =
        setup.schedule != nullptr ? setup.schedule->events : kNoEvents;
    std::size_t tick_idx = 0;

    const auto started = std::chrono::steady_clock::now();
    for (std::size_t s = 0; s + 1 < breakpoints.size(); ++s) {
        const double a = breakpoints[s];
        const double b = breakpoints[s + 1];

        if (ctrl != nullptr) {
            while (event_idx < schedule_events.size() &&
                   schedule_events[event_idx].time <= a + kSnap) {
                ctrl->apply_event(schedule_events[event_idx]);
                ++event_idx;
            }
            if (tick_idx < ticks.size() && near(ticks[tick_idx], a)) {
                command = ctrl->tick(a, setup.tick_period, x);
                result.commands.emplace_back(a, command);
                ++tick_idx;
            }
        }

        u = setup.exogenous.at(a);
        if (setup.command_channel >= 0) {
            u(setup.command_channel) += command - setup.basal_command;
        }

        integrator.extend(a, b, x, u, trace);
    }
    const auto finished = std::chrono::steady_clock::now();
    trace.wall_clock_seconds =
        std::chrono::duration<double>(finished - started).count();
    trace.event_times = events;
    return result;
}

}  // namespace

LoopSetup make_loop_setup(const VirtualPatient& patient, double horizon,
                          Controller* controller, const WmnEventSchedule* schedule,
                          double tick_period, double carb_to_glucose) {
    LoopSetup setup;
    setup.controller = controller;
    setup.schedule = schedule;
    setup.tick_period = tick_period;
    setup.basal_command = patient.bmm.i_b;
    setup.command_channel = 0;
    setup.exogenous = open_loop_input(patient, horizon, carb_to_glucose);
    return setup;
}

RunResult oracle_simulate(const TimeVaryingLinearSystem& sys, const LoopSetup& setup,
                          const Vector& x0, double t_start, double t_end,
                          const SolverConfig& cfg) {
    OracleIntegrator integrator(sys, cfg);
    return drive(setup, x0, t_start, t_end, cfg.q_sim, integrator, "oracle", {});
}

RunResult plis_simulate(const TimeVaryingLinearSystem& sys, const LoopSetup& setup,
                        const Vector& x0, double t_start, double t_end,
                        const InvariantStepPlan& plan, double q_sim) {
    if (plan.intervals.empty()) throw ConfigError("plis_simulate requires a non-empty plan");
    if (sys.state_dim() != plan.intervals.front().frozen.A.rows()) {
        throw ConfigError("plan dimensions do not match the system");
    }
    std::vector<double> boundaries;
    for (const auto& interval : plan.intervals) {
        if (interval.frozen.tau_start > t_start + kSnap &&
            interval.frozen.tau_start < t_end - kSnap) {
            boundaries.push_back(interval.frozen.tau_start);
        }
    }
    PlisIntegrator integrator(sys, plan, q_sim);
    return drive(setup, x0, t_start, t_end, q_sim, integrator, "plis", boundaries);
}

RunResult koopman_simulate(const KoopmanModel& model, const LoopSetup& setup,
                           const Vector& x0, double t_start, double t_end) {
    KoopmanIntegrator integrator(model, x0);
    return drive(setup, x0, t_start, t_end, model.step, integrator, "koopman", {});
}

}  // namespace plis
