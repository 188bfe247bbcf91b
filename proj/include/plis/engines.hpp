#pragma once

#include <vector>

#include "plis/ap_model.hpp"
#include "plis/common.hpp"
#include "plis/controllers.hpp"
#include "plis/koopman.hpp"
#include "plis/ltv.hpp"
#include "plis/plan.hpp"
#include "plis/solvers.hpp"
#include "plis/trace.hpp"
#include "plis/wmn.hpp"

namespace plis {

/// Closed-loop wiring shared by every engine. With a null controller the run
/// is open loop: the basal command is held for the whole horizon, so the
/// applied input equals `exogenous` exactly.
struct LoopSetup {
    Controller* controller = nullptr;
    const WmnEventSchedule* schedule = nullptr;
    double tick_period = 5.0;    // minutes between controller updates
    double basal_command = 0.0;  // command reference
    int command_channel = -1;    // channel receiving (command - basal); -1: none
    InputSignal exogenous = InputSignal::constant(Vector::Zero(1), 1.0);
};

/// Build the loop wiring for one patient over [0, horizon] with the patient's
/// day meal pattern expanded to the horizon.
LoopSetup make_loop_setup(const VirtualPatient& patient, double horizon,
                          Controller* controller, const WmnEventSchedule* schedule,
                          double tick_period = 5.0, double carb_to_glucose = 4.5);

/// One engine run: the trace plus the applied command log (time, command).
struct RunResult {
    Trace trace;
    std::vector<std::pair<double, double>> commands;
};

/// Reference engine: integrates the full time-varying dynamics with the
/// adaptive solver, restarting at every event, controller tick and input edge.
RunResult oracle_simulate(const TimeVaryingLinearSystem& sys, const LoopSetup& setup,
                          const Vector& x0, double t_start, double t_end,
                          const SolverConfig& cfg);

/// Piecewise-LTI engine: integrates each plan interval's frozen system with
/// fixed-step Euler; interval boundaries, events and ticks act as breakpoints
/// and the state is continuous across them.
RunResult plis_simulate(const TimeVaryingLinearSystem& sys, const LoopSetup& setup,
                        const Vector& x0, double t_start, double t_end,
                        const InvariantStepPlan& plan, double q_sim);

/// Lifted-LTI engine: iterates the fitted discrete model at its step and
/// emits the unlifted states. The initial window is padded by holding x0.
RunResult koopman_simulate(const KoopmanModel& model, const LoopSetup& setup,
                           const Vector& x0, double t_start, double t_end);

}  // namespace plis
