#pragma once

#include <array>
#include <memory>
#include <vector>

#include "plis/ap_model.hpp"
#include "plis/common.hpp"
#include "plis/ltv.hpp"
#include "plis/wmn.hpp"

namespace plis {

enum class ControllerKind { pid, mpc, bayesian_lqg };

[[nodiscard]] const char* to_string(ControllerKind kind);

/// Closed-loop control strategy u(t) = g(Y, X). A controller instance is
/// owned by exactly one simulation run; ticks mutate only that instance.
/// Commands are insulin rates in uU/mL/min, always clamped to [0, u_max].
class Controller {
public:
    virtual ~Controller() = default;

    [[nodiscard]] virtual ControllerKind kind() const = 0;

    /// Compute the insulin command at tick time t (dt = tick period, minutes).
    /// `state` is the current plant state estimate [i, i_s, G].
    virtual double tick(double t, double dt, const Vector& state) = 0;

    /// Apply a configuration-change event. Throws ConfigError if the event
    /// does not fit this controller's schema.
    virtual void apply_event(const WmnEvent& event) = 0;

    /// Schema check without application.
    virtual void validate_event(const WmnEvent& event) const = 0;

    virtual void reset() = 0;

    [[nodiscard]] double basal() const noexcept { return basal_; }
    [[nodiscard]] double u_max() const noexcept { return u_max_; }

protected:
    Controller(double basal, double u_max) : basal_(basal), u_max_(u_max) {}
    [[nodiscard]] double clamp_command(double raw) const;

    double basal_;
    double u_max_;
};

// ---------------------------------------------------------------------------

struct PidConfig {
    double kp = 0.05;    // command units per mg/dL
    double ki = 0.0005;  // command units per mg/dL/min
    double kd = 0.1;     // command units per mg/dL*min
    double setpoint = 120.0;
    double u_max = 10.0;
};

/// PID on the glucose error with trapezoidal integral, backward-difference
/// derivative, and conditional integration while the command is clamped.
class PidController final : public Controller {
public:
    PidController(PidConfig config, double basal);

    [[nodiscard]] ControllerKind kind() const override { return ControllerKind::pid; }
    double tick(double t, double dt, const Vector& state) override;
    void apply_event(const WmnEvent& event) override;
    void validate_event(const WmnEvent& event) const override;
    void reset() override;

    [[nodiscard]] const PidConfig& config() const noexcept { return config_; }

private:
    PidConfig config_;
    double integral_ = 0.0;
    double prev_error_ = 0.0;
    bool primed_ = false;
};

// ---------------------------------------------------------------------------

struct MpcConfig {
    double prediction_horizon = 60.0;  // minutes
    double control_horizon = 30.0;     // minutes
    double setpoint = 120.0;
    double q_weight = 1.0;   // glucose tracking weight
    double r_weight = 0.1;   // input deviation weight
    double u_max = 10.0;
    double ridge = 1e-8;     // fallback regularization
};

/// Receding-horizon controller: the internal model is the plant frozen at the
/// current tick; the stacked prediction least-squares problem is solved
/// unconstrained, then the first input is clamped and applied.
class MpcController final : public Controller {
public:
    MpcController(MpcConfig config, const VirtualPatient& patient);

    [[nodiscard]] ControllerKind kind() const override { return ControllerKind::mpc; }
    double tick(double t, double dt, const Vector& state) override;
    void apply_event(const WmnEvent& event) override;
    void validate_event(const WmnEvent& event) const override;
    void reset() override;

    [[nodiscard]] int ridge_fallbacks() const noexcept { return ridge_fallbacks_; }
    [[nodiscard]] const MpcConfig& config() const noexcept { return config_; }

private:
    MpcConfig config_;
    VirtualPatient patient_;
    int ridge_fallbacks_ = 0;

    // Per-tick workspace, sized on the first tick. Only the glucose-clearance
    // entry of the model varies in time, so the discretized matrices are
    // updated in place.
    Matrix a_d_, sens_, sens_next_, phi_, normal_;
    Vector base_, base_next_, b_u_, b_off_, target_, rhs_, w_;
    int np_ = 0, nc_ = 0;
};

// ---------------------------------------------------------------------------

/// Meal-size transition counts with additive smoothing.
class MealMarkovModel {
public:
    explicit MealMarkovModel(double alpha = 1.0) : alpha_(alpha) {}

    void observe(MealSize size);

    /// Smoothed transition probabilities out of `from`.
    [[nodiscard]] std::array<double, 3> distribution(MealSize from) const;

    /// Most likely next size after the last observation; ties break toward
    /// the larger size. Requires at least one observation.
    [[nodiscard]] MealSize predict_next() const;

    [[nodiscard]] bool has_history() const noexcept { return primed_; }
    [[nodiscard]] MealSize last() const noexcept { return last_; }

private:
    double alpha_;
    std::array<std::array<double, 3>, 3> counts_{};
    MealSize last_ = MealSize::medium;
    bool primed_ = false;
};

struct BayesianLqgConfig {
    double q_glucose = 1.0;        // LQR glucose weight
    double q_insulin = 1e-6;       // LQR weight on the insulin states
    double r_input = 0.1;          // LQR input weight
    double process_noise = 1e-4;   // Kalman process noise (per state)
    double measurement_noise = 1.0;  // Kalman glucose noise (mg/dL)^2
    double setpoint_floor = 90.0;  // hypoglycemia guard for derived setpoints
    double tar_limit = 180.0;      // excursion headroom reference
    double meal_window = 300.0;    // no-bolus prediction window (minutes)
    double markov_alpha = 1.0;
    double carb_to_glucose = 4.5;
    double u_max = 10.0;
    double initial_setpoint = 120.0;
};

/// Meal-to-meal controller: a Markov chain predicts the next meal size, the
/// frozen plant is simulated without bolus to bound the CGM excursion, the
/// setpoint is derived from that headroom, and a Kalman filter + discrete
/// LQR gain drive the estimate to the setpoint between meals.
class BayesianLqgController final : public Controller {
public:
    BayesianLqgController(BayesianLqgConfig config, const VirtualPatient& patient);

    [[nodiscard]] ControllerKind kind() const override { return ControllerKind::bayesian_lqg; }
    double tick(double t, double dt, const Vector& state) override;
    void apply_event(const WmnEvent& event) override;
    void validate_event(const WmnEvent& event) const override;
    void reset() override;

    [[nodiscard]] double current_setpoint() const noexcept { return setpoint_; }
    [[nodiscard]] int riccati_fallbacks() const noexcept { return riccati_fallbacks_; }
    [[nodiscard]] const Vector& state_estimate() const noexcept { return estimate_; }
    [[nodiscard]] const MealMarkovModel& meal_model() const noexcept { return meals_; }

private:
    void derive_setpoint(double t);

    BayesianLqgConfig config_;
    VirtualPatient patient_;
    TimeVaryingLinearSystem model_;
    MealMarkovModel meals_;

    double setpoint_;
    Vector estimate_;
    Matrix covariance_;
    double last_command_;
    double active_meal_until_ = -1.0;
    double active_meal_rate_ = 0.0;
    bool estimate_primed_ = false;
    int riccati_fallbacks_ = 0;
};

// ---------------------------------------------------------------------------

/// Per-kind controller configuration bundle used by the experiment harness.
struct ControllerSettings {
    PidConfig pid;
    MpcConfig mpc;
    BayesianLqgConfig bayesian;
    double tick_period = 5.0;  // minutes, all controllers
};

std::unique_ptr<Controller> make_controller(ControllerKind kind,
                                            const ControllerSettings& settings,
                                            const VirtualPatient& patient);

}  // namespace plis
