#include "plis/controllers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "plis/riccati.hpp"

namespace plis {

const char* to_string(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::pid: return "pid";
        case ControllerKind::mpc: return "mpc";
        case ControllerKind::bayesian_lqg: return "bayesian";
    }
    return "?";
}

double Controller::clamp_command(double raw) const {
    return std::clamp(raw, 0.0, u_max_);
}

// --------------------------------------------------------------------------- PID

PidController::PidController(PidConfig config, double basal)
    : Controller(basal, config.u_max), config_(config) {
    if (config_.kp < 0.0 || config_.ki < 0.0 || config_.kd < 0.0) {
        throw ConfigError("PID gains must be non-negative");
    }
    if (!(config_.setpoint > 70.0 && config_.setpoint < 180.0)) {
        throw ConfigError("PID setpoint must lie in (70, 180)");
    }
}

double PidController::tick(double /*t*/, double dt, const Vector& state) {
    if (!(dt > 0.0)) throw ConfigError("tick period must be positive");
    const double error = state(2) - config_.setpoint;

    double integral_inc = 0.0;
    double derivative = 0.0;
    if (primed_) {
        integral_inc = 0.5 * dt * (error + prev_error_);
        derivative = (error - prev_error_) / dt;
    }

    const double raw = basal_ + config_.kp * error +
                       config_.ki * (integral_ + integral_inc) +
                       config_.kd * derivative;
    const double command = clamp_command(raw);
    if (command == raw) {
        integral_ += integral_inc;  // conditional integration anti-windup
    }
    prev_error_ = error;
    primed_ = true;
    return command;
}

void PidController::apply_event(const WmnEvent& event) {
    validate_event(event);
    switch (event.kind) {
        case WmnEvent::Kind::setpoint_change:
            config_.setpoint = event.setpoint;
            break;
        case WmnEvent::Kind::gain_change:
            config_.kp = event.kp;
            config_.ki = event.ki;
            config_.kd = event.kd;
            break;
        case WmnEvent::Kind::meal_announcement:
            break;  // PID ignores meal announcements
    }
}

void PidController::validate_event(const WmnEvent& event) const {
    if (event.kind == WmnEvent::Kind::setpoint_change &&
        !(event.setpoint > 70.0 && event.setpoint < 180.0)) {
        throw ConfigError("setpoint change outside (70, 180)");
    }
    if (event.kind == WmnEvent::Kind::gain_change &&
        (event.kp < 0.0 || event.ki < 0.0 || event.kd < 0.0)) {
        throw ConfigError("gain change with negative gains");
    }
}

void PidController::reset() {
    integral_ = 0.0;
    prev_error_ = 0.0;
    primed_ = false;
}

// --------------------------------------------------------------------------- MPC

MpcController::MpcController(MpcConfig config, const VirtualPatient& patient)
    : Controller(patient.bmm.i_b, config.u_max),
      config_(config),
      patient_(patient) {
    if (!(config_.control_horizon <= config_.prediction_horizon)) {
        throw ConfigError("MPC control horizon must not exceed the prediction horizon");
    }
    if (!(config_.q_weight > 0.0 && config_.r_weight > 0.0)) {
        throw ConfigError("MPC weights must be positive");
    }
}

double MpcController::tick(double t, double dt, const Vector& state) {
    if (np_ == 0) {
        np_ = std::max(1, static_cast<int>(std::lround(config_.prediction_horizon / dt)));
        nc_ = std::max(1, std::min(np_, static_cast<int>(std::lround(
                                            config_.control_horizon / dt))));
        // Internal model: the plant frozen at the current tick, discretized at
        // the tick period (forward Euler, matching the engines' integrator
        // family). Only the glucose-clearance entry varies between ticks.
        const BmmParameters& c = patient_.bmm;
        a_d_ = Matrix::Identity(3, 3);
        a_d_(0, 0) += dt * -c.n_decay;
        a_d_(1, 0) = dt * c.p2;
        a_d_(1, 1) += dt * -c.p1;
        a_d_(2, 1) = dt * -c.G_b;
        b_u_ = Vector::Zero(3);
        b_u_(0) = dt * c.p4;  // insulin channel
        b_off_ = patient_.u1_eq * b_u_;  // basal operating offset
        sens_.resize(3, nc_);
        sens_next_.resize(3, nc_);
        phi_.resize(np_, nc_);
        normal_.resize(nc_, nc_);
        base_.resize(3);
        base_next_.resize(3);
        target_.resize(np_);
        rhs_.resize(nc_);
        w_.resize(nc_);
    }
    a_d_(2, 2) = 1.0 + dt * -p3_at(patient_, t);

    // Forward sensitivities: x_k = base_k + M_k w, w = commands minus basal.
    base_ = state;
    sens_.setZero();
    for (int k = 0; k < np_; ++k) {
        const int j = std::min(k, nc_ - 1);
        base_next_.noalias() = a_d_ * base_;
        base_next_ += b_off_;
        base_.swap(base_next_);
        sens_next_.noalias() = a_d_ * sens_;
        sens_.swap(sens_next_);
        sens_.col(j) += b_u_;
        phi_.row(k) = sens_.row(2);
        target_(k) = config_.setpoint - base_(2);
    }

    const double q = config_.q_weight;
    const double r = config_.r_weight;
    normal_.noalias() = q * phi_.transpose() * phi_;
    normal_.diagonal().array() += r;
    rhs_.noalias() = q * phi_.transpose() * target_;
    Eigen::LDLT<Matrix> ldlt(normal_);
    bool solved = false;
    if (ldlt.info() == Eigen::Success) {
        w_ = ldlt.solve(rhs_);
        solved = w_.allFinite();
    }
    if (!solved) {
        ++ridge_fallbacks_;
        normal_.diagonal().array() += config_.ridge;
        w_ = normal_.ldlt().solve(rhs_);
    }
    return clamp_command(basal_ + w_(0));
}

void MpcController::apply_event(const WmnEvent& event) {
    validate_event(event);
    if (event.kind == WmnEvent::Kind::setpoint_change) {
        config_.setpoint = event.setpoint;
    }
}

void MpcController::validate_event(const WmnEvent& event) const {
    if (event.kind == WmnEvent::Kind::gain_change) {
        throw ConfigError("gain_change events do not apply to the MPC controller");
    }
    if (event.kind == WmnEvent::Kind::setpoint_change &&
        !(event.setpoint > 70.0 && event.setpoint < 180.0)) {
        throw ConfigError("setpoint change outside (70, 180)");
    }
}

void MpcController::reset() { ridge_fallbacks_ = 0; }

// --------------------------------------------------------------------------- meal Markov model

void MealMarkovModel::observe(MealSize size) {
    if (primed_) {
        counts_[static_cast<std::size_t>(last_)][static_cast<std::size_t>(size)] += 1.0;
    }
    last_ = size;
    primed_ = true;
}

std::array<double, 3> MealMarkovModel::distribution(MealSize from) const {
    const auto& row = counts_[static_cast<std::size_t>(from)];
    const double total = row[0] + row[1] + row[2] + 3.0 * alpha_;
    if (total <= 0.0) return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    return {(row[0] + alpha_) / total, (row[1] + alpha_) / total, (row[2] + alpha_) / total};
}

MealSize MealMarkovModel::predict_next() const {
    if (!primed_) throw ConfigError("meal prediction requires at least one observation");
    const auto dist = distribution(last_);
    // Argmax with ties broken toward the larger size.
    std::size_t best = 0;
    for (std::size_t s = 1; s < 3; ++s) {
        if (dist[s] >= dist[best]) best = s;
    }
    return static_cast<MealSize>(best);
}

// --------------------------------------------------------------------------- Bayesian LQG

BayesianLqgController::BayesianLqgController(BayesianLqgConfig config,
                                             const VirtualPatient& patient)
    : Controller(patient.bmm.i_b, config.u_max),
      config_(config),
      patient_(patient),
      model_(bmm_system(patient_)),
      meals_(config.markov_alpha),
      setpoint_(config.initial_setpoint),
      estimate_(Vector::Zero(3)),
      covariance_(Matrix::Identity(3, 3)),
      last_command_(patient.bmm.i_b) {}

void BayesianLqgController::derive_setpoint(double t) {
    // Predicted next meal, simulated without bolus on the frozen plant over
    // the inter-meal window; the peak excursion sets the headroom.
    const MealSize predicted = meals_.predict_next();
    const double grams = 30.0 * (static_cast<double>(predicted) + 1.0);
    const double pulse_rate = grams * config_.carb_to_glucose / kMealPulseMinutes;

    const FrozenSystem frozen = zero_order_hold(model_, t, t + config_.meal_window);
    const double q_sim = 1.0;
    Vector x = estimate_primed_ ? estimate_ : patient_.x0;
    Vector u(2);
    const double g0 = x(2);
    double g_max = g0;
    for (double s = 0.0; s < config_.meal_window; s += q_sim) {
        u << patient_.u1_eq, (s < kMealPulseMinutes ? pulse_rate : 0.0);
        x += q_sim * (frozen.A * x + frozen.B * u);
        g_max = std::max(g_max, x(2));
    }
    const double excursion = g_max - g0;
    setpoint_ = std::max(config_.setpoint_floor, config_.tar_limit - excursion);
}

double BayesianLqgController::tick(double t, double dt, const Vector& state) {
    const FrozenSystem frozen = zero_order_hold(model_, t, t + dt);
    const Matrix A_d = Matrix::Identity(3, 3) + dt * frozen.A;
    const Matrix B_d = dt * frozen.B;

    if (!estimate_primed_) {
        estimate_ = state;
        covariance_ = Matrix::Identity(3, 3);
        estimate_primed_ = true;
    } else {
        // Kalman predict with the previously applied command and any announced
        // meal, then the glucose measurement update.
        Vector u_prev(2);
        u_prev << (last_command_ - basal_) + patient_.u1_eq,
            (t <= active_meal_until_ ? active_meal_rate_ : 0.0);
        estimate_ = A_d * estimate_ + B_d * u_prev;
        covariance_ = A_d * covariance_ * A_d.transpose() +
                      config_.process_noise * Matrix::Identity(3, 3);

        const double innovation = state(2) - estimate_(2);
        const double s_cov = covariance_(2, 2) + config_.measurement_noise;
        if (s_cov > 1e-15) {
            const Vector gain = covariance_.col(2) / s_cov;
            estimate_ += gain * innovation;
            covariance_ -= gain * covariance_.row(2);
        }
    }

    // Steady-state LQR gain for the frozen model.
    Matrix Q = Matrix::Zero(3, 3);
    Q(0, 0) = config_.q_insulin;
    Q(1, 1) = config_.q_insulin;
    Q(2, 2) = config_.q_glucose;
    Matrix R(1, 1);
    R(0, 0) = config_.r_input;
    const RiccatiResult lqr = dare_solve(A_d, B_d.col(0), Q, R, 1e-11, 20000);
    if (!lqr.converged) {
        ++riccati_fallbacks_;
        last_command_ = basal_;
        return basal_;
    }

    // Reference pair holding glucose at the setpoint under the frozen model.
    const double p3_now = -frozen.A(2, 2);
    const double is_ref = -p3_now * setpoint_ / patient_.bmm.G_b;
    const double i_ref = (patient_.bmm.p1 / patient_.bmm.p2) * is_ref;
    const double u1_ref = patient_.bmm.n_decay * i_ref / patient_.bmm.p4;
    Vector x_ref(3);
    x_ref << i_ref, is_ref, setpoint_;
    const double command_ref = basal_ + (u1_ref - patient_.u1_eq);

    const double raw = command_ref - (lqr.K * (estimate_ - x_ref))(0);
    const double command = clamp_command(raw);
    last_command_ = command;
    return command;
}

void BayesianLqgController::apply_event(const WmnEvent& event) {
    validate_event(event);
    if (event.kind == WmnEvent::Kind::meal_announcement) {
        meals_.observe(event.meal_size);
        active_meal_rate_ = event.meal_grams * config_.carb_to_glucose / kMealPulseMinutes;
        active_meal_until_ = event.time + kMealPulseMinutes;
        derive_setpoint(event.time);
    }
}

void BayesianLqgController::validate_event(const WmnEvent& event) const {
    if (event.kind != WmnEvent::Kind::meal_announcement) {
        throw ConfigError("the Bayesian controller accepts only meal announcements");
    }
    if (!(event.meal_grams > 0.0)) {
        throw ConfigError("meal announcement must carry positive grams");
    }
}

void BayesianLqgController::reset() {
    meals_ = MealMarkovModel(config_.markov_alpha);
    setpoint_ = config_.initial_setpoint;
    estimate_.setZero();
    covariance_ = Matrix::Identity(3, 3);
    last_command_ = basal_;
    active_meal_until_ = -1.0;
    active_meal_rate_ = 0.0;
    estimate_primed_ = false;
    riccati_fallbacks_ = 0;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Controller> make_controller(ControllerKind kind,
                                            const ControllerSettings& settings,
                                            const VirtualPatient& patient) {
    switch (kind) {
        case ControllerKind::pid:
            return std::make_unique<PidController>(settings.pid, patient.bmm.i_b);
        case ControllerKind::mpc:
            return std::make_unique<MpcController>(settings.mpc, patient);
        case ControllerKind::bayesian_lqg:
            return std::make_unique<BayesianLqgController>(settings.bayesian, patient);
    }
    throw ConfigError("unknown controller kind");
}

}  // namespace plis
