#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plis/common.hpp"
#include "plis/input_signal.hpp"
#include "plis/ltv.hpp"

namespace plis {

enum class MealSize { small, medium, large };

[[nodiscard]] const char* to_string(MealSize size);

/// Glucose-insulin plant coefficients. Units: time in minutes, glucose in
/// mg/dL, insulin in uU/mL. All strictly positive.
struct BmmParameters {
    double p1 = 0.028;       // interstitial insulin clearance (1/min)
    double p2 = 0.025;       // plasma -> interstitial transfer (1/min)
    double p3_base = 0.02;   // nominal glucose clearance rate (1/min), = p4*beta
    double p4 = 0.02;        // insulin input gain (1/min per uU/mL/min)
    double n_decay = 0.09;   // plasma insulin clearance (1/min)
    double G_b = 80.0;       // basal glucose coupling (mg/dL)
    double VoI = 12.0;       // volume-insulin product; 1/VoI scales u2
    double i_b = 1.0;        // basal insulin command (uU/mL/min)
};

/// Two-pole/one-zero cortisol wave with transport delay, repeated for every
/// stress event. Event times are minutes from midnight; with `repeat_daily`
/// the day pattern recurs on multi-day horizons.
struct CortisolProfile {
    double K_p = 1.215;   // wave amplitude coefficient (ng/dL)
    double T_p1 = 150.0;  // fast pole (min)
    double T_p2 = 300.0;  // slow pole (min)
    double T_z = 90.0;    // zero (min)
    double T_d = 15.0;    // transport delay (min)
    std::vector<double> stress_event_times = {480.0, 870.0};  // 8:00, 14:30
    bool repeat_daily = true;
};

/// Cortisol level at absolute time t >= 0 (ng/dL). Contributions from all
/// elapsed stress events superpose; each contributes 0 before its onset and
/// exactly 0 at onset.
double cortisol_at(const CortisolProfile& profile, double t);

/// Analytic time derivative of cortisol_at (one-sided at the delay gate).
double cortisol_slope_at(const CortisolProfile& profile, double t);

/// Linear map from cortisol to insulin sensitivity: p3(t) = p4 (eta C(t) + beta).
struct SensitivityRegression {
    double eta = 0.0;   // 1/(ng/dL); negative (stress depresses sensitivity)
    double beta = 1.0;  // dimensionless
};

struct MealEvent {
    double time = 0.0;  // minutes from simulation start
    MealSize size = MealSize::medium;
    double grams = 60.0;  // carbohydrate grams
};

/// One synthetic subject: plant coefficients, stress/cortisol profile,
/// sensitivity regression, meal schedule and the basal operating point.
///
/// Input channel 1 of the plant carries insulin delivery relative to the
/// glucose-nulling rate: the engines feed (command - i_b) + u1_eq, so the
/// basal command holds the patient at glucose_eq exactly.
struct VirtualPatient {
    std::string id;
    BmmParameters bmm;
    CortisolProfile cortisol;
    SensitivityRegression sensitivity;
    std::vector<MealEvent> meal_schedule;
    double glucose_eq = 120.0;  // glucose held by the basal command (mg/dL)
    double u1_eq = 0.0;         // derived channel-1 value at basal command
    Vector x0;                  // equilibrium state [i, i_s, G]

    /// Recompute u1_eq and x0 from the coefficients and glucose_eq,
    /// then check every invariant. Throws ConfigError on violation.
    void finalize(double q_sim = 1.0);
};

/// Insulin sensitivity p3 at time t (1/min) and its analytic derivative.
double p3_at(const VirtualPatient& patient, double t);
double p3_slope_at(const VirtualPatient& patient, double t);

/// Time-varying plant of the case study: n=3 states [i, i_s, G], m=2 inputs
/// (insulin channel, glucose appearance u2). Only A(2,2) varies in time.
TimeVaryingLinearSystem bmm_system(const VirtualPatient& patient);

/// Glucose appearance rate u2 (mg/dL/min) at time t: each meal contributes a
/// rectangular pulse of width `kMealPulseMinutes`; overlapping pulses add.
double meal_to_input(const std::vector<MealEvent>& schedule, double t,
                     double carb_to_glucose = 4.5);

inline constexpr double kMealPulseMinutes = 30.0;

/// Replicate a one-day meal pattern out to `horizon` minutes.
std::vector<MealEvent> expand_daily(const std::vector<MealEvent>& day_pattern,
                                    double horizon);

/// Open-loop plant input over [0, horizon]: channel 1 held at the basal
/// operating value, channel 2 the meal pulse train (day pattern expanded).
InputSignal open_loop_input(const VirtualPatient& patient, double horizon,
                            double carb_to_glucose = 4.5);

struct CohortOptions {
    double perturbation = 0.20;        // uniform +/- fraction on BMM coefficients
    double glucose_eq_spread = 0.10;   // uniform +/- fraction on glucose_eq
    double max_si_depression = 0.60;   // peak-cortisol drop of p3, sets eta
    std::vector<double> meal_times = {450.0, 750.0, 1140.0};  // 7:30, 12:30, 19:00
    double q_sim = 1.0;
    int max_retries = 64;
};

/// Deterministic synthetic cohort. Identical seeds yield identical cohorts.
std::vector<VirtualPatient> generate_cohort(std::uint64_t seed, int count = 12,
                                            const CohortOptions& opts = {});

}  // namespace plis
