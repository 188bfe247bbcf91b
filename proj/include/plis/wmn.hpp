#pragma once

#include <vector>

#include "plis/ap_model.hpp"
#include "plis/common.hpp"

namespace plis {

/// One configuration change pushed by the network at a known time.
struct WmnEvent {
    enum class Kind { setpoint_change, gain_change, meal_announcement };

    double time = 0.0;
    Kind kind = Kind::meal_announcement;

    double setpoint = 0.0;                  // setpoint_change
    double kp = 0.0, ki = 0.0, kd = 0.0;    // gain_change (PID only)
    MealSize meal_size = MealSize::medium;  // meal_announcement
    double meal_grams = 0.0;
};

/// Ascending schedule of configuration changes over one simulation horizon.
struct WmnEventSchedule {
    std::vector<WmnEvent> events;

    /// Throws ConfigError if times are not ascending or exceed the horizon.
    void check_times(double horizon) const;
};

/// Meal announcements matching a patient's (already expanded) meal schedule.
WmnEventSchedule announcements_for(const std::vector<MealEvent>& meals);

}  // namespace plis
