#include "plis/wmn.hpp"

namespace plis {

void WmnEventSchedule::check_times(double horizon) const {
    double prev = -1.0;
    for (const auto& ev : events) {
        if (ev.time <= prev) throw ConfigError("event times must be strictly ascending");
        if (ev.time < 0.0 || ev.time > horizon) {
            throw ConfigError("event time outside the simulation horizon");
        }
        prev = ev.time;
    }
}

WmnEventSchedule announcements_for(const std::vector<MealEvent>& meals) {
    WmnEventSchedule schedule;
    schedule.events.reserve(meals.size());
    for (const auto& meal : meals) {
        WmnEvent ev;
        ev.time = meal.time;
        ev.kind = WmnEvent::Kind::meal_announcement;
        ev.meal_size = meal.size;
        ev.meal_grams = meal.grams;
        schedule.events.push_back(ev);
    }
    return schedule;
}

}  // namespace plis
