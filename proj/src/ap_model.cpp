#include "plis/ap_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace plis {

namespace {

constexpr double kMinutesPerDay = 1440.0;

/// Contribution of a single stress event, as a function of time since onset.
double wave(const CortisolProfile& p, double since) {
    if (since <= 0.0) return 0.0;
    const double pref = p.K_p / (p.T_p2 - p.T_p1);
    double bracket = std::exp(-since / p.T_p2) - std::exp(-since / p.T_p1);
    if (since >= p.T_d) {
        const double s = since - p.T_d;
        bracket += (p.T_z / p.T_d) * (std::exp(-s / p.T_p1) / p.T_p1 -
                                      std::exp(-s / p.T_p2) / p.T_p2);
    }
    return pref * bracket;
}

double wave_slope(const CortisolProfile& p, double since) {
    if (since <= 0.0) return 0.0;
    const double pref = p.K_p / (p.T_p2 - p.T_p1);
    double bracket = std::exp(-since / p.T_p1) / p.T_p1 - std::exp(-since / p.T_p2) / p.T_p2;
    if (since >= p.T_d) {
        const double s = since - p.T_d;
        bracket += (p.T_z / p.T_d) *
                   (std::exp(-s / p.T_p2) / (p.T_p2 * p.T_p2) -
                    std::exp(-s / p.T_p1) / (p.T_p1 * p.T_p1));
    }
    return pref * bracket;
}

template <typename WaveFn>
double accumulate_events(const CortisolProfile& profile, double t, WaveFn fn) {
    double total = 0.0;
    for (double day_start = 0.0; day_start <= t; day_start += kMinutesPerDay) {
        for (double event : profile.stress_event_times) {
            total += fn(profile, t - (day_start + event));
        }
        if (!profile.repeat_daily) break;
    }
    return total;
}

/// Deterministic uniform draw in [-1, 1) from a raw 64-bit stream.
double signed_unit(std::uint64_t& state) {
    // splitmix64 step; keeps cohort generation independent of the standard
    // library's distribution implementations.
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
}

std::uint64_t next_u64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

const char* to_string(MealSize size) {
    switch (size) {
        case MealSize::small: return "small";
        case MealSize::medium: return "medium";
        case MealSize::large: return "large";
    }
    return "?";
}

double cortisol_at(const CortisolProfile& profile, double t) {
    if (t < 0.0) throw RangeError("cortisol_at: t must be >= 0");
    return accumulate_events(profile, t, wave);
}

double cortisol_slope_at(const CortisolProfile& profile, double t) {
    if (t < 0.0) throw RangeError("cortisol_slope_at: t must be >= 0");
    return accumulate_events(profile, t, wave_slope);
}

double p3_at(const VirtualPatient& patient, double t) {
    return patient.bmm.p4 *
           (patient.sensitivity.eta * cortisol_at(patient.cortisol, t) +
            patient.sensitivity.beta);
}

double p3_slope_at(const VirtualPatient& patient, double t) {
    return patient.bmm.p4 * patient.sensitivity.eta *
           cortisol_slope_at(patient.cortisol, t);
}

TimeVaryingLinearSystem bmm_system(const VirtualPatient& patient) {
    const BmmParameters& c = patient.bmm;
    auto A = [patient, c](double t) {
        Matrix a = Matrix::Zero(3, 3);
        a(0, 0) = -c.n_decay;
        a(1, 0) = c.p2;
        a(1, 1) = -c.p1;
        a(2, 1) = -c.G_b;
        a(2, 2) = -p3_at(patient, t);
        return a;
    };
    Matrix b = Matrix::Zero(3, 2);
    b(0, 0) = c.p4;
    b(2, 1) = 1.0 / c.VoI;
    auto B = [b](double) { return b; };
    auto dA = [patient](double t) {
        Matrix a = Matrix::Zero(3, 3);
        a(2, 2) = -p3_slope_at(patient, t);
        return a;
    };
    auto dB = [](double) { return Matrix::Zero(3, 2); };
    return TimeVaryingLinearSystem(3, 2, A, B, dA, dB);
}

double meal_to_input(const std::vector<MealEvent>& schedule, double t,
                     double carb_to_glucose) {
    double rate = 0.0;
    for (const auto& meal : schedule) {
        if (t >= meal.time && t < meal.time + kMealPulseMinutes) {
            rate += meal.grams * carb_to_glucose / kMealPulseMinutes;
        }
    }
    return rate;
}

std::vector<MealEvent> expand_daily(const std::vector<MealEvent>& day_pattern,
                                    double horizon) {
    std::vector<MealEvent> out;
    for (double day_start = 0.0; day_start < horizon; day_start += kMinutesPerDay) {
        for (const auto& meal : day_pattern) {
            const double t = day_start + meal.time;
            if (t < horizon) {
                MealEvent copy = meal;
                copy.time = t;
                out.push_back(copy);
            }
        }
    }
    return out;
}

InputSignal open_loop_input(const VirtualPatient& patient, double horizon,
                            double carb_to_glucose) {
    const auto meals = expand_daily(patient.meal_schedule, horizon);
    std::vector<double> edges{0.0};
    for (const auto& meal : meals) {
        if (meal.time < horizon) edges.push_back(meal.time);
        if (meal.time + kMealPulseMinutes < horizon) {
            edges.push_back(meal.time + kMealPulseMinutes);
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::vector<Vector> values;
    values.reserve(edges.size());
    for (double edge : edges) {
        Vector u(2);
        u << patient.u1_eq, meal_to_input(meals, edge, carb_to_glucose);
        values.push_back(u);
    }
    return InputSignal(std::move(edges), std::move(values), horizon);
}

void VirtualPatient::finalize(double q_sim) {
    const BmmParameters& c = bmm;
    const double positives[] = {c.p1, c.p2, c.p3_base, c.p4,
                                c.n_decay, c.G_b, c.VoI, c.i_b};
    for (double v : positives) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError("patient " + id + ": BMM coefficients must be strictly positive");
        }
    }
    if (cortisol.T_p1 == cortisol.T_p2) {
        throw ConfigError("patient " + id + ": cortisol poles must differ");
    }
    if (!(cortisol.T_p1 > 0.0 && cortisol.T_p2 > 0.0 && cortisol.T_z > 0.0 &&
          cortisol.T_d > 0.0)) {
        throw ConfigError("patient " + id + ": cortisol time constants must be positive");
    }
    for (double event : cortisol.stress_event_times) {
        if (event < 0.0 || event >= kMinutesPerDay) {
            throw ConfigError("patient " + id + ": stress events must lie within the day");
        }
    }
    if (!(glucose_eq > 70.0 && glucose_eq < 180.0)) {
        throw ConfigError("patient " + id + ": equilibrium glucose must lie in (70, 180)");
    }

    // Basal operating point: solve A x* + B [u1_eq, 0] = 0 with G = glucose_eq.
    const double is_eq = -c.p3_base * glucose_eq / c.G_b;
    const double i_eq = (c.p1 / c.p2) * is_eq;
    u1_eq = c.n_decay * i_eq / c.p4;
    x0.resize(3);
    x0 << i_eq, is_eq, glucose_eq;

    // The pump floor (command 0) must leave downward headroom below basal.
    if (!(c.i_b + u1_eq > 0.0)) {
        throw ConfigError("patient " + id + ": basal command cannot hold the equilibrium");
    }

    double prev_time = -1.0;
    for (const auto& meal : meal_schedule) {
        if (meal.time <= prev_time) {
            throw ConfigError("patient " + id + ": meals must be ordered in time");
        }
        prev_time = meal.time;
        if (!(meal.grams > 0.0)) {
            throw ConfigError("patient " + id + ": meal grams must be positive");
        }
        if (!(kMealPulseMinutes > q_sim)) {
            throw ConfigError("patient " + id + ": meal pulse must be wider than q_sim");
        }
    }

    // p3 must stay strictly positive over the day pattern (checked densely
    // over two days to include wave overlap).
    for (double t = 0.0; t <= 2.0 * kMinutesPerDay; t += q_sim) {
        if (!(p3_at(*this, t) > 0.0)) {
            std::ostringstream msg;
            msg << "patient " << id << ": p3(t) is not positive at t=" << t;
            throw ConfigError(msg.str());
        }
    }
}

std::vector<VirtualPatient> generate_cohort(std::uint64_t seed, int count,
                                            const CohortOptions& opts) {
    if (count < 1) throw ConfigError("cohort count must be >= 1");

    // Calibrate eta once from the default profile: the peak of the day
    // pattern depresses p3 by max_si_depression.
    CortisolProfile profile;
    double peak = 0.0;
    for (double t = 0.0; t <= 2.0 * kMinutesPerDay; t += 0.1) {
        peak = std::max(peak, accumulate_events(profile, t, wave));
    }
    const double eta = -opts.max_si_depression / peak;

    std::uint64_t stream = seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL;
    std::vector<VirtualPatient> cohort;
    cohort.reserve(static_cast<std::size_t>(count));
    const BmmParameters defaults;

    for (int idx = 0; idx < count; ++idx) {
        VirtualPatient patient;
        bool ok = false;
        for (int attempt = 0; attempt < opts.max_retries && !ok; ++attempt) {
            patient = VirtualPatient{};
            std::ostringstream name;
            name << "patient-" << (idx + 1 < 10 ? "0" : "") << idx + 1;
            patient.id = name.str();

            auto perturb = [&](double nominal) {
                return nominal * (1.0 + opts.perturbation * signed_unit(stream));
            };
            patient.bmm.p1 = perturb(defaults.p1);
            patient.bmm.p2 = perturb(defaults.p2);
            patient.bmm.p3_base = perturb(defaults.p3_base);
            patient.bmm.n_decay = perturb(defaults.n_decay);
            patient.bmm.G_b = perturb(defaults.G_b);
            patient.bmm.VoI = perturb(defaults.VoI);
            patient.bmm.i_b = perturb(defaults.i_b);
            patient.sensitivity.beta = 1.0;
            patient.sensitivity.eta = eta;
            patient.bmm.p4 = patient.bmm.p3_base / patient.sensitivity.beta;
            patient.glucose_eq =
                120.0 * (1.0 + opts.glucose_eq_spread * signed_unit(stream));

            patient.meal_schedule.clear();
            for (double meal_time : opts.meal_times) {
                const auto pick = next_u64(stream) % 3;
                MealEvent meal;
                meal.time = meal_time;
                meal.size = static_cast<MealSize>(pick);
                meal.grams = 30.0 * static_cast<double>(pick + 1);
                patient.meal_schedule.push_back(meal);
            }

            try {
                patient.finalize(opts.q_sim);
                ok = true;
            } catch (const ConfigError&) {
                ok = false;
            }
        }
        if (!ok) {
            throw ConfigError("could not draw a valid patient after bounded retries");
        }
        cohort.push_back(std::move(patient));
    }
    return cohort;
}

}  // namespace plis
