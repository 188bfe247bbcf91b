#include "plis/trace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace plis {

namespace {

constexpr double kDenomFloor = 1e-9;

void require_same_grid(const Trace& a, const Trace& b) {
    if (a.times.size() != b.times.size()) {
        std::ostringstream msg;
        msg << "trace grids differ in length: " << a.times.size() << " vs " << b.times.size();
        throw AlignmentError(msg.str());
    }
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        if (a.times[k] != b.times[k]) {
            std::ostringstream msg;
            msg << "trace grids differ at sample " << k << ": " << a.times[k]
                << " vs " << b.times[k];
            throw AlignmentError(msg.str());
        }
    }
    if (a.state_dim() != b.state_dim()) {
        throw AlignmentError("trace state dimensions differ");
    }
}

/// Max-over-states relative RMSE on the half-open sample range [lo, hi).
double range_distance(const Trace& a, const Trace& b, std::size_t lo, std::size_t hi) {
    const int n = a.state_dim();
    const auto count = static_cast<double>(hi - lo);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        double sq_err = 0.0;
        double sq_ref = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            const double d = a.states[k](i) - b.states[k](i);
            sq_err += d * d;
            sq_ref += b.states[k](i) * b.states[k](i);
        }
        const double rmse = std::sqrt(sq_err / count);
        const double rms = std::max(std::sqrt(sq_ref / count), kDenomFloor);
        worst = std::max(worst, rmse / rms);
    }
    return worst;
}

}  // namespace

std::vector<Trace> Trace::split_at_events() const {
    std::vector<Trace> out;
    if (times.empty()) return out;
    std::vector<std::size_t> cuts;
    cuts.push_back(0);
    for (double ev : event_times) {
        auto it = std::lower_bound(times.begin(), times.end(), ev);
        if (it == times.end() || *it != ev) {
            throw AlignmentError("event time is not on the sample grid");
        }
        const auto idx = static_cast<std::size_t>(it - times.begin());
        if (idx > cuts.back() && idx + 1 < times.size()) cuts.push_back(idx);
    }
    cuts.push_back(times.size() - 1);
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        Trace part;
        part.engine_label = engine_label;
        part.times.assign(times.begin() + static_cast<long>(cuts[c]),
                          times.begin() + static_cast<long>(cuts[c + 1]) + 1);
        part.states.assign(states.begin() + static_cast<long>(cuts[c]),
                           states.begin() + static_cast<long>(cuts[c + 1]) + 1);
        out.push_back(std::move(part));
    }
    return out;
}

Trace Trace::concatenate(const std::vector<Trace>& trajectories) {
    Trace out;
    for (const auto& part : trajectories) {
        std::size_t start = 0;
        if (!out.times.empty()) {
            if (part.times.empty()) continue;
            if (part.times.front() != out.times.back()) {
                throw AlignmentError("trajectories do not abut at a shared sample");
            }
            out.event_times.push_back(part.times.front());
            start = 1;  // shared boundary sample
        } else {
            out.engine_label = part.engine_label;
        }
        for (std::size_t k = start; k < part.times.size(); ++k) {
            out.times.push_back(part.times[k]);
            out.states.push_back(part.states[k]);
        }
    }
    return out;
}

double trace_distance(const Trace& a, const Trace& b, DistanceMode mode) {
    require_same_grid(a, b);
    if (a.times.empty()) return 0.0;
    if (mode == DistanceMode::relative_rmse) {
        return range_distance(a, b, 0, a.times.size());
    }
    // Per-trajectory: partition at the union of both traces' event times.
    std::vector<double> events = a.event_times;
    events.insert(events.end(), b.event_times.begin(), b.event_times.end());
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end()), events.end());
    std::vector<std::size_t> cuts{0};
    for (double ev : events) {
        auto it = std::lower_bound(a.times.begin(), a.times.end(), ev);
        if (it == a.times.end() || *it != ev) {
            throw AlignmentError("event time is not on the sample grid");
        }
        const auto idx = static_cast<std::size_t>(it - a.times.begin());
        if (idx > cuts.back() && idx + 1 < a.times.size()) cuts.push_back(idx);
    }
    cuts.push_back(a.times.size() - 1);
    double worst = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        worst = std::max(worst, range_distance(a, b, cuts[c], cuts[c + 1] + 1));
    }
    return worst;
}

double trace_distance_on(const Trace& a, const Trace& b, double t0, double t1) {
    require_same_grid(a, b);
    auto lo_it = std::lower_bound(a.times.begin(), a.times.end(), t0);
    auto hi_it = std::upper_bound(a.times.begin(), a.times.end(), t1);
    const auto lo = static_cast<std::size_t>(lo_it - a.times.begin());
    const auto hi = static_cast<std::size_t>(hi_it - a.times.begin());
    if (hi <= lo) throw RangeError("no samples in the requested window");
    return range_distance(a, b, lo, hi);
}

double state_relative_rmse(const Trace& a, const Trace& b, int state_index) {
    require_same_grid(a, b);
    if (a.times.empty()) return 0.0;
    double sq_err = 0.0;
    double sq_ref = 0.0;
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        const double d = a.states[k](state_index) - b.states[k](state_index);
        sq_err += d * d;
        sq_ref += b.states[k](state_index) * b.states[k](state_index);
    }
    const auto count = static_cast<double>(a.times.size());
    return std::sqrt(sq_err / count) / std::max(std::sqrt(sq_ref / count), kDenomFloor);
}

}  // namespace plis
