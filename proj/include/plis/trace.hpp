#pragma once

#include <string>
#include <vector>

#include "plis/common.hpp"

namespace plis {

/// Timestamped state sequence produced by one engine on a uniform grid.
///
/// `event_times` are the configuration-change instants partitioning the trace
/// into trajectories; they are a subset of the sample grid.
struct Trace {
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<double> event_times;
    std::string engine_label;
    double wall_clock_seconds = 0.0;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
    [[nodiscard]] int state_dim() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }

    /// Split into trajectories at event_times. Each boundary sample appears in
    /// both the trajectory it ends and the one it starts, so concatenation
    /// reconstructs the trace exactly.
    [[nodiscard]] std::vector<Trace> split_at_events() const;

    /// Inverse of split_at_events.
    static Trace concatenate(const std::vector<Trace>& trajectories);
};

enum class DistanceMode {
    relative_rmse,       // per-state relative RMSE over the whole trace, max over states
    per_trajectory_max,  // max over trajectories of the per-trajectory relative RMSE
};

/// Relative distance between two traces on identical sample grids.
///
/// Per state i: RMSE(a_i - b_i) / max(RMS(b_i), 1e-9); the distance is the
/// maximum over states (and over trajectories in per_trajectory_max mode).
double trace_distance(const Trace& a, const Trace& b, DistanceMode mode);

/// Same distance restricted to the samples with t in [t0, t1].
double trace_distance_on(const Trace& a, const Trace& b, double t0, double t1);

/// Relative RMSE of one state only, over the whole trace.
double state_relative_rmse(const Trace& a, const Trace& b, int state_index);

}  // namespace plis
