#pragma once

#include <vector>

#include "plis/common.hpp"

namespace plis {

/// Piecewise-constant m-dimensional input u(t) on [0, T].
///
/// Segments are right-continuous: u(t) is the value of the segment whose
/// breakpoint is the largest one <= t. The first breakpoint is always 0.
class InputSignal {
public:
    InputSignal(std::vector<double> breakpoints, std::vector<Vector> values,
                double horizon);

    /// Single-segment constant signal over [0, horizon].
    static InputSignal constant(Vector value, double horizon);

    /// Value of the segment containing t. Throws RangeError outside [0, T].
    [[nodiscard]] const Vector& at(double t) const;

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(values_.front().size()); }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    [[nodiscard]] const std::vector<Vector>& values() const noexcept { return values_; }

    /// Narrowest segment width, including the final segment up to T.
    [[nodiscard]] double min_segment_width() const;

private:
    std::vector<double> breakpoints_;
    std::vector<Vector> values_;
    double horizon_;
};

}  // namespace plis
