#include "plis/input_signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace plis {

InputSignal::InputSignal(std::vector<double> breakpoints, std::vector<Vector> values,
                         double horizon)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)), horizon_(horizon) {
    if (breakpoints_.empty() || breakpoints_.size() != values_.size()) {
        throw ConstructionError("input signal needs one value per breakpoint");
    }
    if (breakpoints_.front() != 0.0) {
        throw ConstructionError("first input breakpoint must be 0");
    }
    for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
        if (!(breakpoints_[k] > breakpoints_[k - 1])) {
            throw ConstructionError("input breakpoints must be strictly increasing");
        }
    }
    if (!(horizon_ > breakpoints_.back()) && breakpoints_.size() > 1) {
        throw ConstructionError("horizon must extend past the last breakpoint");
    }
    if (horizon_ <= 0.0) {
        throw ConstructionError("horizon must be positive");
    }
    const auto m = values_.front().size();
    for (const auto& v : values_) {
        if (v.size() != m) throw ConstructionError("input segment values must share one dimension");
        if (!v.allFinite()) throw ConstructionError("input segment values must be finite");
    }
}

InputSignal InputSignal::constant(Vector value, double horizon) {
    std::vector<Vector> values;
    values.push_back(std::move(value));
    return InputSignal({0.0}, std::move(values), horizon);
}

const Vector& InputSignal::at(double t) const {
    if (t < 0.0 || t > horizon_) {
        std::ostringstream msg;
        msg << "input evaluated at t=" << t << " outside [0, " << horizon_ << "]";
        throw RangeError(msg.str());
    }
    // Right-continuous: segment whose breakpoint is the largest <= t.
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    const auto idx = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
    return values_[idx];
}

double InputSignal::min_segment_width() const {
    double width = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
        width = std::min(width, breakpoints_[k] - breakpoints_[k - 1]);
    }
    width = std::min(width, horizon_ - breakpoints_.back());
    return width;
}

}  // namespace plis
