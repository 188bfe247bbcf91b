#include "plis/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace plis {

GlycemicReport glycemic(const Trace& trace, int glucose_index) {
    if (trace.times.empty()) throw Error("glycemic metrics need a non-empty trace");
    long in_range = 0, above = 0, below = 0;
    for (const auto& state : trace.states) {
        const double g = state(glucose_index);
        if (g < 70.0) {
            ++below;
        } else if (g > 180.0) {
            ++above;
        } else {
            ++in_range;
        }
    }
    const auto total = static_cast<double>(trace.states.size());
    return GlycemicReport{100.0 * static_cast<double>(in_range) / total,
                          100.0 * static_cast<double>(above) / total,
                          100.0 * static_cast<double>(below) / total};
}

double optimality(const Trace& candidate, const Trace& oracle) {
    if (candidate.size() != oracle.size() || candidate.size() == 0) {
        throw AlignmentError("optimality requires equal non-empty grids");
    }
    const int n = candidate.state_dim();
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        double sum_c = 0.0, sum_o = 0.0;
        for (std::size_t k = 0; k < candidate.size(); ++k) {
            sum_c += candidate.states[k](i);
            sum_o += oracle.states[k](i);
        }
        const auto count = static_cast<double>(candidate.size());
        num += sum_c / count;
        den += sum_o / count;
    }
    if (den == 0.0) throw Error("optimality denominator is zero");
    return num / den;
}

double speedup(const Trace& candidate, const Trace& oracle) {
    if (!(candidate.wall_clock_seconds > 0.0) || !(oracle.wall_clock_seconds > 0.0)) {
        throw Error("speedup requires positive wall-clock timings on both traces");
    }
    return oracle.wall_clock_seconds / candidate.wall_clock_seconds;
}

MeanSd mean_sd(const std::vector<double>& values) {
    MeanSd out;
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - out.mean) * (v - out.mean);
        out.sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw Error("median of an empty set");
    std::sort(values.begin(), values.end());
    const auto mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace plis
