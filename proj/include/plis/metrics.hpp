#pragma once

#include <vector>

#include "plis/common.hpp"
#include "plis/trace.hpp"

namespace plis {

/// Sample-count percentages of glucose in/above/below range. Boundary samples
/// (exactly 70 or 180 mg/dL) count as in range.
struct GlycemicReport {
    double tir = 0.0;  // 70 <= G <= 180
    double tar = 0.0;  // G > 180
    double tbr = 0.0;  // G < 70
};

GlycemicReport glycemic(const Trace& trace, int glucose_index = 2);

/// Optimality ratio: sum of per-state means of the candidate over the same
/// sum for the reference trace.
double optimality(const Trace& candidate, const Trace& oracle);

/// Wall-clock speedup of the candidate engine relative to the reference.
double speedup(const Trace& candidate, const Trace& oracle);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& values);

/// Median (values copied and sorted).
double median(std::vector<double> values);

}  // namespace plis
