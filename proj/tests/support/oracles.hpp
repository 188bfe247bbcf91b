#pragma once

// Test-side reference computations, kept independent of the library's
// implementation paths.

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdint>
#include <vector>

#include "plis/common.hpp"

namespace oracles {

/// Matrix exponential (Pade/scaling-squaring from Eigen's MatrixFunctions).
inline plis::Matrix expm(const plis::Matrix& a) { return a.exp(); }

/// Exact solution of dx/dt = A x + B u with constant u over time h.
inline plis::Vector lti_step(const plis::Matrix& A, const plis::Matrix& B,
                             const plis::Vector& x, const plis::Vector& u, double h) {
    const auto n = A.rows();
    const auto m = B.cols();
    // Augmented exponential trick: exp([[A, B],[0, 0]] h) propagates [x; u].
    plis::Matrix aug = plis::Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = A;
    aug.topRightCorner(n, m) = B;
    const plis::Matrix big = expm(aug * h);
    return big.topLeftCorner(n, n) * x + big.topRightCorner(n, m) * u;
}

/// splitmix64 for reproducible property-test draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform(double lo, double hi) {
        const double unit = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * unit;
    }

private:
    std::uint64_t state_;
};

/// Independent evaluation of one cortisol wave (two poles, delayed zero term),
/// written directly from the closed form rather than through the library.
inline double cortisol_wave_reference(double t, double kp, double tp1, double tp2,
                                      double tz, double td) {
    if (t <= 0.0) return 0.0;
    double bracket = std::exp(-t / tp2) - std::exp(-t / tp1);
    if (t >= td) {
        bracket += (tz / td) * (std::exp(-(t - td) / tp1) / tp1 -
                                std::exp(-(t - td) / tp2) / tp2);
    }
    return kp / (tp2 - tp1) * bracket;
}

struct PeakSearch {
    double t = 0.0;
    double value = 0.0;
};

/// Dense-grid peak of a function over [lo, hi].
template <typename Fn>
PeakSearch dense_peak(Fn fn, double lo, double hi, double step) {
    PeakSearch best;
    best.t = lo;
    best.value = fn(lo);
    for (double t = lo; t <= hi; t += step) {
        const double v = fn(t);
        if (v > best.value) {
            best.value = v;
            best.t = t;
        }
    }
    return best;
}

}  // namespace oracles
