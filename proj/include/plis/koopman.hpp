#pragma once

#include <string>
#include <utility>
#include <vector>

#include "plis/common.hpp"

namespace plis {

/// Higher-order discrete-time LTI surrogate identified from snapshot data.
///
/// The lifting is a time-delay embedding: the n original states first (so the
/// pre-image is an exact coordinate projection), then delayed copies of the
/// states, newest delay first and cycling through the states in reverse order
/// (for the glucose plant: G, then i_s, then i) until n_k coordinates exist.
struct KoopmanModel {
    int n = 0;        // original state dimension
    int n_k = 0;      // lifted dimension
    int m = 0;        // input dimension
    double step = 1.0;  // discretization step (minutes)
    Matrix A_k;       // n_k x n_k
    Matrix B_k;       // n_k x m
    std::vector<std::pair<int, int>> delays;  // (state index, delay) per extra coord
    double fit_error = 0.0;  // relative Frobenius residual on training data
    int truncated_singular_values = 0;

    /// Longest delay used by the embedding.
    [[nodiscard]] int max_delay() const;

    /// Lift a state window; window.back() is the current state and the window
    /// must hold at least max_delay() + 1 entries (pad by holding the oldest).
    [[nodiscard]] Vector lift(const std::vector<Vector>& window) const;

    /// Pre-image: the current original state is the first n coordinates.
    [[nodiscard]] Vector unlift(const Vector& lifted) const;
};

/// One training sequence: (state, input) snapshots at the uniform step.
using SnapshotSequence = std::vector<std::pair<Vector, Vector>>;

/// Least-squares DMD with control: X' = A_k X + B_k U over lifted snapshot
/// pairs, solved through a truncated-SVD pseudo-inverse (singular values below
/// 1e-10 of the largest are dropped and counted, not raised as errors).
KoopmanModel dmd_fit(const std::vector<SnapshotSequence>& sequences, int n_k, double step);

/// Plain-text matrix container (dimensions header + row-major values).
void save_koopman(const KoopmanModel& model, const std::string& path);
KoopmanModel load_koopman(const std::string& path);

}  // namespace plis
