#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "plis/ap_model.hpp"
#include "plis/engines.hpp"
#include "plis/koopman.hpp"
#include "support/oracles.hpp"

using namespace plis;

namespace {

/// Rollout of a known discrete LTI system under a given input sequence.
SnapshotSequence rollout(const Matrix& A, const Matrix& B, Vector x,
                         const std::vector<Vector>& inputs) {
    SnapshotSequence seq;
    for (const auto& u : inputs) {
        seq.emplace_back(x, u);
        x = A * x + B * u;
    }
    return seq;
}

std::vector<Vector> random_inputs(int count, int m, oracles::Rng& rng) {
    std::vector<Vector> out;
    for (int k = 0; k < count; ++k) {
        Vector u(m);
        for (int i = 0; i < m; ++i) u(i) = rng.uniform(-1.0, 1.0);
        out.push_back(u);
    }
    return out;
}

}  // namespace

TEST_CASE("dmd recovers a scalar contraction exactly") {
    Matrix A = Matrix::Constant(1, 1, 0.9);
    Matrix B = Matrix::Zero(1, 1);
    oracles::Rng rng(1);
    std::vector<SnapshotSequence> sequences;
    for (int s = 0; s < 4; ++s) {
        sequences.push_back(
            rollout(A, B, Vector::Constant(1, rng.uniform(0.5, 2.0)), random_inputs(40, 1, rng)));
    }
    const auto model = dmd_fit(sequences, 1, 1.0);
    CHECK(model.A_k(0, 0) == doctest::Approx(0.9).epsilon(1e-10));
    CHECK(model.fit_error < 1e-10);
}

TEST_CASE("dmd recovers rotation eigenvalues") {
    const double theta = 0.3;
    Matrix A(2, 2);
    A << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    Matrix B = Matrix::Zero(2, 1);
    oracles::Rng rng(2);
    std::vector<SnapshotSequence> sequences;
    for (int s = 0; s < 3; ++s) {
        Vector x0(2);
        x0 << rng.uniform(-1, 1), rng.uniform(-1, 1);
        sequences.push_back(rollout(A, B, x0, random_inputs(50, 1, rng)));
    }
    const auto model = dmd_fit(sequences, 2, 1.0);
    const Eigen::EigenSolver<Matrix> eig(model.A_k);
    // Eigenvalues are e^{+-i theta}.
    for (int i = 0; i < 2; ++i) {
        CHECK(std::abs(eig.eigenvalues()(i)) == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(std::abs(std::abs(std::arg(eig.eigenvalues()(i))) - theta) < 1e-8);
    }
}

TEST_CASE("dmd on the discretized glucose plant recovers the matrix exponential") {
    auto cohort = generate_cohort(3, 1);
    VirtualPatient p = cohort[0];
    p.sensitivity.eta = 0.0;  // constant p3
    p.finalize();
    const auto sys = bmm_system(p);
    const double step = 1.0;
    // Exact zero-order-hold discretization as the oracle.
    const Matrix A_cont = sys.A(0.0);
    const Matrix B_cont = sys.B(0.0);
    Matrix aug = Matrix::Zero(5, 5);
    aug.topLeftCorner(3, 3) = A_cont;
    aug.topRightCorner(3, 2) = B_cont;
    const Matrix big = oracles::expm(aug * step);
    const Matrix A_d = big.topLeftCorner(3, 3);
    const Matrix B_d = big.topRightCorner(3, 2);

    oracles::Rng rng(4);
    std::vector<SnapshotSequence> sequences;
    for (int s = 0; s < 3; ++s) {
        Vector x0 = p.x0;
        x0(2) += rng.uniform(-20.0, 20.0);
        std::vector<Vector> inputs;
        for (int k = 0; k < 80; ++k) {
            Vector u(2);
            u << p.u1_eq + rng.uniform(-0.1, 0.1), rng.uniform(0.0, 5.0);
            inputs.push_back(u);
        }
        sequences.push_back(rollout(A_d, B_d, x0, inputs));
    }
    const auto model = dmd_fit(sequences, 3, step);
    CHECK((model.A_k - A_d).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((model.B_k - B_d).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("lift places delayed glucose coordinates first and unlift inverts it") {
    KoopmanModel model;
    model.n = 3;
    model.n_k = 13;
    model.m = 2;
    model.delays = {{2, 1}, {1, 1}, {0, 1}, {2, 2}, {1, 2}, {0, 2}, {2, 3}, {1, 3},
                    {0, 3}, {2, 4}};
    std::vector<Vector> window;
    for (int k = 0; k <= 4; ++k) {
        Vector x(3);
        x << 10.0 * k, 100.0 + k, 200.0 + k;
        window.push_back(x);
    }
    const Vector z = model.lift(window);
    REQUIRE(z.size() == 13);
    CHECK(z.head(3) == window.back());
    CHECK(z(3) == window[3](2));  // G delayed by 1
    CHECK(z(4) == window[3](1));  // i_s delayed by 1
    CHECK(z(5) == window[3](0));  // i delayed by 1
    CHECK(z(12) == window[0](2)); // G delayed by 4
    CHECK(model.unlift(z) == window.back());
}

TEST_CASE("delay layout cycles newest-first through reversed state order") {
    oracles::Rng rng(6);
    Matrix A(2, 2);
    A << 0.8, 0.1, 0.0, 0.7;
    Matrix B = Matrix::Identity(2, 2);
    std::vector<SnapshotSequence> sequences;
    for (int s = 0; s < 4; ++s) {
        Vector x0(2);
        x0 << rng.uniform(-1, 1), rng.uniform(-1, 1);
        sequences.push_back(rollout(A, B, x0, random_inputs(60, 2, rng)));
    }
    const auto model = dmd_fit(sequences, 5, 1.0);
    REQUIRE(model.delays.size() == 3);
    CHECK(model.delays[0] == std::pair<int, int>{1, 1});
    CHECK(model.delays[1] == std::pair<int, int>{0, 1});
    CHECK(model.delays[2] == std::pair<int, int>{1, 2});
    CHECK(model.max_delay() == 2);
}

TEST_CASE("unlift after lift is the identity on the current state") {
    oracles::Rng rng(8);
    KoopmanModel model;
    model.n = 3;
    model.n_k = 7;
    model.m = 1;
    model.delays = {{2, 1}, {1, 1}, {0, 1}, {2, 2}};
    for (int round = 0; round < 20; ++round) {
        std::vector<Vector> window;
        for (int k = 0; k < 3; ++k) {
            Vector x(3);
            x << rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(50, 200);
            window.push_back(x);
        }
        CHECK(model.unlift(model.lift(window)) == window.back());
    }
}

TEST_CASE("fit error is non-increasing in the lifted dimension") {
    // Nonlinear-in-time data so the residual is nonzero.
    auto cohort = generate_cohort(13, 1);
    const auto& p = cohort[0];
    const auto sys = bmm_system(p);
    LoopSetup open = make_loop_setup(p, 1440.0, nullptr, nullptr);
    SolverConfig cfg;
    const auto run = oracle_simulate(sys, open, p.x0, 0.0, 1440.0, cfg);
    SnapshotSequence seq;
    for (std::size_t k = 0; k < run.trace.size(); ++k) {
        Vector u(2);
        u << p.u1_eq, meal_to_input(expand_daily(p.meal_schedule, 1440.0),
                                    run.trace.times[k]);
        seq.emplace_back(run.trace.states[k], u);
    }
    double prev = 1e9;
    for (int n_k : {3, 5, 9, 13}) {
        const auto model = dmd_fit({seq}, n_k, 1.0);
        CHECK(model.fit_error <= prev + 1e-12);
        prev = model.fit_error;
    }
}

TEST_CASE("koopman simulation of a scalar contraction gives the analytic power") {
    Matrix A = Matrix::Constant(1, 1, 0.9);
    Matrix B = Matrix::Zero(1, 1);
    oracles::Rng rng(10);
    std::vector<SnapshotSequence> sequences;
    for (int s = 0; s < 3; ++s) {
        sequences.push_back(
            rollout(A, B, Vector::Constant(1, rng.uniform(0.5, 2.0)), random_inputs(40, 1, rng)));
    }
    const auto model = dmd_fit(sequences, 1, 1.0);
    LoopSetup setup;
    setup.exogenous = InputSignal::constant(Vector::Zero(1), 10.0);
    const auto run = koopman_simulate(model, setup, Vector::Constant(1, 1.0), 0.0, 10.0);
    CHECK(run.trace.states.back()(0) == doctest::Approx(std::pow(0.9, 10)).epsilon(1e-8));
}

TEST_CASE("null dynamics decay to zero after the delay window") {
    KoopmanModel model;
    model.n = 1;
    model.n_k = 2;
    model.m = 1;
    model.step = 1.0;
    model.delays = {{0, 1}};
    model.A_k = Matrix::Zero(2, 2);
    model.B_k = Matrix::Zero(2, 1);
    LoopSetup setup;
    setup.exogenous = InputSignal::constant(Vector::Zero(1), 5.0);
    const auto run = koopman_simulate(model, setup, Vector::Constant(1, 3.0), 0.0, 5.0);
    CHECK(run.trace.states[0](0) == 3.0);
    for (std::size_t k = 1; k < run.trace.size(); ++k) {
        CHECK(run.trace.states[k](0) == 0.0);
    }
}

TEST_CASE("held-out trajectories of linear systems are reproduced") {
    Matrix A(3, 3);
    A << 0.9, 0.05, 0.0, 0.0, 0.85, 0.1, 0.02, 0.0, 0.8;
    Matrix B(3, 2);
    B << 1.0, 0.0, 0.0, 0.5, 0.2, 0.1;
    oracles::Rng rng(12);
    std::vector<SnapshotSequence> train;
    for (int s = 0; s < 5; ++s) {
        Vector x0(3);
        x0 << rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1);
        train.push_back(rollout(A, B, x0, random_inputs(60, 2, rng)));
    }
    const auto model = dmd_fit(train, 3, 1.0);

    Vector x0(3);
    x0 << 0.4, -0.2, 0.7;
    const auto held_out = rollout(A, B, x0, random_inputs(50, 2, rng));
    Vector z = model.lift({x0});
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < held_out.size(); ++k) {
        z = model.A_k * z + model.B_k * held_out[k].second;
        const Vector truth = held_out[k + 1].first;
        worst = std::max(worst, (model.unlift(z) - truth).norm() /
                                    std::max(truth.norm(), 1e-9));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("insufficient training data raises a fit error") {
    SnapshotSequence tiny;
    for (int k = 0; k < 12; ++k) {
        tiny.emplace_back(Vector::Constant(1, 1.0), Vector::Zero(1));
    }
    CHECK_THROWS_AS(dmd_fit({tiny}, 5, 1.0), FitError);
}

TEST_CASE("model save/load round-trips through the text container") {
    oracles::Rng rng(14);
    Matrix A = Matrix::Constant(1, 1, 0.77);
    Matrix B = Matrix::Constant(1, 1, 0.11);
    std::vector<SnapshotSequence> sequences;
    sequences.push_back(
        rollout(A, B, Vector::Constant(1, 1.0), random_inputs(40, 1, rng)));
    const auto model = dmd_fit(sequences, 2, 0.5);
    const auto path =
        (std::filesystem::temp_directory_path() / "plis_koopman_roundtrip.txt").string();
    save_koopman(model, path);
    const auto loaded = load_koopman(path);
    CHECK(loaded.n == model.n);
    CHECK(loaded.n_k == model.n_k);
    CHECK(loaded.m == model.m);
    CHECK(loaded.step == model.step);
    CHECK(loaded.delays == model.delays);
    CHECK((loaded.A_k - model.A_k).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.B_k - model.B_k).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);
}
