#include <doctest.h>

#include <cmath>

#include "plis/solvers.hpp"
#include "support/oracles.hpp"

using namespace plis;

namespace {

OdeProblem scalar_decay(double x0, double t_end) {
    OdeProblem p;
    p.rhs = [](double, const Vector& x, const Vector&, Vector& dxdt) { dxdt = -x; };
    p.input = InputSignal::constant(Vector::Zero(1), t_end);
    p.x0 = Vector::Constant(1, x0);
    p.t_start = 0.0;
    p.t_end = t_end;
    return p;
}

}  // namespace

TEST_CASE("euler: zero dynamics keeps the state constant") {
    OdeProblem p;
    p.rhs = [](double, const Vector&, const Vector&, Vector& dxdt) { dxdt.setZero(); };
    p.input = InputSignal::constant(Vector::Zero(1), 10.0);
    p.x0 = Vector::Constant(1, 7.0);
    p.t_end = 10.0;
    const Trace trace = euler_fixed(p, 1.0);
    REQUIRE(trace.size() == 11);
    for (const auto& x : trace.states) CHECK(x(0) == 7.0);
}

TEST_CASE("euler: one hand-computed step of dx/dt = -x") {
    const Trace trace = euler_fixed(scalar_decay(1.0, 0.1), 0.1);
    REQUIRE(trace.size() == 2);
    CHECK(trace.states[1](0) == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("euler: fine-step decay approaches the analytic exponential") {
    const Trace trace = euler_fixed(scalar_decay(1.0, 1.0), 0.001);
    CHECK(std::abs(trace.states.back()(0) - std::exp(-1.0)) < 1e-3);
}

TEST_CASE("euler order: halving the step halves the global error") {
    auto error_at = [](double q) {
        const Trace t = euler_fixed(scalar_decay(1.0, 1.0), q);
        return std::abs(t.states.back()(0) - std::exp(-1.0));
    };
    const double ratio = error_at(0.02) / error_at(0.01);
    CHECK(ratio > 1.8);
    CHECK(ratio < 2.2);
}

TEST_CASE("euler: final partial step lands exactly on t_end") {
    const Trace trace = euler_fixed(scalar_decay(1.0, 1.05), 0.5);
    REQUIRE(trace.times.size() == 4);
    CHECK(trace.times[0] == 0.0);
    CHECK(trace.times[1] == 0.5);
    CHECK(trace.times[2] == 1.0);
    CHECK(trace.times[3] == 1.05);
}

TEST_CASE("euler: divergence reports the first bad time") {
    OdeProblem p;
    p.rhs = [](double, const Vector& x, const Vector&, Vector& dxdt) {
        dxdt = x * 1e6;  // blows up fast
    };
    p.input = InputSignal::constant(Vector::Zero(1), 100.0);
    p.x0 = Vector::Constant(1, 1e300);
    p.t_end = 100.0;
    CHECK_THROWS_AS(euler_fixed(p, 1.0), DivergenceError);
}

TEST_CASE("rk45: exponential decay matches the analytic solution") {
    SolverConfig cfg;
    cfg.q_sim = 0.1;
    cfg.rel_tol = 1e-8;
    cfg.abs_tol = 1e-10;
    const Trace trace = rk45_adaptive(scalar_decay(1.0, 1.0), cfg);
    CHECK(std::abs(trace.states.back()(0) - std::exp(-1.0)) < 1e-7);
}

TEST_CASE("rk45: error stays within 10x the relative tolerance") {
    for (double tol : {1e-6, 1e-8, 1e-10}) {
        SolverConfig cfg;
        cfg.q_sim = 0.25;
        cfg.rel_tol = tol;
        cfg.abs_tol = tol * 1e-2;
        const Trace trace = rk45_adaptive(scalar_decay(1.0, 1.0), cfg);
        CHECK(std::abs(trace.states.back()(0) - std::exp(-1.0)) <= 10.0 * tol);
    }
}

TEST_CASE("rk45: rotation returns to the start after one period") {
    Matrix a(2, 2);
    a << 0, 1, -1, 0;
    OdeProblem p;
    p.rhs = linear_rhs(a, Matrix::Zero(2, 1));
    p.input = InputSignal::constant(Vector::Zero(1), 10.0);
    p.x0 = Vector(2);
    p.x0 << 1.0, 0.0;
    p.t_end = 2.0 * M_PI;
    SolverConfig cfg;
    cfg.q_sim = 0.1;
    cfg.rel_tol = 1e-9;
    cfg.abs_tol = 1e-12;
    const Trace trace = rk45_adaptive(p, cfg);
    CHECK((trace.states.back() - p.x0).norm() < 1e-6);
}

TEST_CASE("rk45: zero dynamics is constant regardless of tolerances") {
    OdeProblem p;
    p.rhs = [](double, const Vector&, const Vector&, Vector& dxdt) { dxdt.setZero(); };
    p.input = InputSignal::constant(Vector::Zero(1), 50.0);
    p.x0 = Vector::Constant(1, 3.25);
    p.t_end = 50.0;
    SolverConfig cfg;
    cfg.q_sim = 5.0;
    const Trace trace = rk45_adaptive(p, cfg);
    for (const auto& x : trace.states) CHECK(x(0) == 3.25);
}

TEST_CASE("grid contract: both solvers emit identical grids") {
    const auto p = scalar_decay(1.0, 7.3);
    SolverConfig cfg;
    cfg.q_sim = 0.7;
    const Trace a = euler_fixed(p, 0.7);
    const Trace b = rk45_adaptive(p, cfg);
    CHECK(a.times == b.times);
}

TEST_CASE("rk45 matches the matrix-exponential propagator on a driven system") {
    Matrix A(2, 2);
    A << -0.3, 0.1, 0.0, -0.05;
    Matrix B(2, 1);
    B << 0.5, 1.0;
    Vector u(1);
    u << 2.0;
    OdeProblem p;
    p.rhs = linear_rhs(A, B);
    p.input = InputSignal::constant(u, 30.0);
    p.x0 = Vector(2);
    p.x0 << 1.0, -1.0;
    p.t_end = 30.0;
    SolverConfig cfg;
    cfg.q_sim = 1.0;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-12;
    const Trace trace = rk45_adaptive(p, cfg);
    const Vector expected = oracles::lti_step(A, B, p.x0, u, 30.0);
    CHECK((trace.states.back() - expected).norm() < 1e-6 * expected.norm());
}

TEST_CASE("breakpoint respect: split integration is bitwise for euler") {
    InputSignal sig({0.0, 5.0}, {Vector::Constant(1, 1.0), Vector::Constant(1, -2.0)},
                    10.0);
    OdeProblem whole;
    whole.rhs = [](double, const Vector& x, const Vector& u, Vector& dxdt) {
        dxdt = -0.2 * x + u;
    };
    whole.input = sig;
    whole.x0 = Vector::Constant(1, 4.0);
    whole.t_end = 10.0;
    const Trace full = euler_fixed(whole, 1.0);

    OdeProblem first = whole;
    first.t_end = 5.0;
    const Trace head = euler_fixed(first, 1.0);
    OdeProblem second = whole;
    second.t_start = 5.0;
    second.t_end = 10.0;
    second.x0 = head.states.back();
    const Trace tail = euler_fixed(second, 1.0);

    for (std::size_t k = 0; k < head.size(); ++k) {
        CHECK(full.states[k](0) == head.states[k](0));
    }
    for (std::size_t k = 0; k < tail.size(); ++k) {
        CHECK(full.states[5 + k](0) == tail.states[k](0));
    }
}

TEST_CASE("breakpoint respect: rk45 split matches within tolerance") {
    InputSignal sig({0.0, 5.0}, {Vector::Constant(1, 1.0), Vector::Constant(1, -2.0)},
                    10.0);
    OdeProblem whole;
    whole.rhs = [](double, const Vector& x, const Vector& u, Vector& dxdt) {
        dxdt = -0.2 * x + u;
    };
    whole.input = sig;
    whole.x0 = Vector::Constant(1, 4.0);
    whole.t_end = 10.0;
    SolverConfig cfg;
    cfg.q_sim = 1.0;
    const Trace full = rk45_adaptive(whole, cfg);

    OdeProblem first = whole;
    first.t_end = 5.0;
    const Trace head = rk45_adaptive(first, cfg);
    OdeProblem second = whole;
    second.t_start = 5.0;
    second.t_end = 10.0;
    second.x0 = head.states.back();
    const Trace tail = rk45_adaptive(second, cfg);
    CHECK(std::abs(full.states.back()(0) - tail.states.back()(0)) < 1e-6);
}

TEST_CASE("rk45 flags stiffness instead of looping forever") {
    OdeProblem p;
    p.rhs = [](double t, const Vector& x, const Vector&, Vector& dxdt) {
        // Derivative explodes as t -> 1 from below.
        dxdt = x / (1.0 - t);
    };
    p.input = InputSignal::constant(Vector::Zero(1), 2.0);
    p.x0 = Vector::Constant(1, 1.0);
    p.t_end = 1.0;
    SolverConfig cfg;
    cfg.q_sim = 0.1;
    CHECK_THROWS(rk45_adaptive(p, cfg));
}
