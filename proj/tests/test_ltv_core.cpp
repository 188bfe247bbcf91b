#include <doctest.h>

#include <cmath>

#include "plis/ap_model.hpp"
#include "plis/input_signal.hpp"
#include "plis/ltv.hpp"
#include "plis/trace.hpp"
#include "support/oracles.hpp"

using namespace plis;

namespace {

TimeVaryingLinearSystem scalar_ramp_system() {
    // A(t) = [[-t]], constant B.
    return TimeVaryingLinearSystem(
        1, 1, [](double t) { return Matrix::Constant(1, 1, -t); },
        [](double) { return Matrix::Constant(1, 1, 1.0); },
        [](double) { return Matrix::Constant(1, 1, -1.0); },
        [](double) { return Matrix::Zero(1, 1); });
}

Trace make_trace(const std::vector<double>& glucose, double q_sim = 1.0) {
    Trace trace;
    for (std::size_t k = 0; k < glucose.size(); ++k) {
        trace.times.push_back(static_cast<double>(k) * q_sim);
        Vector x(1);
        x << glucose[k];
        trace.states.push_back(x);
    }
    return trace;
}

}  // namespace

TEST_CASE("zero_order_hold evaluates at the interval start") {
    const auto sys = scalar_ramp_system();
    const FrozenSystem frozen = zero_order_hold(sys, 0.5, 1.5);
    CHECK(frozen.A(0, 0) == -0.5);
    CHECK(frozen.B(0, 0) == 1.0);
    CHECK(frozen.tau_start == 0.5);
    CHECK(frozen.tau_end == 1.5);
}

TEST_CASE("zero_order_hold of a constant system returns the constant") {
    Matrix a(2, 2);
    a << 2, 0, 0, 3;
    TimeVaryingLinearSystem sys(
        2, 1, [a](double) { return a; }, [](double) { return Matrix::Ones(2, 1); });
    for (double tau : {0.0, 17.0, 123.0}) {
        const FrozenSystem frozen = zero_order_hold(sys, tau, tau + 1.0);
        CHECK(frozen.A == a);
    }
}

TEST_CASE("zero_order_hold of the glucose plant at t=0 gives -p4*beta in (3,3)") {
    VirtualPatient patient;
    patient.id = "test";
    patient.sensitivity.eta = -100.0;
    patient.sensitivity.beta = 1.0;
    patient.finalize();
    const auto sys = bmm_system(patient);
    // Stress events start later in the day, so C(0) = 0 and p3(0) = p4*beta.
    const FrozenSystem frozen = zero_order_hold(sys, 0.0, 30.0);
    CHECK(frozen.A(2, 2) == -patient.bmm.p4 * patient.sensitivity.beta);
}

TEST_CASE("zero_order_hold is idempotent in time") {
    const auto sys = scalar_ramp_system();
    const FrozenSystem once = zero_order_hold(sys, 2.0, 3.0);
    TimeVaryingLinearSystem refrozen(
        1, 1, [a = once.A](double) { return a; }, [b = once.B](double) { return b; });
    const FrozenSystem twice = zero_order_hold(refrozen, 2.7, 3.0);
    CHECK(once.A == twice.A);
    CHECK(once.B == twice.B);
}

TEST_CASE("non-finite coefficient evaluation raises a named error") {
    TimeVaryingLinearSystem sys(
        1, 1,
        [](double t) {
            return Matrix::Constant(1, 1, t > 1.0 ? std::nan("") : 0.0);
        },
        [](double) { return Matrix::Zero(1, 1); });
    CHECK_NOTHROW(sys.A(0.5));
    CHECK_THROWS_AS(sys.A(2.0), EvaluationError);
    CHECK_THROWS_WITH_AS(sys.A(2.0), doctest::Contains("A(0,0)"), EvaluationError);
}

TEST_CASE("finite-difference derivative fallback is first-order consistent") {
    TimeVaryingLinearSystem sys(
        1, 1, [](double t) { return Matrix::Constant(1, 1, std::sin(t)); },
        [](double) { return Matrix::Zero(1, 1); });
    oracles::Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        const double t = rng.uniform(0.1, 10.0);
        CHECK(sys.dA_dt(t)(0, 0) == doctest::Approx(std::cos(t)).epsilon(1e-4));
    }
}

TEST_CASE("input signal is right-continuous at breakpoints") {
    InputSignal sig({0.0, 10.0}, {Vector::Zero(1), Vector::Constant(1, 5.0)}, 20.0);
    CHECK(sig.at(10.0)(0) == 5.0);
    CHECK(sig.at(9.999)(0) == 0.0);
    CHECK(sig.at(0.0)(0) == 0.0);
    CHECK(sig.at(20.0)(0) == 5.0);
    CHECK_THROWS_AS(sig.at(20.001), RangeError);
    CHECK_THROWS_AS(sig.at(-0.001), RangeError);
}

TEST_CASE("constant input signal returns its value everywhere") {
    Vector v(2);
    v << 3.0, 1.0;
    const auto sig = InputSignal::constant(v, 100.0);
    for (double t : {0.0, 12.5, 99.9, 100.0}) {
        CHECK(sig.at(t) == v);
    }
}

TEST_CASE("input signal returns exactly one declared segment value") {
    InputSignal sig({0.0, 5.0, 12.0},
                    {Vector::Constant(1, 1.0), Vector::Constant(1, 2.0),
                     Vector::Constant(1, 3.0)},
                    30.0);
    oracles::Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const double t = rng.uniform(0.0, 30.0);
        const double v = sig.at(t)(0);
        CHECK((v == 1.0 || v == 2.0 || v == 3.0));
        if (t < 5.0) CHECK(v == 1.0);
        if (t >= 5.0 && t < 12.0) CHECK(v == 2.0);
        if (t >= 12.0) CHECK(v == 3.0);
    }
}

TEST_CASE("input breakpoints must be strictly increasing and start at zero") {
    CHECK_THROWS_AS(InputSignal({1.0}, {Vector::Zero(1)}, 10.0), ConstructionError);
    CHECK_THROWS_AS(
        InputSignal({0.0, 5.0, 5.0},
                    {Vector::Zero(1), Vector::Zero(1), Vector::Zero(1)}, 10.0),
        ConstructionError);
}

TEST_CASE("trace distance: identical traces are at distance zero") {
    const auto a = make_trace({100, 110, 120, 130});
    CHECK(trace_distance(a, a, DistanceMode::relative_rmse) == 0.0);
}

TEST_CASE("trace distance: constant 10% offset") {
    const auto a = make_trace({110, 110, 110});
    const auto b = make_trace({100, 100, 100});
    CHECK(trace_distance(a, b, DistanceMode::relative_rmse) == doctest::Approx(0.1));
}

TEST_CASE("trace distance: uniform componentwise scaling") {
    Trace b;
    oracles::Rng rng(3);
    for (int k = 0; k < 50; ++k) {
        b.times.push_back(k);
        Vector x(3);
        x << rng.uniform(50, 200), rng.uniform(-1, 1), rng.uniform(10, 20);
        b.states.push_back(x);
    }
    Trace a = b;
    for (auto& x : a.states) x *= 1.05;
    CHECK(trace_distance(a, b, DistanceMode::relative_rmse) ==
          doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("trace distance is a pseudometric on random equal-grid traces") {
    oracles::Rng rng(17);
    auto random_trace = [&rng]() {
        Trace t;
        for (int k = 0; k < 30; ++k) {
            t.times.push_back(k);
            Vector x(2);
            x << rng.uniform(-5, 5), rng.uniform(80, 150);
            t.states.push_back(x);
        }
        return t;
    };
    // The numerator of trace_distance (max over states of the per-state RMSE)
    // is the metric; the normalization rescales by the reference trace. Check
    // the metric axioms on the numerator and consistency of the normalization.
    auto abs_rmse = [](const Trace& a, const Trace& b) {
        double worst = 0.0;
        for (int i = 0; i < a.state_dim(); ++i) {
            double sq = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) {
                const double d = a.states[k](i) - b.states[k](i);
                sq += d * d;
            }
            worst = std::max(worst, std::sqrt(sq / static_cast<double>(a.size())));
        }
        return worst;
    };
    auto rms_of = [](const Trace& b, int i) {
        double sq = 0.0;
        for (std::size_t k = 0; k < b.size(); ++k) sq += b.states[k](i) * b.states[k](i);
        return std::sqrt(sq / static_cast<double>(b.size()));
    };
    for (int round = 0; round < 25; ++round) {
        const Trace a = random_trace();
        const Trace b = random_trace();
        const Trace c = random_trace();
        CHECK(trace_distance(a, a, DistanceMode::relative_rmse) == 0.0);
        CHECK(abs_rmse(a, b) == abs_rmse(b, a));
        CHECK(abs_rmse(a, c) <= abs_rmse(a, b) + abs_rmse(b, c) + 1e-12);
        // Normalization consistency on single-state slices.
        Trace a0 = a, b0 = b;
        for (auto& x : a0.states) x = x.head(1).eval();
        for (auto& x : b0.states) x = x.head(1).eval();
        const double expect = abs_rmse(a0, b0) / std::max(rms_of(b0, 0), 1e-9);
        CHECK(trace_distance(a0, b0, DistanceMode::relative_rmse) ==
              doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("mismatched grids raise an alignment error") {
    const auto a = make_trace({1, 2, 3});
    const auto b = make_trace({1, 2, 3}, 2.0);
    CHECK_THROWS_AS(trace_distance(a, b, DistanceMode::relative_rmse), AlignmentError);
}

TEST_CASE("splitting at events and concatenating reconstructs the trace exactly") {
    auto trace = make_trace({100, 101, 102, 103, 104, 105, 106});
    trace.event_times = {2.0, 5.0};
    trace.engine_label = "test";
    const auto parts = trace.split_at_events();
    REQUIRE(parts.size() == 3);
    const Trace glued = Trace::concatenate(parts);
    REQUIRE(glued.times == trace.times);
    for (std::size_t k = 0; k < trace.size(); ++k) {
        CHECK(glued.states[k] == trace.states[k]);
    }
    CHECK(glued.event_times == trace.event_times);
}

TEST_CASE("per-trajectory distance takes the worst trajectory") {
    auto a = make_trace({100, 100, 100, 100, 100, 100});
    auto b = make_trace({100, 100, 100, 110, 110, 110});
    a.event_times = {3.0};
    b.event_times = {3.0};
    const double whole = trace_distance(a, b, DistanceMode::relative_rmse);
    const double per_traj = trace_distance(a, b, DistanceMode::per_trajectory_max);
    CHECK(per_traj > whole);
    CHECK(per_traj == doctest::Approx(10.0 / 110.0).epsilon(1e-6));
}
