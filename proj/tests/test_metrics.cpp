#include <doctest.h>

#include <cmath>

#include "plis/metrics.hpp"
#include "support/oracles.hpp"

using namespace plis;

namespace {

Trace glucose_trace(const std::vector<double>& glucose) {
    Trace trace;
    for (std::size_t k = 0; k < glucose.size(); ++k) {
        trace.times.push_back(static_cast<double>(k));
        Vector x(3);
        x << 0.01 * static_cast<double>(k), -0.02, glucose[k];
        trace.states.push_back(x);
    }
    return trace;
}

}  // namespace

TEST_CASE("glycemic: constant in-range glucose") {
    const auto report = glycemic(glucose_trace({120, 120, 120, 120}));
    CHECK(report.tir == 100.0);
    CHECK(report.tar == 0.0);
    CHECK(report.tbr == 0.0);
}

TEST_CASE("glycemic: direct count of mixed samples") {
    const auto report = glycemic(glucose_trace({60, 120, 200, 150}));
    CHECK(report.tbr == 25.0);
    CHECK(report.tir == 50.0);
    CHECK(report.tar == 25.0);
}

TEST_CASE("glycemic: boundary samples count as in range") {
    const auto report = glycemic(glucose_trace({180, 70, 180, 70}));
    CHECK(report.tir == 100.0);
    CHECK(report.tar == 0.0);
    CHECK(report.tbr == 0.0);
}

TEST_CASE("glycemic: empty trace is an error") {
    Trace empty;
    CHECK_THROWS(glycemic(empty));
}

TEST_CASE("glycemic partition sums to 100 on random traces") {
    oracles::Rng rng(31);
    for (int round = 0; round < 1000; ++round) {
        std::vector<double> glucose;
        const int count = 1 + static_cast<int>(rng.next() % 40);
        for (int k = 0; k < count; ++k) glucose.push_back(rng.uniform(20.0, 400.0));
        const auto report = glycemic(glucose_trace(glucose));
        CHECK(std::abs(report.tir + report.tar + report.tbr - 100.0) <= 1e-9);
    }
}

TEST_CASE("optimality of a trace against itself is exactly one") {
    const auto trace = glucose_trace({100, 140, 90, 180});
    CHECK(optimality(trace, trace) == 1.0);
}

TEST_CASE("optimality is scale-covariant") {
    oracles::Rng rng(33);
    Trace oracle;
    for (int k = 0; k < 60; ++k) {
        oracle.times.push_back(k);
        Vector x(3);
        x << rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(80.0, 200.0);
        oracle.states.push_back(x);
    }
    for (double c : {1.1, 0.5, 3.0}) {
        Trace candidate = oracle;
        for (auto& x : candidate.states) x *= c;
        CHECK(optimality(candidate, oracle) == doctest::Approx(c).epsilon(1e-15));
    }
}

TEST_CASE("speedup is the timing ratio") {
    Trace oracle = glucose_trace({100, 100});
    Trace candidate = oracle;
    oracle.wall_clock_seconds = 10.0;
    candidate.wall_clock_seconds = 4.0;
    CHECK(speedup(candidate, oracle) == 2.5);
    candidate.wall_clock_seconds = 10.0;
    CHECK(speedup(candidate, oracle) == 1.0);
    candidate.wall_clock_seconds = 0.0;
    CHECK_THROWS(speedup(candidate, oracle));
}

TEST_CASE("mean and standard deviation helpers") {
    const auto stats = mean_sd({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
    CHECK(stats.mean == doctest::Approx(5.0));
    CHECK(stats.sd == doctest::Approx(2.13809).epsilon(1e-4));
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}
