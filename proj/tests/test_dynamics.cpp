#include <catch2/catch_amalgamated.hpp>

#include "sgc/diagnostics.hpp"
#include "sgc/dynamics.hpp"
#include "sgc/error.hpp"

#include <cmath>
#include <numbers>

using namespace sgc;
using Catch::Approx;

namespace {

// f = (p, -q + 0.1 p), h = (q^2 + p^2) / 2: energy grows where p != 0.
SubsystemModel make_damped() {
    return make_custom(
        2, [](std::span<const double> x) { return std::vector<double>{x[1], -x[0] + 0.1 * x[1]}; },
        [](std::span<const double>) { return std::vector<double>{0.0, 1.0}; },
        [](std::span<const double> x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); },
        [](std::span<const double> x) { return std::vector<double>{x[0], x[1]}; }, "damped");
}

}  // namespace

TEST_CASE("state vector rejects non-finite entries", "[dynamics]") {
    CHECK_THROWS_AS(StateVector({1.0, std::nan("")}), NumericDomainError);
    CHECK_THROWS_AS(StateVector({INFINITY}), NumericDomainError);
    const StateVector x{1.0, 2.0};
    CHECK(x.dim() == 2);
}

TEST_CASE("drift evaluation", "[dynamics]") {
    const auto pend = make_pendulum(1.0, 1.0, 1.0);
    const auto osc = make_oscillator(1.0);
    CHECK(eval_drift(pend, {0.0, 0.0}) == std::vector<double>{0.0, 0.0});
    CHECK(eval_drift(osc, {1.0, 0.0}) == std::vector<double>{0.0, -1.0});
    CHECK(eval_drift(osc, {0.5, 2.0}) == std::vector<double>{2.0, -0.5});

    CHECK_THROWS_AS(eval_drift(osc, {1.0}), InvalidInput);
    const auto blowup = make_custom(
        1, [](std::span<const double> x) { return std::vector<double>{1.0 / x[0]}; },
        [](std::span<const double>) { return std::vector<double>{1.0}; },
        [](std::span<const double> x) { return x[0]; },
        [](std::span<const double>) { return std::vector<double>{1.0}; }, "blowup");
    CHECK_THROWS_AS(eval_drift(blowup, {0.0}), NumericDomainError);
}

TEST_CASE("output evaluation", "[dynamics]") {
    const auto osc = make_oscillator(1.0);
    const auto pend = make_pendulum(1.0, 1.0, 1.0);
    CHECK(eval_output(osc, {0.0, 0.0}) == 0.0);
    CHECK(eval_output(osc, {1.0, 1.0}) == 1.0);
    CHECK(eval_output(pend, {std::numbers::pi, 0.0}) == Approx(2.0).epsilon(1e-15));
    CHECK(eval_output(pend, {0.0, 0.0}) == 0.0);
    CHECK(eval_output(make_oscillator(2.0), {1.0, 0.0}) == 2.0);
    CHECK(eval_output(make_oscillator(3.7), {0.0, 0.0}) == 0.0);
    CHECK_THROWS_AS(eval_output(pend, {1.0, 2.0, 3.0}), InvalidInput);
}

TEST_CASE("Lie derivatives", "[dynamics]") {
    const auto osc = make_oscillator(1.0);
    const auto pend = make_pendulum(1.0, 1.0, 1.0);
    CHECK(lie_drift_output(osc, {0.5, 2.0}) == 0.0);
    CHECK(lie_drift_output(pend, {1.0, 0.7}) == 0.0);
    CHECK(lie_drift_output(make_damped(), {0.0, 1.0}) == Approx(0.1).epsilon(1e-15));

    CHECK(lie_input_output(osc, {0.5, 2.0}) == 2.0);
    CHECK(lie_input_output(osc, {3.0, -1.5}) == -1.5);
    for (double q : {-2.0, 0.0, 0.3, 3.0}) CHECK(lie_input_output(pend, {q, 0.0}) == 0.0);
}

TEST_CASE("zoo parameters are validated", "[dynamics]") {
    CHECK_THROWS_AS(make_oscillator(0.0), InvalidParameter);
    CHECK_THROWS_AS(make_oscillator(-1.0), InvalidParameter);
    CHECK_THROWS_AS(make_pendulum(0.0, 1.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(make_pendulum(1.0, -1.0, 1.0), InvalidParameter);
    CHECK_THROWS_AS(make_pendulum(1.0, 1.0, 0.0), InvalidParameter);
}

TEST_CASE("custom model wrapping the oscillator reproduces it", "[dynamics]") {
    const auto osc = make_oscillator(1.0);
    const auto wrapped = make_custom(2, osc.drift(), osc.input_map(), osc.output(),
                                     osc.output_gradient(), "wrapped");
    SampleStream rng(7);
    for (int k = 0; k < 10; ++k) {
        const StateVector x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        CHECK(eval_output(wrapped, x) == eval_output(osc, x));
        CHECK(eval_drift(wrapped, x) == eval_drift(osc, x));
        CHECK(lie_input_output(wrapped, x) == lie_input_output(osc, x));
    }
}

TEST_CASE("pure integrator", "[dynamics]") {
    const auto integ = make_integrator();
    CHECK(eval_output(integ, {3.0}) == 3.0);
    CHECK(lie_drift_output(integ, {3.0}) == 0.0);
    CHECK(lie_input_output(integ, {-2.0}) == 1.0);
}

TEST_CASE("damped model builds but is not conservative", "[dynamics]") {
    const auto damped = make_damped();
    const auto report = check_conservative(damped, {Box::cube(2, -3, 3), 1000, 3});
    CHECK_FALSE(report.passed);
}

TEST_CASE("zoo models conserve their output exactly", "[dynamics][property]") {
    const std::vector<SubsystemModel> zoo{make_oscillator(1.0), make_oscillator(2.5),
                                          make_pendulum(1.0, 1.0, 1.0),
                                          make_pendulum(0.7, 1.3, 9.81)};
    SampleStream rng(11);
    for (const auto& m : zoo) {
        for (int k = 0; k < 1000; ++k) {
            const StateVector x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
            REQUIRE(std::abs(lie_drift_output(m, x)) <= 1e-12);
        }
    }
}

TEST_CASE("evaluations are pure", "[dynamics][property]") {
    const auto pend = make_pendulum(1.0, 2.0, 9.81);
    SampleStream rng(5);
    for (int k = 0; k < 100; ++k) {
        const StateVector x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        CHECK(eval_drift(pend, x) == eval_drift(pend, x));
        CHECK(eval_output(pend, x) == eval_output(pend, x));
        CHECK(lie_input_output(pend, x) == lie_input_output(pend, x));
    }
}

TEST_CASE("cyclic neighbour indexing", "[dynamics][property]") {
    for (std::size_t n = 1; n <= 7; ++n) {
        const NetworkSystem net(std::vector<SubsystemModel>(n, make_oscillator(1.0)));
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = i;
            for (std::size_t step = 0; step < n; ++step) j = net.neighbor_of(j, +1);
            CHECK(j == i);
            CHECK(net.neighbor_of(net.neighbor_of(i, -1), +1) == i);
        }
        CHECK(net.neighbor_of(n - 1, +1) == 0);
        CHECK(net.neighbor_of(0, -1) == n - 1);
    }
    CHECK_THROWS_AS(NetworkSystem({}), InvalidParameter);
}
