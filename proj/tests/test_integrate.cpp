#include <doctest.h>

#include <cmath>

#include "sdstab/integrate.hpp"
#include "test_util.hpp"

using namespace sdstab;
using namespace sdstab::testing;

namespace {

ControlSystem scalar_input_integrator() {
    // xdot = u
    return ControlSystem::general(1, 1,
                                  [](const Vec&, const Vec& u) { return Vec{u[0]}; });
}

ControlSystem linear_decay() {
    // xdot = -x + u
    return ControlSystem::general(
        1, 1, [](const Vec& x, const Vec& u) { return Vec{-x[0] + u[0]}; });
}

}  // namespace

TEST_SUITE("integrate") {

TEST_CASE("zero dynamics holds the state constant") {
    VectorField z;
    z.dim = 2;
    z.eval = [](const Vec&) { return Vec{0.0, 0.0}; };
    const ControlSystem sys = ControlSystem::driftless({z});
    ControlSchedule sched;
    sched.append(0.7, {1.0}).append(0.4, {-2.0});
    const Trajectory traj = integrate(sys, {1.5, -0.5}, sched, 1e-2);
    for (const Vec& s : traj.states) {
        CHECK(s[0] == 1.5);
        CHECK(s[1] == -0.5);
    }
    CHECK(traj.times.back() == doctest::Approx(1.1));
}

TEST_CASE("constant-derivative system is integrated exactly") {
    const ControlSystem sys = scalar_input_integrator();
    const Vec end = endpoint(sys, {0.0}, ControlSchedule::single(1.0, {2.0}), 1e-3);
    CHECK(end[0] == doctest::Approx(2.0).epsilon(1e-12));
    const Vec half = endpoint(sys, {0.0}, ControlSchedule::single(0.5, {4.0}), 1e-3);
    CHECK(half[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("linear decay matches the closed form") {
    const ControlSystem sys = linear_decay();
    const Vec end = endpoint(sys, {1.0}, ControlSchedule::single(1.0, {0.0}), 1e-3);
    CHECK(std::abs(end[0] - std::exp(-1.0)) < 1e-9);
}

TEST_CASE("fourth-order convergence on the linear decay test") {
    const ControlSystem sys = linear_decay();
    const double exact = std::exp(-1.0);
    const double e1 =
        std::abs(endpoint(sys, {1.0}, ControlSchedule::single(1.0, {0.0}), 0.1)[0] - exact);
    const double e2 =
        std::abs(endpoint(sys, {1.0}, ControlSchedule::single(1.0, {0.0}), 0.05)[0] - exact);
    const double factor = e1 / e2;
    CHECK(factor > 12.0);
    CHECK(factor < 20.0);
}

TEST_CASE("time reversal on the harmonic oscillator") {
    const ControlSystem sys = ControlSystem::general(
        2, 1, [](const Vec& x, const Vec&) { return Vec{x[1], -x[0]}; });
    const double period = 2.0 * 3.14159265358979323846;
    const Vec end = endpoint(sys, {1.0, 0.0}, ControlSchedule::single(period, {0.0}), 1e-3);
    CHECK(norm2(sub(end, {1.0, 0.0})) < 1e-6);
}

TEST_CASE("peak along the trajectory") {
    SUBCASE("monotone decay peaks at the start") {
        const ControlSystem sys = linear_decay();
        ScalarField phi;
        phi.dim = 1;
        phi.value = [](const Vec& x) { return 0.5 * x[0] * x[0]; };
        CHECK(peak_along(sys, {1.0}, ControlSchedule::single(1.0, {0.0}), 1e-3, phi) ==
              doctest::Approx(0.5));
    }
    SUBCASE("growth peaks at the end") {
        const ControlSystem sys = ControlSystem::general(
            1, 1, [](const Vec& x, const Vec&) { return Vec{x[0]}; });
        ScalarField phi;
        phi.dim = 1;
        phi.value = [](const Vec& x) { return 0.5 * x[0] * x[0]; };
        const double peak =
            peak_along(sys, {1.0}, ControlSchedule::single(1.0, {0.0}), 1e-3, phi);
        CHECK(std::abs(peak - 0.5 * std::exp(2.0)) < 1e-6);
    }
}

TEST_CASE("restart consistency") {
    const ControlSystem sys = linear_decay();
    const ControlSchedule full = ControlSchedule::single(2.0, {0.3});
    const Vec direct = endpoint(sys, {1.0}, full, 1e-3);
    const Vec mid = endpoint(sys, {1.0}, ControlSchedule::single(0.8, {0.3}), 1e-3);
    const Vec resumed = endpoint(sys, mid, ControlSchedule::single(1.2, {0.3}), 1e-3);
    CHECK(std::abs(direct[0] - resumed[0]) < 1e-8);
}

TEST_CASE("schedule splitting leaves the endpoint unchanged") {
    const ControlSystem sys = linear_decay();
    ControlSchedule split;
    split.append(0.37, {0.5}).append(0.63, {0.5});
    const Vec a = endpoint(sys, {1.0}, ControlSchedule::single(1.0, {0.5}), 1e-3);
    const Vec b = endpoint(sys, {1.0}, split, 1e-3);
    CHECK(std::abs(a[0] - b[0]) < 1e-10);
}

TEST_CASE("concatenation is associative") {
    const ControlSchedule a = ControlSchedule::single(0.1, {1.0});
    const ControlSchedule b = ControlSchedule::single(0.2, {2.0});
    const ControlSchedule c = ControlSchedule::single(0.3, {3.0});
    const ControlSchedule lhs = concat(a, concat(b, c));
    const ControlSchedule rhs = concat(concat(a, b), c);
    REQUIRE(lhs.segments.size() == rhs.segments.size());
    for (std::size_t i = 0; i < lhs.segments.size(); ++i) {
        CHECK(lhs.segments[i].duration == rhs.segments[i].duration);
        CHECK(lhs.segments[i].control == rhs.segments[i].control);
    }
    CHECK(lhs.total_duration() == doctest::Approx(0.6));
}

TEST_CASE("trajectory times are strictly increasing and record boundaries") {
    const ControlSystem sys = linear_decay();
    ControlSchedule sched;
    sched.append(0.25, {0.0}).append(0.105, {1.0});  // second segment not a step multiple
    const Trajectory traj = integrate(sys, {1.0}, sched, 1e-2);
    for (std::size_t i = 1; i < traj.times.size(); ++i)
        CHECK(traj.times[i] > traj.times[i - 1]);
    CHECK(traj.times.back() == doctest::Approx(0.355).epsilon(1e-12));
    CHECK(traj.controls.size() == traj.times.size() - 1);
}

TEST_CASE("blowup raises with the last finite time") {
    // xdot = x^2 from 1 blows up at t = 1
    const ControlSystem sys = ControlSystem::general(
        1, 1, [](const Vec& x, const Vec&) { return Vec{x[0] * x[0]}; });
    try {
        integrate(sys, {1.0}, ControlSchedule::single(2.0, {0.0}), 1e-4);
        FAIL("expected BlowupError");
    } catch (const BlowupError& e) {
        CHECK(e.last_finite_time > 0.9);
        CHECK(e.last_finite_time < 1.1);
    }
}

TEST_CASE("input validation") {
    const ControlSystem sys = linear_decay();
    CHECK_THROWS_AS(integrate(sys, {1.0}, ControlSchedule{}, 1e-3), EmptyScheduleError);
    CHECK_THROWS_AS(integrate(sys, {1.0}, ControlSchedule::single(1.0, {0.0}), 0.0),
                    ValidationError);
    CHECK_THROWS_AS(ControlSchedule::single(-1.0, {0.0}), ValidationError);
    CHECK_THROWS_AS(integrate(sys, {1.0, 2.0}, ControlSchedule::single(1.0, {0.0}), 1e-3),
                    DimensionError);
}

TEST_CASE("refined step gives at least ten steps per segment") {
    ControlSchedule sched;
    sched.append(0.5, {0.0}).append(0.004, {1.0});
    CHECK(refined_step(1e-3, sched) == doctest::Approx(0.0004));
    CHECK(refined_step(1e-5, sched) == doctest::Approx(1e-5));
}

}  // TEST_SUITE
