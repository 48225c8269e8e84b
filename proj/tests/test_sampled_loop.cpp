#include <doctest.h>

#include <cmath>

#include "sdstab/scenarios.hpp"
#include "test_util.hpp"

using namespace sdstab;
using namespace sdstab::testing;

namespace {

Scenario example1() { return build_scenario(ScenarioConfig{}); }

ClassKFn half_square() {
    return ClassKFn("a1", [](double s) { return 0.5 * s * s; }, 1e3, true);
}

struct LinearProbe {
    ControlSystem sys = ControlSystem::general(
        1, 1, [](const Vec& x, const Vec&) { return Vec{-x[0]}; });
    ScalarField phi;
    Controller coast;

    LinearProbe() {
        phi.dim = 1;
        phi.value = [](const Vec& x) { return 0.5 * x[0] * x[0]; };
        coast = [](const Vec&) {
            return DwellResult{0.5, ControlSchedule::single(0.5, {0.0}), 0, 0, 0, "drift"};
        };
    }
};

}  // namespace

TEST_SUITE("sampled_loop") {

TEST_CASE("a start at the target returns immediately with an empty ledger") {
    const Scenario e1 = example1();
    const Controller ctl = make_scenario_controller(e1, ScenarioConfig{});
    LoopConfig cfg;
    const RunResult rr = run(e1.sys, ctl, e1.phi, {0.0, 0.0}, cfg);
    CHECK(rr.verdict == Verdict::Converged);
    CHECK(rr.ledger.empty());
    CHECK(rr.trajectory.size() == 1);
}

TEST_CASE("planar instance converges with a strictly decreasing ledger") {
    const Scenario e1 = example1();
    const Controller ctl = make_scenario_controller(e1, ScenarioConfig{});
    LoopConfig cfg;
    cfg.stop_phi = 1e-4;
    cfg.max_events = 2000;
    const RunResult rr = run(e1.sys, ctl, e1.phi, {1.0, -1.0}, cfg);
    REQUIRE(rr.verdict == Verdict::Converged);
    REQUIRE(!rr.ledger.empty());
    for (std::size_t i = 0; i < rr.ledger.size(); ++i) {
        const LedgerEvent& e = rr.ledger.events[i];
        CHECK(e.phi_after < e.phi_before);
        CHECK(e.phi_peak <= 1.5 * e.phi_before);
        CHECK(e.dwell <= cfg.sigma);
        if (i > 0) {
            CHECK(e.phi_before < rr.ledger.events[i - 1].phi_before);
            // event times accumulate the dwells exactly
            CHECK(e.t == rr.ledger.events[i - 1].t + rr.ledger.events[i - 1].dwell);
        }
    }
    CHECK(rr.ledger.events.back().phi_after <= cfg.stop_phi);
}

TEST_CASE("controller failure becomes a Failed verdict at event zero") {
    const Scenario e1 = example1();
    const Controller bad = [](const Vec&) -> DwellResult {
        throw NoDecreaseFound("synthetic");
    };
    LoopConfig cfg;
    const RunResult rr = run(e1.sys, bad, e1.phi, {1.0, -1.0}, cfg);
    CHECK(rr.verdict == Verdict::Failed);
    CHECK(rr.ledger.empty());
    CHECK(rr.failure_reason.find("synthetic") != std::string::npos);
}

TEST_CASE("event budget produces a Budget verdict") {
    const Scenario e1 = example1();
    const Controller ctl = make_scenario_controller(e1, ScenarioConfig{});
    LoopConfig cfg;
    cfg.stop_phi = 1e-12;
    cfg.max_events = 1;
    const RunResult rr = run(e1.sys, ctl, e1.phi, {1.0, -1.0}, cfg);
    CHECK(rr.verdict == Verdict::Budget);
    CHECK(rr.ledger.size() == 1);
}

TEST_CASE("verify_ledger checks monotonicity") {
    const Scenario e1 = example1();
    SUBCASE("single decreasing event passes") {
        SampleLedger ledger;
        ledger.events.push_back({0, {1, 0}, 0.5, {}, 1.0, 0.8, 1.0, "drift"});
        const VerifyReport report = verify_ledger(ledger, e1.phi, half_square());
        CHECK(report.monotone_pass);
        CHECK(report.bound_pass);
    }
    SUBCASE("a constructed increase is caught at its index") {
        SampleLedger ledger;
        ledger.events.push_back({0, {}, 0.5, {}, 1.0, 0.9, 1.0, "drift"});
        ledger.events.push_back({0.5, {}, 0.5, {}, 1.1, 0.9, 1.1, "drift"});
        const VerifyReport report = verify_ledger(ledger, e1.phi, half_square());
        CHECK_FALSE(report.monotone_pass);
        CHECK(report.first_monotone_violation == 1);
    }
    SUBCASE("empty ledgers are rejected") {
        CHECK_THROWS_AS(verify_ledger(SampleLedger{}, e1.phi, half_square()),
                        ValidationError);
    }
}

TEST_CASE("verify_ledger certifies the uniform state bound on a real run") {
    const Scenario e1 = example1();
    const Controller ctl = make_scenario_controller(e1, ScenarioConfig{});
    LoopConfig cfg;
    cfg.stop_phi = 1e-4;
    const RunResult rr = run(e1.sys, ctl, e1.phi, {1.0, -1.0}, cfg);
    REQUIRE(rr.verdict == Verdict::Converged);
    const VerifyReport report =
        verify_ledger(rr.ledger, e1.phi, half_square(), 0.5, &rr.trajectory);
    CHECK(report.pass());
    // and the bound itself: |x| <= sqrt(2 * 1.5 * phi(x0))
    const double bound = std::sqrt(2.0 * 1.5 * e1.phi(Vec{1.0, -1.0}));
    for (const Vec& s : rr.trajectory.states) CHECK(norm2(s) <= bound);
}

TEST_CASE("a violated bound is reported") {
    const Scenario e1 = example1();
    SampleLedger ledger;
    ledger.events.push_back({0, {1, 0}, 0.5, {}, 0.5, 0.4, 0.5, "drift"});
    ledger.events.push_back({0.5, {9, 0}, 0.5, {}, 0.4, 0.3, 0.4, "drift"});
    const VerifyReport report = verify_ledger(ledger, e1.phi, half_square());
    CHECK_FALSE(report.bound_pass);
    CHECK(report.first_bound_violation == 1);
}

TEST_CASE("epsilon-delta probe on the contraction recovers delta = eps") {
    LinearProbe probe;
    LoopConfig cfg;
    cfg.stop_phi = 1e-8;
    const auto table =
        epsilon_delta_probe(probe.sys, probe.coast, probe.phi, cfg, {0.5, 1.0}, 6);
    REQUIRE(table.size() == 2);
    for (const EpsDeltaEntry& row : table) {
        CHECK(row.delta > 0.99 * row.eps);   // grid resolution of the bisection
        CHECK(row.delta <= row.eps);
    }
}

TEST_CASE("probe table is nondecreasing in eps") {
    const Scenario e1 = example1();
    const Controller ctl = make_scenario_controller(e1, ScenarioConfig{});
    LoopConfig cfg;
    cfg.stop_phi = 1e-3;
    cfg.max_events = 400;
    const auto table =
        epsilon_delta_probe(e1.sys, ctl, e1.phi, cfg, {0.5, 1.0, 2.0}, 3);
    REQUIRE(table.size() == 3);
    CHECK(table[0].delta <= table[1].delta);
    CHECK(table[1].delta <= table[2].delta);
}

TEST_CASE("zero trials yield an empty table") {
    LinearProbe probe;
    LoopConfig cfg;
    CHECK(epsilon_delta_probe(probe.sys, probe.coast, probe.phi, cfg, {1.0}, 0).empty());
}

TEST_CASE("a non-ascending eps list is rejected") {
    LinearProbe probe;
    LoopConfig cfg;
    CHECK_THROWS_AS(
        epsilon_delta_probe(probe.sys, probe.coast, probe.phi, cfg, {1.0, 0.5}, 2),
        ValidationError);
}

TEST_CASE("a dwell above sigma fails the run") {
    LinearProbe probe;
    LoopConfig cfg;
    cfg.sigma = 0.25;  // the coast controller returns dwell 0.5
    const RunResult rr = run(probe.sys, probe.coast, probe.phi, {1.0}, cfg);
    CHECK(rr.verdict == Verdict::Failed);
    CHECK(rr.failure_reason.find("sigma") != std::string::npos);
}

TEST_CASE("convergence is not tied to the default dwell bound") {
    ScenarioConfig cfg;
    cfg.sigma = 0.2;
    const Scenario e1 = build_scenario(cfg);
    const Controller ctl = make_scenario_controller(e1, cfg);
    LoopConfig lc;
    lc.sigma = 0.2;
    lc.stop_phi = 1e-4;
    lc.max_events = 2000;
    const RunResult rr = run(e1.sys, ctl, e1.phi, {1.0, -1.0}, lc);
    CHECK(rr.verdict == Verdict::Converged);
    for (const LedgerEvent& e : rr.ledger.events) CHECK(e.dwell <= 0.2);
}

TEST_CASE("identical inputs produce identical ledgers") {
    const Scenario e1 = example1();
    const Controller ctl = make_scenario_controller(e1, ScenarioConfig{});
    LoopConfig cfg;
    cfg.stop_phi = 1e-4;
    const RunResult a = run(e1.sys, ctl, e1.phi, {1.0, -1.0}, cfg);
    const RunResult b = run(e1.sys, ctl, e1.phi, {1.0, -1.0}, cfg);
    REQUIRE(a.ledger.size() == b.ledger.size());
    for (std::size_t i = 0; i < a.ledger.size(); ++i) {
        CHECK(a.ledger.events[i].t == b.ledger.events[i].t);
        CHECK(a.ledger.events[i].dwell == b.ledger.events[i].dwell);
        CHECK(a.ledger.events[i].phi_before == b.ledger.events[i].phi_before);
        CHECK(a.ledger.events[i].phi_after == b.ledger.events[i].phi_after);
        CHECK(a.ledger.events[i].phi_peak == b.ledger.events[i].phi_peak);
        CHECK(a.ledger.events[i].x == b.ledger.events[i].x);
    }
    REQUIRE(a.trajectory.size() == b.trajectory.size());
    CHECK(a.trajectory.states.back() == b.trajectory.states.back());
}

}  // TEST_SUITE
