#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sdstab/rng.hpp"
#include "sdstab/scenarios.hpp"

using namespace sdstab;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct Row {
    std::string name;
    std::size_t items;
    double serial_ms, parallel_ms;
    bool match;
};

void print_table(const std::vector<Row>& rows) {
    std::printf("%-28s %8s %12s %12s %9s %7s\n", "kernel", "items", "serial ms",
                "parallel ms", "speedup", "match");
    for (const Row& r : rows)
        std::printf("%-28s %8zu %12.1f %12.1f %8.2fx %7s\n", r.name.c_str(), r.items,
                    r.serial_ms, r.parallel_ms, r.serial_ms / r.parallel_ms,
                    r.match ? "yes" : "NO");
}

/// Strip analytic derivatives so every grid point pays the full
/// finite-difference cost.
ScalarField fd_only(const ScalarField& phi) {
    ScalarField f;
    f.dim = phi.dim;
    f.value = phi.value;
    return f;
}

VectorField fd_only(const VectorField& v) {
    VectorField f;
    f.dim = v.dim;
    f.eval = v.eval;
    return f;
}

Row bench_clf_grid(std::size_t n) {
    ScenarioConfig cfg;
    const Scenario scn = build_scenario(cfg);
    ControlSystem sys = scn.sys;
    sys.f = fd_only(sys.f);
    sys.g = fd_only(sys.g);
    const ScalarField phi = fd_only(scn.phi);
    const std::vector<Vec> grid = annulus_grid(0.2, 3.0, n);
    // a wide tolerance drives most points through the finite-difference
    // bracket evaluation, the expensive branch
    const double tol = 0.5;

    const double t0 = now_ms();
    const ClfReport serial = check_clf_implication_serial(sys, phi, grid, tol);
    const double t1 = now_ms();
    const ClfReport par = check_clf_implication(sys, phi, grid, tol);
    const double t2 = now_ms();
    const bool match = serial.violations.size() == par.violations.size();
    return {"clf grid (fd fields)", n, t1 - t0, t2 - t1, match};
}

Row bench_rank_grid(std::size_t n) {
    ScenarioConfig cfg;
    cfg.scenario = "example2";
    const Scenario scn = build_scenario(cfg);
    SplitMix64 rng(99);
    std::vector<Vec> grid;
    while (grid.size() < n) grid.push_back(random_in_annulus(2, 0.1, 3.0, rng));

    const double t0 = now_ms();
    const RankReport serial = check_rank_conditions_serial(scn.sys, 1, *scn.gains, grid);
    const double t1 = now_ms();
    const RankReport par = check_rank_conditions(scn.sys, 1, *scn.gains, grid);
    const double t2 = now_ms();
    const bool match = serial.checks == par.checks &&
                       serial.violations.size() == par.violations.size();
    return {"rank conditions grid", n, t1 - t0, t2 - t1, match};
}

Row bench_batch_synthesis(std::size_t n) {
    ScenarioConfig cfg;
    cfg.scenario = "example2";
    const Scenario scn = build_scenario(cfg);
    SplitMix64 rng(7);
    std::vector<Vec> states;
    while (states.size() < n) states.push_back(random_in_annulus(2, 0.2, 2.5, rng));

    // serial search inside: this row measures batch-level parallelism over
    // independent per-state synthesis calls
    auto synth = [&](const Vec& xi) {
        const GainSetup& setup = *scn.gains;
        const Regime reg =
            classify_regime(setup, {xi[0]}, {xi[1]}, regime_band(setup, {xi[1]}));
        const ActiveKind kind = reg.variant == RegimeVariant::SteerY ? ActiveKind::SteerY
                                                                     : ActiveKind::SteerX;
        return primitive_search_serial(scn.sys, 1, setup, kind, {xi[0]}, {xi[1]}, 0.5,
                                       1e-3);
    };

    std::vector<double> taus_serial(n), taus_par(n);
    const double t0 = now_ms();
    for (std::size_t i = 0; i < n; ++i) taus_serial[i] = synth(states[i]).tau;
    const double t1 = now_ms();
    const std::ptrdiff_t np = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < np; ++i) taus_par[i] = synth(states[i]).tau;
    const double t2 = now_ms();
    return {"per-state synthesis batch", n, t1 - t0, t2 - t1, taus_serial == taus_par};
}

Row bench_probe(std::size_t trials) {
    ControlSystem sys = ControlSystem::general(
        1, 1, [](const Vec& x, const Vec&) { return Vec{-x[0]}; });
    ScalarField phi;
    phi.dim = 1;
    phi.value = [](const Vec& x) { return 0.5 * x[0] * x[0]; };
    Controller coast = [](const Vec&) {
        ControlSchedule sched = ControlSchedule::single(0.5, {0.0});
        return DwellResult{0.5, sched, 0.0, 0.0, 0.0, "drift"};
    };
    LoopConfig lc;
    lc.stop_phi = 1e-8;
    const std::vector<double> eps{0.25, 0.5, 1.0};

    const double t0 = now_ms();
    const auto serial = epsilon_delta_probe_serial(sys, coast, phi, lc, eps, trials);
    const double t1 = now_ms();
    const auto par = epsilon_delta_probe(sys, coast, phi, lc, eps, trials);
    const double t2 = now_ms();
    bool match = serial.size() == par.size();
    for (std::size_t i = 0; match && i < serial.size(); ++i)
        match = serial[i].delta == par[i].delta;
    return {"epsilon-delta probe", trials, t1 - t0, t2 - t1, match};
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t scale = 1;
    if (argc > 1) scale = std::stoul(argv[1]);
#ifdef _OPENMP
    std::printf("OpenMP with %d threads\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; 'parallel' columns run serial code\n");
#endif
    std::vector<Row> rows;
    rows.push_back(bench_clf_grid(20000 * scale));
    rows.push_back(bench_rank_grid(2000 * scale));
    rows.push_back(bench_batch_synthesis(256 * scale));
    rows.push_back(bench_probe(32 * scale));
    print_table(rows);
    return 0;
}
