#include "sdstab/sampled_loop.hpp"

#include <algorithm>
#include <cmath>

#include "sdstab/rng.hpp"

namespace sdstab {

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Converged: return "Converged";
        case Verdict::Budget: return "Budget";
        case Verdict::Failed: return "Failed";
    }
    return "?";
}

RunResult run(const ControlSystem& sys, const Controller& controller, const ScalarField& phi,
              const Vec& x0, const LoopConfig& cfg) {
    RunResult rr;
    if (!all_finite(x0)) {
        rr.verdict = Verdict::Failed;
        rr.failure_reason = "x0 not finite";
        return rr;
    }
    rr.trajectory.times.push_back(0.0);
    rr.trajectory.states.push_back(x0);

    Vec x = x0;
    double t = 0.0;
    if (phi(x) <= cfg.stop_phi) {
        rr.verdict = Verdict::Converged;  // already at the target; dwell 0
        return rr;
    }

    for (std::size_t event = 0; event < cfg.max_events; ++event) {
        DwellResult d;
        try {
            d = controller(x);
        } catch (const std::exception& e) {
            rr.verdict = Verdict::Failed;
            rr.failure_reason = std::string("controller: ") + e.what();
            return rr;
        }
        if (d.tau > cfg.sigma * (1.0 + 1e-12)) {
            rr.verdict = Verdict::Failed;
            rr.failure_reason = "controller returned a dwell above sigma";
            return rr;
        }
        Trajectory seg;
        try {
            seg = integrate(sys, x, d.schedule, refined_step(cfg.step, d.schedule));
        } catch (const std::exception& e) {
            rr.verdict = Verdict::Failed;
            rr.failure_reason = std::string("integrator: ") + e.what();
            return rr;
        }

        const double phi_before = phi(x);
        const double phi_after = phi(seg.back_state());
        double phi_peak = phi_before;
        for (const Vec& s : seg.states) phi_peak = std::max(phi_peak, phi(s));

        rr.ledger.events.push_back(
            {t, x, d.tau, d.schedule, phi_before, phi_after, phi_peak, d.label});

        for (std::size_t k = 1; k < seg.size(); ++k) {
            rr.trajectory.times.push_back(t + seg.times[k]);
            rr.trajectory.states.push_back(seg.states[k]);
            rr.trajectory.controls.push_back(seg.controls[k - 1]);
        }

        if (!(phi_after < phi_before)) {
            rr.verdict = Verdict::Failed;
            rr.failure_reason = "no decrease recorded at event " + std::to_string(event);
            return rr;
        }
        if (phi_peak > (1.0 + cfg.slack) * phi_before) {
            rr.verdict = Verdict::Failed;
            rr.failure_reason = "peak bound violated at event " + std::to_string(event);
            return rr;
        }

        t += d.tau;  // event times satisfy t_{i+1} - t_i = dwell_i exactly
        x = seg.back_state();
        if (phi_after <= cfg.stop_phi) {
            rr.verdict = Verdict::Converged;
            return rr;
        }
    }
    rr.verdict = Verdict::Budget;
    return rr;
}

VerifyReport verify_ledger(const SampleLedger& ledger, const ScalarField& phi,
                           const ClassKFn& a1, double slack, const Trajectory* trajectory) {
    if (ledger.empty()) throw ValidationError("ledger", "verify_ledger requires events");
    VerifyReport report;
    report.events_checked = ledger.size();

    for (std::size_t i = 1; i < ledger.size(); ++i) {
        if (!(ledger.events[i].phi_before < ledger.events[i - 1].phi_before)) {
            report.monotone_pass = false;
            report.first_monotone_violation = static_cast<long>(i);
            break;
        }
    }

    const LedgerEvent& first = ledger.events.front();
    const double phi0 = first.x.empty() ? first.phi_before : phi(first.x);
    const double radius = a1.invert((1.0 + slack) * phi0);
    for (std::size_t i = 0; i < ledger.size(); ++i) {
        const Vec& x = ledger.events[i].x;
        if (!x.empty() && norm2(x) > radius) {
            report.bound_pass = false;
            report.first_bound_violation = static_cast<long>(i);
            break;
        }
    }
    if (report.bound_pass && trajectory) {
        for (std::size_t i = 0; i < trajectory->states.size(); ++i) {
            if (norm2(trajectory->states[i]) > radius) {
                report.bound_pass = false;
                report.first_bound_violation = static_cast<long>(i);
                break;
            }
        }
    }
    return report;
}

namespace {

bool trial_stays_within(const ControlSystem& sys, const Controller& controller,
                        const ScalarField& phi, const LoopConfig& cfg, double delta,
                        double eps, std::uint64_t trial_seed) {
    SplitMix64 rng(trial_seed);
    const Vec x0 = random_in_ball(sys.state_dim, delta, rng);
    const RunResult rr = run(sys, controller, phi, x0, cfg);
    if (rr.verdict == Verdict::Failed) return false;
    for (const Vec& s : rr.trajectory.states)
        if (norm2(s) > eps) return false;
    return true;
}

std::vector<EpsDeltaEntry> probe_impl(const ControlSystem& sys, const Controller& controller,
                                      const ScalarField& phi, const LoopConfig& cfg,
                                      const std::vector<double>& eps_list, std::size_t trials,
                                      bool parallel) {
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] > eps_list[i - 1]))
            throw ValidationError("eps_list", "must be strictly ascending");
    std::vector<EpsDeltaEntry> table;
    if (trials == 0) return table;
    for (std::size_t ei = 0; ei < eps_list.size(); ++ei) {
        const double eps = eps_list[ei];
        double lo = 0.0, hi = eps;
        for (int round = 0; round < 12; ++round) {
            const double mid = 0.5 * (lo + hi);
            std::vector<char> ok(trials, 0);
            const std::ptrdiff_t nt = static_cast<std::ptrdiff_t>(trials);
            if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
                for (std::ptrdiff_t tr = 0; tr < nt; ++tr)
                    ok[tr] = trial_stays_within(sys, controller, phi, cfg, mid, eps,
                                                mix_seed(cfg.seed, ei * 100 + round, tr));
            } else {
                for (std::ptrdiff_t tr = 0; tr < nt; ++tr)
                    ok[tr] = trial_stays_within(sys, controller, phi, cfg, mid, eps,
                                                mix_seed(cfg.seed, ei * 100 + round, tr));
            }
            const bool all_ok = std::all_of(ok.begin(), ok.end(), [](char c) { return c; });
            (all_ok ? lo : hi) = mid;
        }
        table.push_back({eps, lo});
    }
    for (std::size_t i = 1; i < table.size(); ++i)
        table[i].delta = std::max(table[i].delta, table[i - 1].delta);
    return table;
}

}  // namespace

std::vector<EpsDeltaEntry> epsilon_delta_probe(const ControlSystem& sys,
                                               const Controller& controller,
                                               const ScalarField& phi, const LoopConfig& cfg,
                                               const std::vector<double>& eps_list,
                                               std::size_t trials) {
    return probe_impl(sys, controller, phi, cfg, eps_list, trials, true);
}

std::vector<EpsDeltaEntry> epsilon_delta_probe_serial(const ControlSystem& sys,
                                                      const Controller& controller,
                                                      const ScalarField& phi,
                                                      const LoopConfig& cfg,
                                                      const std::vector<double>& eps_list,
                                                      std::size_t trials) {
    return probe_impl(sys, controller, phi, cfg, eps_list, trials, false);
}

}  // namespace sdstab
