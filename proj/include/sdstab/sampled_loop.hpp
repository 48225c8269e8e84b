#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdstab/classk.hpp"
#include "sdstab/clf_sdf.hpp"
#include "sdstab/integrate.hpp"

namespace sdstab {

struct LoopConfig {
    double sigma = 0.5;        // upper bound on any dwell
    double stop_phi = 1e-6;    // terminate once phi falls to this level
    std::size_t max_events = 10000;
    double step = 1e-3;        // integrator base step
    double slack = 0.5;        // ledger peak bound factor (1 + slack)
    std::uint64_t seed = 1;    // for the probe's random draws
};

enum class Verdict { Converged, Budget, Failed };
const char* to_string(Verdict v);

/// One sampling event: the state sampled at t, the dwell the controller
/// chose, the schedule held over [t, t + dwell), and the certified phi values.
struct LedgerEvent {
    double t;
    Vec x;
    double dwell;
    ControlSchedule schedule;
    double phi_before, phi_after, phi_peak;
    std::string label;
};

struct SampleLedger {
    std::vector<LedgerEvent> events;
    bool empty() const { return events.empty(); }
    std::size_t size() const { return events.size(); }
};

struct RunResult {
    Trajectory trajectory;
    SampleLedger ledger;
    Verdict verdict = Verdict::Failed;
    std::string failure_reason;
};

/// The sampled-data closed loop: at each event the controller picks a dwell
/// and schedule from the sampled state; event times satisfy
/// t_{i+1} - t_i = dwell_i exactly. Controller and integrator failures become
/// Failed verdicts, never exceptions. A start already at or below stop_phi
/// returns immediately with an empty ledger (the zero-dwell convention at
/// the target).
RunResult run(const ControlSystem& sys, const Controller& controller, const ScalarField& phi,
              const Vec& x0, const LoopConfig& cfg);

struct VerifyReport {
    bool monotone_pass = true;
    long first_monotone_violation = -1;
    bool bound_pass = true;
    long first_bound_violation = -1;
    std::size_t events_checked = 0;
    bool pass() const { return monotone_pass && bound_pass; }
};

/// Checks (a) strict decrease of phi_before across events and (b) the uniform
/// state bound |x| <= a1^{-1}((1+slack) * phi_before[0]) over the recorded
/// event states (and the full trajectory when supplied), given a lower
/// envelope a1 with a1(|x|) <= phi(x).
VerifyReport verify_ledger(const SampleLedger& ledger, const ScalarField& phi,
                           const ClassKFn& a1, double slack = 0.5,
                           const Trajectory* trajectory = nullptr);

struct EpsDeltaEntry {
    double eps;
    double delta;
};

/// For each eps, bisects for the largest delta <= eps such that `trials`
/// random starts with |x0| <= delta keep |x(t)| <= eps over the whole run.
/// Draws are seeded from cfg.seed; the returned table is post-processed to be
/// nondecreasing. trials = 0 yields an empty table.
std::vector<EpsDeltaEntry> epsilon_delta_probe(const ControlSystem& sys,
                                               const Controller& controller,
                                               const ScalarField& phi, const LoopConfig& cfg,
                                               const std::vector<double>& eps_list,
                                               std::size_t trials);
std::vector<EpsDeltaEntry> epsilon_delta_probe_serial(const ControlSystem& sys,
                                                      const Controller& controller,
                                                      const ScalarField& phi,
                                                      const LoopConfig& cfg,
                                                      const std::vector<double>& eps_list,
                                                      std::size_t trials);

}  // namespace sdstab
