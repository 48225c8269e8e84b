#pragma once

#include <functional>
#include <string>

#include "sdstab/integrate.hpp"

namespace sdstab {

enum class CaseVariant {
    ControlAuthority,  // |g.phi| > tol: a constant input pins dphi/dt = -1
    DriftDecrease,     // g.phi ~ 0, f.phi < -tol: coast with zero input
    BracketManeuver,   // g.phi ~ 0, f.phi ~ 0, |[f,g].phi| > tol: two-phase motion
};

const char* label(CaseVariant v);

/// Classification of a state together with the three scalar witnesses.
struct CaseTag {
    CaseVariant variant;
    double f_phi, g_phi, bracket_phi;
};

/// Solved two-phase maneuver: drive with u for one phase, then w - u for an
/// equal phase. u is solved so that A + 2u([g,f].phi) = -c holds exactly.
struct ManeuverParams {
    double w;  // free constant (sum of the two phase controls)
    double c;  // decrease margin, > 0
    double u;  // solved phase-one control
    double A;  // assembled non-u second-order terms
};

/// An accepted dwell: a schedule of total duration tau <= sigma together with
/// the certified phi values at the interval's start, end and peak.
struct DwellResult {
    double tau;
    ControlSchedule schedule;
    double phi_start, phi_end, phi_peak;
    std::string label;
};

struct SynthesisOptions {
    double tol_scale = 1e-7;  // classification tolerance tol_scale*(1+|x|)
    double slack = 0.5;       // peak acceptance bound (1+slack)*phi_start
    double margin_mu = 1e-4;  // decrease margin mu*phi_start*tau^2
    double maneuver_w = 0.0;
    double maneuver_c = 1.0;  // rescaled to c*(1+|x|^2) at synthesis time
    int max_halvings = 40;
    double tol_escalation = 1e3;  // reclassification factor after a failed search
};

/// Relative equality tolerance for the g.phi ~ 0 and f.phi ~ 0 tests.
double classification_tol(const Vec& x, double scale = 1e-7);

/// One of the three cases, or CLFConditionViolated carrying the witnesses.
CaseTag classify(const ControlSystem& sys, const ScalarField& phi, const Vec& x, double tol);

/// u = (-1 - f.phi) / g.phi, forcing dphi/dt = -1 along f + u g at x.
double case1_control(const ControlSystem& sys, const ScalarField& phi, const Vec& x,
                     double tol);

/// Assembles the second-order budget A and solves for the phase-one control.
ManeuverParams maneuver_solve(const ControlSystem& sys, const ScalarField& phi, const Vec& x,
                              double w, double c, double tol);

/// Endpoint of the two-phase motion: hold u for duration t, then w - u for t.
/// At t = 0 the schedule is empty and the endpoint is x0.
Vec maneuver_rollout(const ControlSystem& sys, const Vec& x0, const ManeuverParams& params,
                     double t, double step);

/// Halves the dwell from sigma until strict decrease (with margin) and the
/// peak bound both hold on the simulated candidate schedule.
DwellResult dwell_search(const ControlSystem& sys, const ScalarField& phi, const Vec& x,
                         double sigma, const CaseTag& tag, double step,
                         const SynthesisOptions& opts = {});

using Controller = std::function<DwellResult(const Vec&)>;

/// Per-state synthesizer for affine systems. Classifies the state, then
/// dwell-searches every mode that is certifiable there -- the classified
/// case, the zero-input coast when f.phi < 0, and the maneuver when the
/// bracket witness is healthy -- and returns the result with the lowest
/// certified phi_end. The constant-input case pins dphi/dt = -1, which near
/// the g.phi = 0 locus (control ~ 1/g.phi) collapses the accepted dwell;
/// the alternatives keep per-event progress bounded away from zero there.
Controller make_clf_controller(const ControlSystem& sys, const ScalarField& phi, double sigma,
                               double step, const SynthesisOptions& opts = {});

}  // namespace sdstab
