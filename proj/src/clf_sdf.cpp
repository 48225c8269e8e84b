#include "sdstab/clf_sdf.hpp"

#include <cmath>
#include <sstream>

namespace sdstab {

const char* label(CaseVariant v) {
    switch (v) {
        case CaseVariant::ControlAuthority: return "authority";
        case CaseVariant::DriftDecrease: return "drift";
        case CaseVariant::BracketManeuver: return "bracket";
    }
    return "?";
}

double classification_tol(const Vec& x, double scale) { return scale * (1.0 + norm2(x)); }

namespace {

void require_affine(const ControlSystem& sys) {
    if (sys.shape != SystemShape::Affine)
        throw ValidationError("system", "synthesis requires an affine single-input system");
}

}  // namespace

CaseTag classify(const ControlSystem& sys, const ScalarField& phi, const Vec& x, double tol) {
    require_affine(sys);
    const double f_phi = lie_derivative(sys.f, phi, x);
    const double g_phi = lie_derivative(sys.g, phi, x);
    // The constant-input formula is self-sufficient whenever g.phi != 0, so
    // classification does not consult the sign of f.phi in that case.
    if (std::abs(g_phi) > tol) return {CaseVariant::ControlAuthority, f_phi, g_phi, 0.0};
    const double b_phi = lie_derivative(bracket(sys.f, sys.g), phi, x);
    if (f_phi < -tol) return {CaseVariant::DriftDecrease, f_phi, g_phi, b_phi};
    if (std::abs(f_phi) <= tol && std::abs(b_phi) > tol)
        return {CaseVariant::BracketManeuver, f_phi, g_phi, b_phi};
    std::ostringstream os;
    os << "stabilizability implication fails at state (f.phi=" << f_phi
       << ", g.phi=" << g_phi << ", [f,g].phi=" << b_phi << ")";
    throw CLFConditionViolated(os.str(), f_phi, g_phi, b_phi);
}

double case1_control(const ControlSystem& sys, const ScalarField& phi, const Vec& x,
                     double tol) {
    require_affine(sys);
    const double f_phi = lie_derivative(sys.f, phi, x);
    const double g_phi = lie_derivative(sys.g, phi, x);
    if (std::abs(g_phi) <= tol)
        throw AuthorityTooSmall("case1_control: |g.phi| below tolerance");
    return (-1.0 - f_phi) / g_phi;
}

ManeuverParams maneuver_solve(const ControlSystem& sys, const ScalarField& phi, const Vec& x,
                              double w, double c, double tol) {
    require_affine(sys);
    if (!(c > 0.0)) throw ValidationError("c", "decrease margin must be > 0");
    const double b_gf = lie_derivative(bracket(sys.g, sys.f), phi, x);
    if (std::abs(b_gf) <= tol)
        throw BracketTooSmall("maneuver_solve: |[g,f].phi| below tolerance");

    const VectorField& f = sys.f;
    const VectorField& g = sys.g;
    const Vec v = axpy(scale(2.0, f(x)), w, g(x));  // 2f + w g
    const double quad = quadratic_form(v, phi.hess(x), v);
    const double A = quad
                     + 4.0 * field_product_phi(f, f, phi, x)
                     + w * field_product_phi(g, f, phi, x)
                     + 3.0 * w * field_product_phi(f, g, phi, x)
                     + w * w * field_product_phi(g, g, phi, x);
    const double u = (-c - A) / (2.0 * b_gf);
    return {w, c, u, A};
}

Vec maneuver_rollout(const ControlSystem& sys, const Vec& x0, const ManeuverParams& params,
                     double t, double step) {
    if (t == 0.0) return x0;
    if (!(t > 0.0)) throw ValidationError("t", "phase duration must be >= 0");
    ControlSchedule sched;
    sched.append(t, {params.u});
    sched.append(t, {params.w - params.u});
    return endpoint(sys, x0, sched, step);
}

namespace {

ControlSchedule candidate_schedule(const CaseTag& tag, double tau, double u1,
                                   const ManeuverParams& mp) {
    ControlSchedule sched;
    switch (tag.variant) {
        case CaseVariant::ControlAuthority:
            sched.append(tau, {u1});
            break;
        case CaseVariant::DriftDecrease:
            sched.append(tau, {0.0});
            break;
        case CaseVariant::BracketManeuver:
            sched.append(0.5 * tau, {mp.u});
            sched.append(0.5 * tau, {mp.w - mp.u});
            break;
    }
    return sched;
}

}  // namespace

DwellResult dwell_search(const ControlSystem& sys, const ScalarField& phi, const Vec& x,
                         double sigma, const CaseTag& tag, double step,
                         const SynthesisOptions& opts) {
    require_affine(sys);
    if (!(sigma > 0.0)) throw ValidationError("sigma", "dwell bound must be > 0");

    const double tol = classification_tol(x, opts.tol_scale);
    double u1 = 0.0;
    ManeuverParams mp{0, 1, 0, 0};
    if (tag.variant == CaseVariant::ControlAuthority) {
        u1 = case1_control(sys, phi, x, tol);
    } else if (tag.variant == CaseVariant::BracketManeuver) {
        // The margin must be commensurate with what the bracket can deliver
        // at moderate control effort: an unclamped c_ref makes |u| = 1+|x|
        // exactly, and the cap keeps the margin from outrunning the state.
        const double b_gf = lie_derivative(bracket(sys.g, sys.f), phi, x);
        const double big_a = maneuver_solve(sys, phi, x, opts.maneuver_w, 1.0, tol).A;
        const double nx = norm2(x);
        const double c_cap = opts.maneuver_c * (1.0 + nx * nx);
        const double c_ref = 2.0 * std::abs(b_gf) * (1.0 + nx) - big_a;
        const double c_eff = std::min(c_cap, std::max(c_ref, 1e-6 * (1.0 + nx * nx)));
        mp = maneuver_solve(sys, phi, x, opts.maneuver_w, c_eff, tol);
    }

    const double phi_start = phi(x);
    double tau = sigma;
    for (int halving = 0; halving <= opts.max_halvings; ++halving, tau *= 0.5) {
        const ControlSchedule sched = candidate_schedule(tag, tau, u1, mp);
        const double h = refined_step(step, sched);
        Trajectory traj;
        try {
            traj = integrate(sys, x, sched, h);
        } catch (const BlowupError&) {
            continue;  // unstable at this dwell; halve and retry
        }
        double phi_peak = phi_start;
        for (const Vec& s : traj.states) phi_peak = std::max(phi_peak, phi(s));
        const double phi_end = phi(traj.back_state());
        const bool decreased = phi_end < phi_start - opts.margin_mu * phi_start * tau * tau;
        const bool bounded = phi_peak <= (1.0 + opts.slack) * phi_start;
        if (decreased && bounded)
            return {tau, sched, phi_start, phi_end, phi_peak, label(tag.variant)};
    }
    throw NoDecreaseFound("dwell_search: no accepted dwell after max halvings");
}

Controller make_clf_controller(const ControlSystem& sys, const ScalarField& phi, double sigma,
                               double step, const SynthesisOptions& opts) {
    require_affine(sys);
    return [sys, phi, sigma, step, opts](const Vec& x) {
        const double tol = classification_tol(x, opts.tol_scale);
        const CaseTag tag = classify(sys, phi, x, tol);

        std::vector<CaseTag> modes{tag};
        if (tag.variant == CaseVariant::ControlAuthority) {
            if (tag.f_phi < -tol)
                modes.push_back({CaseVariant::DriftDecrease, tag.f_phi, tag.g_phi, 0.0});
            const double b_phi = lie_derivative(bracket(sys.f, sys.g), phi, x);
            if (std::abs(b_phi) > tol)
                modes.push_back({CaseVariant::BracketManeuver, tag.f_phi, tag.g_phi, b_phi});
        }

        bool found = false;
        DwellResult best;
        for (const CaseTag& mode : modes) {
            try {
                DwellResult d = dwell_search(sys, phi, x, sigma, mode, step, opts);
                if (!found || d.phi_end < best.phi_end) {
                    best = std::move(d);
                    found = true;
                }
            } catch (const NoDecreaseFound&) {
            } catch (const BracketTooSmall&) {
            }
        }
        if (found) return best;
        // Equality tolerances can misread states straddling the singular
        // locus; reclassify once at a coarser tolerance before giving up.
        const CaseTag coarse = classify(sys, phi, x, tol * opts.tol_escalation);
        return dwell_search(sys, phi, x, sigma, coarse, step, opts);
    };
}

}  // namespace sdstab
