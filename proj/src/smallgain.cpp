#include "sdstab/smallgain.hpp"

#include <algorithm>
#include <cmath>

#include "sdstab/integrate.hpp"

namespace sdstab {

double GainSetup::lower_chain(double s) const { return b2(Gamma2(a1.invert(s))); }
double GainSetup::upper_chain(double s) const { return b1(gamma1(a2.invert(s))); }

const char* label(RegimeVariant v) {
    switch (v) {
        case RegimeVariant::SteerX: return "steer_x";
        case RegimeVariant::SteerY: return "steer_y";
        case RegimeVariant::Boundary: return "boundary";
    }
    return "?";
}

namespace {

struct GainPointResult {
    bool violated = false;
    double lhs = 0, rhs = 0;
};

GainPointResult gain_point(const GainSetup& setup, double s) {
    GainPointResult r;
    r.lhs = setup.upper_chain(s);
    r.rhs = setup.lower_chain(s);
    r.violated = !(r.lhs - r.rhs > 0.0);
    return r;
}

SmallGainReport assemble_gain_report(const GainSetup& setup, const std::vector<double>& grid,
                                     const std::vector<GainPointResult>& results) {
    SmallGainReport report;
    report.points = grid.size();
    for (std::size_t i = 0; i < results.size(); ++i)
        if (results[i].violated)
            report.violations.push_back({grid[i], results[i].lhs, results[i].rhs});
    if (setup.gamma1_bounded() && !grid.empty()) {
        report.limit_checked = true;
        report.r = setup.lower_chain(1e6);
        const double s_max = *std::max_element(grid.begin(), grid.end());
        const double margin = 1e-9 * (1.0 + std::abs(report.r));
        report.limit_ok = setup.upper_chain(s_max) > report.r + margin;
    }
    return report;
}

}  // namespace

SmallGainReport check_small_gain_serial(const GainSetup& setup,
                                        const std::vector<double>& grid) {
    std::vector<GainPointResult> results(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) results[i] = gain_point(setup, grid[i]);
    return assemble_gain_report(setup, grid, results);
}

SmallGainReport check_small_gain(const GainSetup& setup, const std::vector<double>& grid) {
    std::vector<GainPointResult> results(grid.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < n; ++i) results[i] = gain_point(setup, grid[i]);
    return assemble_gain_report(setup, grid, results);
}

void build_interpolants(GainSetup& setup, const std::vector<double>& probe_grid) {
    // Self-contained copies: the built interpolants must outlive the setup
    // object they were derived from.
    const ClassKFn a1 = setup.a1, a2 = setup.a2, b1 = setup.b1, b2 = setup.b2;
    const ClassKFn g1 = setup.gamma1, G2 = setup.Gamma2;
    auto lower = [a1, b2, G2](double v) { return b2(G2(a1.invert(v))); };
    auto upper = [a2, b1, g1](double v) { return b1(g1(a2.invert(v))); };
    const double hint = probe_grid.empty() ? 1.0
                                           : *std::max_element(probe_grid.begin(),
                                                               probe_grid.end());
    const bool unbounded = setup.gamma1.is_unbounded() && setup.b1.is_unbounded();
    ClassKFn ell1("ell1", [lower, upper](double v) {
        const double lo = lower(v);
        return lo + (upper(v) - lo) / 3.0;
    }, hint, unbounded);
    ClassKFn ell2("ell2", [lower, upper](double v) {
        const double lo = lower(v);
        return lo + 2.0 * (upper(v) - lo) / 3.0;
    }, hint, unbounded);

    for (double v : probe_grid) {
        if (!(v > 0.0)) continue;
        const double lo = lower(v), l1 = ell1(v), l2 = ell2(v), up = upper(v);
        if (!(lo < l1 && l1 < l2 && l2 < up))
            throw ChainViolation("interpolant chain not strictly ordered at s=" +
                                 std::to_string(v));
    }
    setup.ell1 = std::move(ell1);
    setup.ell2 = std::move(ell2);
    if (!unbounded) {
        // Numeric limits; R1 is the level of the larger interpolant so that
        // the threshold ordering R1 > R2 > r holds.
        setup.r = setup.lower_chain(1e6);
        setup.R2 = (*setup.ell1)(1e6);
        setup.R1 = (*setup.ell2)(1e6);
    } else {
        setup.r = setup.R1 = setup.R2 = std::numeric_limits<double>::infinity();
    }
}

double psi(const GainSetup& setup, int i, const Vec& x, const Vec& y) {
    if (i != 1 && i != 2) throw ValidationError("i", "interpolant index must be 1 or 2");
    const ClassKFn* ell = (i == 1) ? (setup.ell1 ? &*setup.ell1 : nullptr)
                                   : (setup.ell2 ? &*setup.ell2 : nullptr);
    if (!ell) throw ValidationError("ell", "build_interpolants must run first");
    return std::max(setup.W(y), (*ell)(setup.V(x)));
}

double regime_band(const GainSetup& setup, const Vec& y, double scale) {
    return scale * (1.0 + setup.W(y));
}

Regime classify_regime(const GainSetup& setup, const Vec& x, const Vec& y, double band) {
    if (!setup.ell1) throw ValidationError("ell1", "build_interpolants must run first");
    const double w = setup.W(y);
    const double l1 = (*setup.ell1)(setup.V(x));
    if (std::abs(w - l1) <= band) return {RegimeVariant::Boundary, w, l1};
    return {w < l1 ? RegimeVariant::SteerX : RegimeVariant::SteerY, w, l1};
}

namespace {

Vec x_part(const Vec& xi, std::size_t n) { return Vec(xi.begin(), xi.begin() + n); }
Vec y_part(const Vec& xi, std::size_t n) { return Vec(xi.begin() + n, xi.end()); }

Vec pack(const Vec& x, const Vec& y) {
    Vec xi = x;
    xi.insert(xi.end(), y.begin(), y.end());
    return xi;
}

/// Fields x -> A_i(x, y0) on the x-slice (y frozen).
VectorField x_slice_field(const VectorField& full, std::size_t n, const Vec& y0) {
    VectorField f;
    f.dim = n;
    f.eval = [full, n, y0](const Vec& x) {
        const Vec v = full.eval(pack(x, y0));
        return Vec(v.begin(), v.begin() + n);
    };
    return f;
}

/// Fields y -> B_i(x0, y) on the y-slice (x frozen).
VectorField y_slice_field(const VectorField& full, std::size_t n, const Vec& x0) {
    VectorField f;
    f.dim = full.dim - n;
    f.eval = [full, n, x0](const Vec& y) {
        const Vec v = full.eval(pack(x0, y));
        return Vec(v.begin() + n, v.end());
    };
    return f;
}

/// Generators plus pairwise brackets plus brackets of those with generators.
std::vector<VectorField> bracket_closure_depth2(const std::vector<VectorField>& gens) {
    std::vector<VectorField> out = gens;
    std::vector<VectorField> level1;
    for (std::size_t i = 0; i < gens.size(); ++i)
        for (std::size_t j = i + 1; j < gens.size(); ++j)
            level1.push_back(bracket(gens[i], gens[j]));
    for (const VectorField& b : level1) out.push_back(b);
    for (const VectorField& b : level1)
        for (const VectorField& g : gens) out.push_back(bracket(g, b));
    return out;
}

std::size_t span_rank(const std::vector<VectorField>& fields, const Vec& p) {
    std::vector<Vec> rows;
    rows.reserve(fields.size());
    for (const VectorField& f : fields) rows.push_back(f.eval(p));
    return numeric_rank(rows, p.size(), 1e-8);
}

struct RankPointResult {
    std::size_t checks = 0;
    std::vector<RankViolation> violations;
};

RankPointResult rank_point(const ControlSystem& sys, std::size_t n, const GainSetup& setup,
                           const Vec& xi, std::size_t index) {
    RankPointResult out;
    const std::size_t m = sys.state_dim - n;
    const Vec x = x_part(xi, n);
    const Vec y = y_part(xi, n);
    const double nx = norm2(x), ny = norm2(y);

    if (nx > 0.0 && ny < setup.gamma1(nx)) {
        ++out.checks;
        std::vector<VectorField> gens;
        for (const VectorField& f : sys.fields) gens.push_back(x_slice_field(f, n, y));
        const std::size_t rank = span_rank(bracket_closure_depth2(gens), x);
        if (rank < n) out.violations.push_back({index, xi, "x_fields", rank, n});
    }
    if (ny > 0.0 && ny > setup.Gamma2(nx)) {
        ++out.checks;
        std::vector<VectorField> gens;
        for (const VectorField& f : sys.fields) gens.push_back(y_slice_field(f, n, x));
        const std::size_t rank = span_rank(bracket_closure_depth2(gens), y);
        if (rank < m) out.violations.push_back({index, xi, "y_fields", rank, m});
    }
    if (setup.Gamma2(nx) < ny && ny < setup.gamma1(nx)) {
        ++out.checks;
        const std::size_t rank = span_rank(bracket_closure_depth2(sys.fields), xi);
        if (rank < n + m) out.violations.push_back({index, xi, "full_fields", rank, n + m});
    }
    return out;
}

RankReport assemble_rank_report(const std::vector<Vec>& grid,
                                const std::vector<RankPointResult>& results) {
    RankReport report;
    report.points = grid.size();
    for (const RankPointResult& r : results) {
        report.checks += r.checks;
        for (const RankViolation& v : r.violations) report.violations.push_back(v);
    }
    return report;
}

void require_driftless(const ControlSystem& sys) {
    if (sys.shape != SystemShape::Driftless)
        throw ValidationError("system", "rank/primitive machinery requires a driftless system");
}

}  // namespace

RankReport check_rank_conditions_serial(const ControlSystem& sys, std::size_t x_dim,
                                        const GainSetup& setup, const std::vector<Vec>& grid) {
    require_driftless(sys);
    std::vector<RankPointResult> results(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        results[i] = rank_point(sys, x_dim, setup, grid[i], i);
    return assemble_rank_report(grid, results);
}

RankReport check_rank_conditions(const ControlSystem& sys, std::size_t x_dim,
                                 const GainSetup& setup, const std::vector<Vec>& grid) {
    require_driftless(sys);
    std::vector<RankPointResult> results(grid.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        results[i] = rank_point(sys, x_dim, setup, grid[i], static_cast<std::size_t>(i));
    return assemble_rank_report(grid, results);
}

// ---------------------------------------------------------------------------
// Motion-primitive search
// ---------------------------------------------------------------------------

namespace {

struct Candidate {
    ControlSchedule sched;
    std::size_t enum_idx;
    double score = 0.0;  // frozen-system decrease, for ranking only
};

Vec unit_control(std::size_t l, std::size_t i, double amp) {
    Vec u(l, 0.0);
    u[i] = amp;
    return u;
}

std::vector<Candidate> enumerate_candidates(std::size_t l, double tau,
                                            const std::vector<double>& amplitudes) {
    std::vector<Candidate> cands;
    std::size_t idx = 0;
    // signed directions in fixed order: +e0, -e0, +e1, -e1, ...
    std::vector<Vec> dirs;
    for (std::size_t i = 0; i < l; ++i) {
        dirs.push_back(unit_control(l, i, 1.0));
        dirs.push_back(unit_control(l, i, -1.0));
    }
    for (double a : amplitudes)
        for (const Vec& d : dirs)
            cands.push_back({ControlSchedule::single(tau, scale(a, d)), idx++, 0.0});
    for (double a : amplitudes)
        for (std::size_t p = 0; p < dirs.size(); ++p)
            for (std::size_t q = 0; q < dirs.size(); ++q) {
                if (p == q) continue;
                ControlSchedule s;
                s.append(0.5 * tau, scale(a, dirs[p]));
                s.append(0.5 * tau, scale(a, dirs[q]));
                cands.push_back({std::move(s), idx++, 0.0});
            }
    // four-segment bracket motions: e_i, e_j, -e_i, -e_j; ordered pairs give
    // both bracket directions
    for (double a : amplitudes)
        for (std::size_t i = 0; i < l; ++i)
            for (std::size_t j = 0; j < l; ++j) {
                if (i == j) continue;
                ControlSchedule s;
                s.append(0.25 * tau, unit_control(l, i, a));
                s.append(0.25 * tau, unit_control(l, j, a));
                s.append(0.25 * tau, unit_control(l, i, -a));
                s.append(0.25 * tau, unit_control(l, j, -a));
                cands.push_back({std::move(s), idx++, 0.0});
            }
    return cands;
}

double active_value(ActiveKind kind, double v, double w, double l1_of_v) {
    switch (kind) {
        case ActiveKind::SteerX: return v;
        case ActiveKind::SteerY: return w;
        case ActiveKind::Boundary: return std::max(w, l1_of_v);
    }
    return 0.0;
}

struct EvalOutcome {
    bool accepted = false;
    double act_start = 0, act_end = 0, act_peak = 0;
};

/// Simulate one candidate on the given system and test decrease, boundedness
/// and regime maintenance at every recorded sample.
EvalOutcome evaluate_candidate(const ControlSystem& sys, std::size_t n, const GainSetup& setup,
                               ActiveKind kind, const Vec& xi0, const ControlSchedule& sched,
                               double step, double tau, const PrimitiveOptions& opts) {
    EvalOutcome out;
    const ClassKFn& ell1 = *setup.ell1;
    Trajectory traj;
    try {
        traj = integrate(sys, xi0, sched, refined_step(step, sched));
    } catch (const BlowupError&) {
        return out;
    }

    const Vec x0v = x_part(xi0, n), y0v = y_part(xi0, n);
    const double v_start = setup.V(x0v);
    const double w_start = setup.W(y0v);
    const double l1_start = ell1(v_start);
    const double psi_start = std::max(w_start, l1_start);
    const double bound = 1.0 + opts.slack;

    double v_end = 0, w_end = 0, act_peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const Vec xs = x_part(traj.states[k], n);
        const Vec ys = y_part(traj.states[k], n);
        const double v = setup.V(xs);
        const double w = setup.W(ys);
        const double l1v = ell1(v);
        // merged-candidate excursion cap keeps the loop ledger bound valid
        if (std::max(w, l1v) > bound * psi_start) return out;
        switch (kind) {
            case ActiveKind::SteerX:
                if (v > bound * v_start) return out;
                if (!(w < l1v)) return out;  // regime maintenance, strict
                break;
            case ActiveKind::SteerY:
                if (w > bound * w_start) return out;
                if (!(l1v < w)) return out;
                break;
            case ActiveKind::Boundary:
                if (v > bound * v_start || w > bound * w_start) return out;
                break;
        }
        act_peak = std::max(act_peak, active_value(kind, v, w, l1v));
        if (k + 1 == traj.states.size()) {
            v_end = v;
            w_end = w;
        }
    }

    const double mu = opts.margin_mu;
    bool decreased = false;
    switch (kind) {
        case ActiveKind::SteerX:
            decreased = v_end < v_start - mu * v_start * tau * tau;
            break;
        case ActiveKind::SteerY: {
            double margin = mu * w_start * tau * tau;
            if (setup.gamma1_bounded() && w_start >= setup.r)
                margin = std::max(margin, std::max(opts.q_floor, opts.q_slope * w_start));
            decreased = w_end < w_start - margin;
            break;
        }
        case ActiveKind::Boundary:
            decreased = (v_end < v_start - mu * v_start * tau * tau) &&
                        (w_end < w_start - mu * w_start * tau * tau);
            break;
    }
    if (!decreased) return out;

    out.accepted = true;
    out.act_start = active_value(kind, v_start, w_start, l1_start);
    out.act_end = active_value(kind, v_end, w_end, ell1(v_end));
    out.act_peak = act_peak;
    return out;
}

/// Auxiliary system with the non-steered part of the state frozen at its
/// initial value; used only to pre-rank candidates.
ControlSystem frozen_system(const ControlSystem& sys, std::size_t n, const Vec& xi0,
                            ActiveKind kind) {
    const Vec x0 = x_part(xi0, n);
    const Vec y0 = y_part(xi0, n);
    const bool freeze_y = (kind == ActiveKind::SteerX);
    return ControlSystem::general(
        sys.state_dim, sys.input_dim,
        [sys, n, x0, y0, freeze_y](const Vec& xi, const Vec& u) {
            const Vec probe = freeze_y ? pack(x_part(xi, n), y0) : pack(x0, y_part(xi, n));
            return sys.rhs(probe, u);
        });
}

double frozen_score(const ControlSystem& frozen, std::size_t n, const GainSetup& setup,
                    ActiveKind kind, const Vec& xi0, const ControlSchedule& sched) {
    Vec end;
    try {
        end = endpoint(frozen, xi0, sched, sched.total_duration() / 8.0);
    } catch (const BlowupError&) {
        return -std::numeric_limits<double>::infinity();
    }
    const double v0 = setup.V(x_part(xi0, n)), v1 = setup.V(x_part(end, n));
    const double w0 = setup.W(y_part(xi0, n)), w1 = setup.W(y_part(end, n));
    switch (kind) {
        case ActiveKind::SteerX: return v0 - v1;
        case ActiveKind::SteerY: return w0 - w1;
        case ActiveKind::Boundary: return std::min(v0 - v1, w0 - w1);
    }
    return 0.0;
}

const char* active_label(ActiveKind kind) {
    switch (kind) {
        case ActiveKind::SteerX: return "steer_x";
        case ActiveKind::SteerY: return "steer_y";
        case ActiveKind::Boundary: return "boundary";
    }
    return "?";
}

DwellResult primitive_search_impl(const ControlSystem& sys, std::size_t n,
                                  const GainSetup& setup, ActiveKind kind, const Vec& x0,
                                  const Vec& y0, double sigma, double step,
                                  const PrimitiveOptions& opts, bool parallel) {
    require_driftless(sys);
    if (!setup.ell1) throw ValidationError("ell1", "build_interpolants must run first");
    if (!(sigma > 0.0)) throw ValidationError("sigma", "dwell bound must be > 0");
    const Vec xi0 = pack(x0, y0);

    double tau = sigma;
    for (int halving = 0; halving <= opts.max_halvings; ++halving, tau *= 0.5) {
        std::vector<Candidate> cands = enumerate_candidates(sys.input_dim, tau,
                                                            opts.amplitudes);
        if (opts.prerank_frozen && kind != ActiveKind::Boundary) {
            const ControlSystem frozen = frozen_system(sys, n, xi0, kind);
            const std::ptrdiff_t nc = static_cast<std::ptrdiff_t>(cands.size());
            if (parallel) {
#pragma omp parallel for schedule(dynamic, 8)
                for (std::ptrdiff_t i = 0; i < nc; ++i)
                    cands[i].score = frozen_score(frozen, n, setup, kind, xi0, cands[i].sched);
            } else {
                for (std::ptrdiff_t i = 0; i < nc; ++i)
                    cands[i].score = frozen_score(frozen, n, setup, kind, xi0, cands[i].sched);
            }
            std::stable_sort(cands.begin(), cands.end(),
                             [](const Candidate& a, const Candidate& b) {
                                 return a.score > b.score;
                             });
        }

        // Accept the first candidate in ranked order whose true-system run
        // passes; blocks keep the parallel path's result identical.
        const std::size_t chunk = std::max(1, opts.chunk);
        for (std::size_t base = 0; base < cands.size(); base += chunk) {
            const std::size_t hi = std::min(base + chunk, cands.size());
            std::vector<EvalOutcome> outcomes(hi - base);
            if (parallel) {
                const std::ptrdiff_t lo_i = static_cast<std::ptrdiff_t>(base);
                const std::ptrdiff_t hi_i = static_cast<std::ptrdiff_t>(hi);
#pragma omp parallel for schedule(dynamic, 1)
                for (std::ptrdiff_t i = lo_i; i < hi_i; ++i)
                    outcomes[i - lo_i] = evaluate_candidate(sys, n, setup, kind, xi0,
                                                            cands[i].sched, step, tau, opts);
            } else {
                for (std::size_t i = base; i < hi; ++i)
                    outcomes[i - base] = evaluate_candidate(sys, n, setup, kind, xi0,
                                                            cands[i].sched, step, tau, opts);
            }
            for (std::size_t i = base; i < hi; ++i) {
                const EvalOutcome& o = outcomes[i - base];
                if (o.accepted)
                    return {tau, cands[i].sched, o.act_start, o.act_end, o.act_peak,
                            active_label(kind)};
            }
        }
    }
    throw NoPrimitiveFound(std::string("primitive_search: candidate set exhausted (") +
                           active_label(kind) + ")");
}

}  // namespace

DwellResult primitive_search(const ControlSystem& sys, std::size_t x_dim,
                             const GainSetup& setup, ActiveKind active, const Vec& x0,
                             const Vec& y0, double sigma, double step,
                             const PrimitiveOptions& opts) {
    return primitive_search_impl(sys, x_dim, setup, active, x0, y0, sigma, step, opts, true);
}

DwellResult primitive_search_serial(const ControlSystem& sys, std::size_t x_dim,
                                    const GainSetup& setup, ActiveKind active, const Vec& x0,
                                    const Vec& y0, double sigma, double step,
                                    const PrimitiveOptions& opts) {
    return primitive_search_impl(sys, x_dim, setup, active, x0, y0, sigma, step, opts, false);
}

DwellResult composite_controller(const GainSetup& setup, const ControlSystem& sys,
                                 std::size_t x_dim, const Vec& x, const Vec& y, double sigma,
                                 double step, const CompositeOptions& opts) {
    if (norm2(x) == 0.0 && norm2(y) == 0.0)
        throw ValidationError("state", "composite controller requires (x, y) != 0");
    const Regime reg = classify_regime(setup, x, y, regime_band(setup, y, opts.band_scale));
    ActiveKind kind = ActiveKind::Boundary;
    switch (reg.variant) {
        case RegimeVariant::SteerX: kind = ActiveKind::SteerX; break;
        case RegimeVariant::SteerY: kind = ActiveKind::SteerY; break;
        case RegimeVariant::Boundary:
            // The exact trichotomy has no band; a banded point whose sides are
            // far from comparable is really a steering point, and the two-sided
            // decrease would be unattainable when the dominated side is ~0.
            if (reg.w_value <= 0.25 * reg.ell1_value)
                kind = ActiveKind::SteerX;
            else if (reg.ell1_value <= 0.25 * reg.w_value)
                kind = ActiveKind::SteerY;
            else
                kind = ActiveKind::Boundary;
            break;
    }
    return primitive_search(sys, x_dim, setup, kind, x, y, sigma, step, opts.search);
}

Controller make_composite_controller(const GainSetup& setup, const ControlSystem& sys,
                                     std::size_t x_dim, double sigma, double step,
                                     const CompositeOptions& opts) {
    return [setup, sys, x_dim, sigma, step, opts](const Vec& xi) {
        const Vec x(xi.begin(), xi.begin() + x_dim);
        const Vec y(xi.begin() + x_dim, xi.end());
        return composite_controller(setup, sys, x_dim, x, y, sigma, step, opts);
    };
}

}  // namespace sdstab
