#include "sdstab/scenarios.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sdstab {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

double require_positive(const json& j, const char* field, double fallback) {
    if (!j.contains(field)) return fallback;
    if (!j[field].is_number()) throw ValidationError(field, "must be a number");
    const double v = j[field].get<double>();
    if (!(v > 0.0)) throw ValidationError(field, "must be > 0");
    return v;
}

}  // namespace

Vec default_x0(const std::string& scenario) {
    if (scenario == "example2") return {1.5, 1.0};
    return {1.0, -1.0};
}

ScenarioConfig load_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what());
    }
    if (!j.is_object()) throw ParseError("config root must be an object");

    ScenarioConfig cfg;
    if (j.contains("scenario")) {
        if (!j["scenario"].is_string()) throw ValidationError("scenario", "must be a string");
        cfg.scenario = j["scenario"].get<std::string>();
    }
    if (cfg.scenario != "example1" && cfg.scenario != "example2" && cfg.scenario != "custom")
        throw ValidationError("scenario", "unknown scenario '" + cfg.scenario + "'");

    if (j.contains("x0")) {
        if (!j["x0"].is_array()) throw ValidationError("x0", "must be an array of numbers");
        for (const auto& v : j["x0"]) {
            if (!v.is_number()) throw ValidationError("x0", "must be an array of numbers");
            cfg.x0.push_back(v.get<double>());
        }
    } else {
        cfg.x0 = default_x0(cfg.scenario);
    }
    if (cfg.x0.size() != 2) throw ValidationError("x0", "dimension must match the scenario (2)");

    cfg.sigma = require_positive(j, "sigma", cfg.sigma);
    cfg.stop_phi = require_positive(j, "stop_phi", cfg.stop_phi);
    cfg.step = require_positive(j, "step", cfg.step);
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("max_events")) {
        const auto v = j["max_events"].get<long long>();
        if (v < 1) throw ValidationError("max_events", "must be >= 1");
        cfg.max_events = static_cast<std::size_t>(v);
    }
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();

    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        if (!t.is_object()) throw ValidationError("tolerances", "must be an object");
        cfg.tolerances.classification_tol =
            require_positive(t, "classification_tol", cfg.tolerances.classification_tol);
        cfg.tolerances.band = require_positive(t, "band", cfg.tolerances.band);
        cfg.tolerances.slack = require_positive(t, "slack", cfg.tolerances.slack);
        cfg.tolerances.margin_mu = require_positive(t, "margin_mu", cfg.tolerances.margin_mu);
    }

    if (j.contains("custom")) {
        const json& c = j["custom"];
        if (c.contains("a_coeffs")) {
            if (!c["a_coeffs"].is_array() || c["a_coeffs"].size() != 5)
                throw ValidationError("custom.a_coeffs", "must be an array of 5 numbers");
            for (std::size_t i = 0; i < 5; ++i)
                cfg.custom_a_coeffs[i] = c["a_coeffs"][i].get<double>();
        }
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Builtin instances
// ---------------------------------------------------------------------------

namespace {

ClassKFn half_square_envelope() {
    return ClassKFn("a1", [](double s) { return 0.5 * s * s; }, 1e3, true);
}

/// Planar affine family: f = (a, a), g = (x1, -x2), V = |x|^2 / 2.
Scenario build_affine_planar(const std::string& name, const std::vector<double>& c) {
    auto a_fn = [c](double x1, double x2) {
        return c[0] * x1 + c[1] * x2 + c[2] * x1 * x1 * x1 + c[3] * x2 * x2 * x2 +
               c[4] * x1 * x2;
    };
    auto a_d1 = [c](double x1, double x2) { return c[0] + 3.0 * c[2] * x1 * x1 + c[4] * x2; };
    auto a_d2 = [c](double x1, double x2) { return c[1] + 3.0 * c[3] * x2 * x2 + c[4] * x1; };

    // Instance conditions: a(0,0) = 0, x1*a(x1,x1) < 0, a(x1,-x1) != 0 away
    // from the axes; revalidated on every load.
    if (std::abs(a_fn(0.0, 0.0)) > 1e-12)
        throw ValidationError("scenario", "instance: a(0,0) must vanish");
    for (int k = 0; k < 25; ++k) {
        const double mag = 0.05 + (3.0 - 0.05) * k / 24.0;
        for (double x1 : {mag, -mag}) {
            if (!(x1 * a_fn(x1, x1) < 0.0))
                throw ValidationError("scenario", "instance: x1*a(x1,x1) must be negative");
            if (!(std::abs(a_fn(x1, -x1)) > 1e-12))
                throw ValidationError("scenario", "instance: a(x1,-x1) must be nonzero");
        }
    }

    VectorField f;
    f.dim = 2;
    f.eval = [a_fn](const Vec& x) {
        const double a = a_fn(x[0], x[1]);
        return Vec{a, a};
    };
    f.jacobian = [a_d1, a_d2](const Vec& x) {
        Mat m(2, 2);
        m(0, 0) = m(1, 0) = a_d1(x[0], x[1]);
        m(0, 1) = m(1, 1) = a_d2(x[0], x[1]);
        return m;
    };

    VectorField g;
    g.dim = 2;
    g.eval = [](const Vec& x) { return Vec{x[0], -x[1]}; };
    g.jacobian = [](const Vec&) {
        Mat m(2, 2);
        m(0, 0) = 1.0;
        m(1, 1) = -1.0;
        return m;
    };

    ScalarField V;
    V.dim = 2;
    V.value = [](const Vec& x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); };
    V.gradient = [](const Vec& x) { return x; };
    V.hessian = [](const Vec&) {
        Mat m(2, 2);
        m(0, 0) = m(1, 1) = 1.0;
        return m;
    };
    V.positive_definite = true;

    return Scenario{name, ControlSystem::affine(std::move(f), std::move(g)), std::move(V), 0,
                    std::nullopt, half_square_envelope()};
}

Scenario build_example2() {
    VectorField f1;
    f1.dim = 2;
    f1.eval = [](const Vec& p) { return Vec{p[0], p[1]}; };
    f1.jacobian = [](const Vec&) {
        Mat m(2, 2);
        m(0, 0) = m(1, 1) = 1.0;
        return m;
    };
    VectorField f2;
    f2.dim = 2;
    f2.eval = [](const Vec& p) { return Vec{p[0] * p[0] * p[0], -p[1] * p[1] * p[1]}; };
    f2.jacobian = [](const Vec& p) {
        Mat m(2, 2);
        m(0, 0) = 3.0 * p[0] * p[0];
        m(1, 1) = -3.0 * p[1] * p[1];
        return m;
    };
    ControlSystem sys = ControlSystem::driftless({std::move(f1), std::move(f2)});

    ScalarField V;
    V.dim = 1;
    V.value = [](const Vec& x) { return x[0] * x[0]; };
    V.gradient = [](const Vec& x) { return Vec{2.0 * x[0]}; };
    V.hessian = [](const Vec&) {
        Mat m(1, 1);
        m(0, 0) = 2.0;
        return m;
    };
    V.positive_definite = true;
    ScalarField W = V;

    auto square = [](const char* nm) {
        return ClassKFn(nm, [](double s) { return s * s; }, 1e4, true);
    };
    GainSetup setup{V, W, square("a1"), square("a2"), square("b1"), square("b2"),
                    ClassKFn("gamma1", [](double s) { return 2.0 * s; }, 1e4, true),
                    ClassKFn("Gamma2", [](double s) { return s; }, 1e4, true)};
    build_interpolants(setup, log_grid(1e-3, 1e3, 40));

    // Load-time revalidation: gain sandwich on a few states plus the rank
    // conditions on a small annulus grid.
    for (double s : {0.1, 0.7, 2.5}) {
        if (setup.a1(s) > setup.V(Vec{s}) + 1e-12 || setup.V(Vec{s}) > setup.a2(s) + 1e-12)
            throw ValidationError("scenario", "instance: V sandwich failed");
        if (setup.b1(s) > setup.W(Vec{s}) + 1e-12 || setup.W(Vec{s}) > setup.b2(s) + 1e-12)
            throw ValidationError("scenario", "instance: W sandwich failed");
    }
    if (!check_rank_conditions(sys, 1, setup, annulus_grid(0.2, 2.5, 20)).pass())
        throw ValidationError("scenario", "instance: rank conditions failed");

    ScalarField psi1;
    psi1.dim = 2;
    const GainSetup setup_copy = setup;
    psi1.value = [setup_copy](const Vec& xi) {
        return psi(setup_copy, 1, Vec{xi[0]}, Vec{xi[1]});
    };
    psi1.positive_definite = true;

    return Scenario{"example2", std::move(sys), std::move(psi1), 1, std::move(setup),
                    half_square_envelope()};
}

}  // namespace

Scenario build_scenario(const ScenarioConfig& cfg) {
    if (cfg.scenario == "example1")
        return build_affine_planar("example1", {-1.0, -2.0, 0.0, 0.0, 0.0});
    if (cfg.scenario == "custom")
        return build_affine_planar("custom", cfg.custom_a_coeffs);
    if (cfg.scenario == "example2") return build_example2();
    throw ValidationError("scenario", "unknown scenario '" + cfg.scenario + "'");
}

Controller make_scenario_controller(const Scenario& scn, const ScenarioConfig& cfg) {
    if (scn.gains) {
        CompositeOptions opts;
        opts.band_scale = cfg.tolerances.band;
        opts.search.slack = cfg.tolerances.slack;
        opts.search.margin_mu = cfg.tolerances.margin_mu;
        return make_composite_controller(*scn.gains, scn.sys, scn.x_dim, cfg.sigma, cfg.step,
                                         opts);
    }
    SynthesisOptions opts;
    opts.tol_scale = cfg.tolerances.classification_tol;
    opts.slack = cfg.tolerances.slack;
    opts.margin_mu = cfg.tolerances.margin_mu;
    return make_clf_controller(scn.sys, scn.phi, cfg.sigma, cfg.step, opts);
}

// ---------------------------------------------------------------------------
// Artifact I/O
// ---------------------------------------------------------------------------

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj,
                          const ScalarField& phi) {
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot open " + path.string());
    const std::size_t n = traj.states.empty() ? 0 : traj.states.front().size();
    const std::size_t l = traj.controls.empty() ? 0 : traj.controls.front().size();
    out << "t";
    for (std::size_t i = 1; i <= n; ++i) out << ",x_" << i;
    for (std::size_t i = 1; i <= l; ++i) out << ",u_" << i;
    out << ",phi\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out << format_full(traj.times[k]);
        for (double v : traj.states[k]) out << ',' << format_full(v);
        const std::size_t ci = k < traj.controls.size()
                                   ? k
                                   : (traj.controls.empty() ? 0 : traj.controls.size() - 1);
        for (std::size_t i = 0; i < l; ++i)
            out << ',' << format_full(traj.controls.empty() ? 0.0 : traj.controls[ci][i]);
        out << ',' << format_full(phi(traj.states[k])) << '\n';
    }
    if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

void write_ledger_csv(const fs::path& path, const SampleLedger& ledger) {
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot open " + path.string());
    out << "event,t_i,T_i,case,phi_before,phi_after,phi_peak\n";
    for (std::size_t i = 0; i < ledger.size(); ++i) {
        const LedgerEvent& e = ledger.events[i];
        out << i << ',' << format_full(e.t) << ',' << format_full(e.dwell) << ',' << e.label
            << ',' << format_full(e.phi_before) << ',' << format_full(e.phi_after) << ','
            << format_full(e.phi_peak) << '\n';
    }
    if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

void write_summary(const fs::path& path, const RunResult& rr, const ScalarField& phi) {
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot open " + path.string());
    out << "verdict: " << to_string(rr.verdict) << '\n';
    out << "events: " << rr.ledger.size() << '\n';
    if (!rr.trajectory.states.empty())
        out << "final_phi: " << format_full(phi(rr.trajectory.back_state())) << '\n';
    if (!rr.failure_reason.empty()) out << "reason: " << rr.failure_reason << '\n';
    if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

void write_phase_svg(const fs::path& path, const Trajectory& traj,
                     const SampleLedger& ledger) {
    if (traj.states.empty() || traj.states.front().size() != 2) return;
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;  // include the origin
    for (const Vec& s : traj.states) {
        xmin = std::min(xmin, s[0]);
        xmax = std::max(xmax, s[0]);
        ymin = std::min(ymin, s[1]);
        ymax = std::max(ymax, s[1]);
    }
    const double w = 640, h = 640, margin = 40;
    const double bw = std::max(xmax - xmin, 1e-9), bh = std::max(ymax - ymin, 1e-9);
    const double sc = std::min((w - 2 * margin) / bw, (h - 2 * margin) / bh);
    auto px = [&](double x) { return margin + (x - xmin) * sc; };
    auto py = [&](double y) { return h - margin - (y - ymin) * sc; };

    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot open " + path.string());
    char buf[64];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" "
           "viewBox=\"0 0 640 640\">\n<rect width=\"640\" height=\"640\" fill=\"white\"/>\n";
    // the CSV carries full resolution; the plot thins long trajectories
    const std::size_t stride = std::max<std::size_t>(1, traj.states.size() / 4000);
    out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"";
    for (std::size_t k = 0; k < traj.states.size(); k += stride) {
        const Vec& s = traj.states[k];
        std::snprintf(buf, sizeof(buf), "%.4f,%.4f ", px(s[0]), py(s[1]));
        out << buf;
    }
    if ((traj.states.size() - 1) % stride != 0) {
        const Vec& s = traj.states.back();
        std::snprintf(buf, sizeof(buf), "%.4f,%.4f ", px(s[0]), py(s[1]));
        out << buf;
    }
    out << "\"/>\n";
    for (const LedgerEvent& e : ledger.events) {
        if (e.x.size() != 2) continue;
        std::snprintf(buf, sizeof(buf),
                      "<circle cx=\"%.4f\" cy=\"%.4f\" r=\"2.5\" fill=\"#d62728\"/>\n",
                      px(e.x[0]), py(e.x[1]));
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.4f\" cy=\"%.4f\" r=\"3\" fill=\"black\"/>\n",
                  px(0.0), py(0.0));
    out << buf << "</svg>\n";
    if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

SampleLedger parse_ledger_csv(const std::string& text) {
    SampleLedger ledger;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("ledger csv: missing header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string fields[7];
        for (int i = 0; i < 7; ++i) {
            if (!std::getline(row, fields[i], ','))
                throw ParseError("ledger csv: line " + std::to_string(lineno) +
                                 " has too few fields");
        }
        LedgerEvent e;
        try {
            e.t = std::stod(fields[1]);
            e.dwell = std::stod(fields[2]);
            e.label = fields[3];
            e.phi_before = std::stod(fields[4]);
            e.phi_after = std::stod(fields[5]);
            e.phi_peak = std::stod(fields[6]);
        } catch (const std::exception&) {
            throw ParseError("ledger csv: bad number at line " + std::to_string(lineno));
        }
        ledger.events.push_back(std::move(e));
    }
    return ledger;
}

// ---------------------------------------------------------------------------
// Run orchestration
// ---------------------------------------------------------------------------

RunResult run_scenario_in_memory(const ScenarioConfig& cfg) {
    const Scenario scn = build_scenario(cfg);
    const Controller ctl = make_scenario_controller(scn, cfg);
    LoopConfig lc;
    lc.sigma = cfg.sigma;
    lc.stop_phi = cfg.stop_phi;
    lc.max_events = cfg.max_events;
    lc.step = cfg.step;
    lc.slack = cfg.tolerances.slack;
    lc.seed = cfg.seed;
    const Vec x0 = cfg.x0.empty() ? default_x0(cfg.scenario) : cfg.x0;
    return run(scn.sys, ctl, scn.phi, x0, lc);
}

int run_scenario(const ScenarioConfig& cfg) {
    Scenario scn = build_scenario(cfg);
    const Controller ctl = make_scenario_controller(scn, cfg);
    LoopConfig lc;
    lc.sigma = cfg.sigma;
    lc.stop_phi = cfg.stop_phi;
    lc.max_events = cfg.max_events;
    lc.step = cfg.step;
    lc.slack = cfg.tolerances.slack;
    lc.seed = cfg.seed;
    const Vec x0 = cfg.x0.empty() ? default_x0(cfg.scenario) : cfg.x0;
    const RunResult rr = run(scn.sys, ctl, scn.phi, x0, lc);

    try {
        const fs::path dir(cfg.output_dir);
        fs::create_directories(dir);
        write_trajectory_csv(dir / "trajectory.csv", rr.trajectory, scn.phi);
        write_ledger_csv(dir / "ledger.csv", rr.ledger);
        write_summary(dir / "summary.txt", rr, scn.phi);
        write_phase_svg(dir / "phase.svg", rr.trajectory, rr.ledger);
    } catch (const std::exception&) {
        return 4;
    }

    switch (rr.verdict) {
        case Verdict::Converged: return 0;
        case Verdict::Budget: return 2;
        case Verdict::Failed: return 3;
    }
    return 3;
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

std::vector<Vec> annulus_grid(double rmin, double rmax, std::size_t count) {
    if (!(rmin > 0.0) || !(rmax > rmin))
        throw ValidationError("grid", "annulus requires 0 < rmin < rmax");
    std::vector<Vec> grid;
    grid.reserve(count);
    const double golden = 2.0 * 3.14159265358979323846 * 0.61803398874989485;
    for (std::size_t k = 0; k < count; ++k) {
        const double r = count > 1 ? rmin + (rmax - rmin) * static_cast<double>(k) /
                                                static_cast<double>(count - 1)
                                   : rmin;
        const double c = r / std::sqrt(2.0);
        if (k % 7 == 3) {  // diagonal ray
            grid.push_back(k % 2 ? Vec{-c, -c} : Vec{c, c});
        } else if (k % 7 == 5) {  // anti-diagonal ray
            grid.push_back(k % 2 ? Vec{-c, c} : Vec{c, -c});
        } else {
            const double th = golden * static_cast<double>(k);
            grid.push_back(Vec{r * std::cos(th), r * std::sin(th)});
        }
    }
    return grid;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2)
        throw ValidationError("grid", "log grid requires 0 < lo < hi and count >= 2");
    std::vector<double> g(count);
    const double ratio = std::log(hi / lo);
    for (std::size_t k = 0; k < count; ++k)
        g[k] = lo * std::exp(ratio * static_cast<double>(k) / static_cast<double>(count - 1));
    return g;
}

}  // namespace sdstab
