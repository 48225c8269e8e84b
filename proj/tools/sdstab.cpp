#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sdstab/rng.hpp"
#include "sdstab/scenarios.hpp"

namespace {

using namespace sdstab;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Vec parse_point(const std::string& text) {
    Vec v;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) v.push_back(std::stod(tok));
    return v;
}

ScenarioConfig assemble_config(const std::string& scenario, const std::string& config_path,
                               const std::string& x0_text, double sigma, double stop_phi,
                               double step, std::uint64_t seed, long long max_events,
                               const std::string& out_dir) {
    ScenarioConfig cfg;
    if (!config_path.empty()) cfg = load_config(read_file(config_path));
    if (!scenario.empty()) cfg.scenario = scenario;
    if (!x0_text.empty()) cfg.x0 = parse_point(x0_text);
    if (cfg.x0.empty()) cfg.x0 = default_x0(cfg.scenario);
    if (sigma > 0) cfg.sigma = sigma;
    if (stop_phi > 0) cfg.stop_phi = stop_phi;
    if (step > 0) cfg.step = step;
    if (seed) cfg.seed = seed;
    if (max_events > 0) cfg.max_events = static_cast<std::size_t>(max_events);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    return cfg;
}

int cmd_simulate(const ScenarioConfig& cfg) {
    const int code = run_scenario(cfg);
    std::ifstream summary(std::filesystem::path(cfg.output_dir) / "summary.txt");
    if (summary) std::cout << summary.rdbuf();
    std::cout << "artifacts written to " << cfg.output_dir << "\n";
    return code;
}

int cmd_batch(const std::vector<std::string>& config_paths) {
    std::vector<int> codes(config_paths.size(), 0);
    std::vector<std::string> names(config_paths.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(config_paths.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            const ScenarioConfig cfg = load_config(read_file(config_paths[i]));
            names[i] = cfg.scenario + " -> " + cfg.output_dir;
            codes[i] = run_scenario(cfg);
        } catch (const std::exception& e) {
            names[i] = config_paths[i] + ": " + e.what();
            codes[i] = 3;
        }
    }
    int worst = 0;
    for (std::size_t i = 0; i < config_paths.size(); ++i) {
        std::printf("[%d] %s\n", codes[i], names[i].c_str());
        worst = std::max(worst, codes[i]);
    }
    return worst;
}

int cmd_check_clf(const ScenarioConfig& cfg, const std::string& annulus, double tol,
                  bool csv) {
    const Scenario scn = build_scenario(cfg);
    if (scn.sys.shape != SystemShape::Affine) {
        std::cerr << "check-clf: scenario '" << scn.name << "' is not affine\n";
        return 3;
    }
    double rmin = 0.2, rmax = 3.0;
    std::size_t count = 100;
    if (!annulus.empty() &&
        std::sscanf(annulus.c_str(), "%lf:%lf:%zu", &rmin, &rmax, &count) != 3) {
        std::cerr << "check-clf: bad --grid-annulus (want rmin:rmax:count)\n";
        return 3;
    }
    const std::vector<Vec> grid = annulus_grid(rmin, rmax, count);
    const ClfReport report = check_clf_implication(scn.sys, scn.phi, grid, tol);
    std::printf("checked %zu grid points on annulus [%g, %g]\n", report.points_checked, rmin,
                rmax);
    std::printf("%zu violations\n", report.violations.size());
    for (const ClfViolation& v : report.violations)
        std::printf("  #%zu x=(%s, %s) clause=%s f.phi=%g g.phi=%g [f,g].phi=%g\n", v.index,
                    format_full(v.x[0]).c_str(), format_full(v.x[1]).c_str(),
                    v.clause.c_str(), v.f_phi, v.g_phi, v.bracket_phi);
    if (csv) {
        std::filesystem::create_directories(cfg.output_dir);
        std::ofstream out(std::filesystem::path(cfg.output_dir) / "clf_report.csv");
        out << "index,x_1,x_2,clause,f_phi,g_phi,bracket_phi\n";
        for (const ClfViolation& v : report.violations)
            out << v.index << ',' << format_full(v.x[0]) << ',' << format_full(v.x[1]) << ','
                << v.clause << ',' << format_full(v.f_phi) << ',' << format_full(v.g_phi)
                << ',' << format_full(v.bracket_phi) << '\n';
    }
    return report.pass() ? 0 : 1;
}

int cmd_check_gains(const ScenarioConfig& cfg, std::size_t grid_count,
                    std::size_t rank_points, bool csv) {
    const Scenario scn = build_scenario(cfg);
    if (!scn.gains) {
        std::cerr << "check-gains: scenario '" << scn.name << "' has no gain setup\n";
        return 3;
    }
    const std::vector<double> sgrid = log_grid(1e-2, 1e2, grid_count);
    const SmallGainReport gains = check_small_gain(*scn.gains, sgrid);
    std::printf("small-gain chain: %zu points, %zu violations%s\n", gains.points,
                gains.violations.size(),
                gains.limit_checked ? (gains.limit_ok ? ", limit ok" : ", LIMIT FAIL") : "");

    std::vector<Vec> pts;
    SplitMix64 rng(cfg.seed);
    while (pts.size() < rank_points) {
        Vec p = random_in_annulus(2, 0.1, 3.0, rng);
        if (std::abs(p[0]) > 1e-3 && std::abs(p[1]) > 1e-3) pts.push_back(p);
    }
    const RankReport rank = check_rank_conditions(scn.sys, scn.x_dim, *scn.gains, pts);
    std::printf("rank conditions: %zu points, %zu applicable checks, %zu violations\n",
                rank.points, rank.checks, rank.violations.size());
    for (const RankViolation& v : rank.violations)
        std::printf("  #%zu (%g, %g) %s rank %zu < %zu\n", v.index, v.point[0], v.point[1],
                    v.condition.c_str(), v.rank_found, v.rank_required);
    if (csv) {
        std::filesystem::create_directories(cfg.output_dir);
        std::ofstream out(std::filesystem::path(cfg.output_dir) / "gains_report.csv");
        out << "s,upper_chain,lower_chain,violated\n";
        for (double s : sgrid) {
            const double up = scn.gains->upper_chain(s), lo = scn.gains->lower_chain(s);
            out << format_full(s) << ',' << format_full(up) << ',' << format_full(lo) << ','
                << (up > lo ? 0 : 1) << '\n';
        }
        std::ofstream rout(std::filesystem::path(cfg.output_dir) / "rank_report.csv");
        rout << "index,x,y,condition,rank_found,rank_required\n";
        for (const RankViolation& v : rank.violations)
            rout << v.index << ',' << format_full(v.point[0]) << ','
                 << format_full(v.point[1]) << ',' << v.condition << ',' << v.rank_found
                 << ',' << v.rank_required << '\n';
    }
    return (gains.pass() && rank.pass()) ? 0 : 1;
}

int cmd_bracket(const ScenarioConfig& cfg, const std::string& point_text, bool csv) {
    const Scenario scn = build_scenario(cfg);
    if (scn.sys.shape != SystemShape::Affine) {
        std::cerr << "bracket: scenario '" << scn.name << "' is not affine\n";
        return 3;
    }
    const Vec x = parse_point(point_text);
    if (x.size() != scn.sys.state_dim) {
        std::cerr << "bracket: point dimension mismatch\n";
        return 3;
    }
    const VectorField br = bracket(scn.sys.f, scn.sys.g);
    const Vec fv = scn.sys.f(x), gv = scn.sys.g(x), bv = br(x);
    const double f_phi = lie_derivative(scn.sys.f, scn.phi, x);
    const double g_phi = lie_derivative(scn.sys.g, scn.phi, x);
    const double b_phi = lie_derivative(br, scn.phi, x);
    auto print_vec = [](const char* name, const Vec& v) {
        std::printf("%-8s (", name);
        for (std::size_t i = 0; i < v.size(); ++i)
            std::printf("%s%.9g", i ? ", " : "", v[i]);
        std::printf(")\n");
    };
    print_vec("f", fv);
    print_vec("g", gv);
    print_vec("[f,g]", bv);
    std::printf("f.phi     %.9g\n", f_phi);
    std::printf("g.phi     %.9g\n", g_phi);
    std::printf("[f,g].phi %.9g\n", b_phi);
    if (csv) {
        std::filesystem::create_directories(cfg.output_dir);
        std::ofstream out(std::filesystem::path(cfg.output_dir) / "bracket.csv");
        out << "quantity,value\n";
        out << "f_phi," << format_full(f_phi) << "\ng_phi," << format_full(g_phi)
            << "\nbracket_phi," << format_full(b_phi) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sampled-data stabilizer synthesis and simulation"};
    app.require_subcommand(1);

    std::string scenario, config_path, x0_text, out_dir, annulus, point_text;
    double sigma = 0, stop_phi = 0, step = 0, tol = 1e-7;
    std::uint64_t seed = 0;
    long long max_events = 0;
    std::size_t grid_count = 50, rank_points = 100;
    bool csv = false;
    std::vector<std::string> batch;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("scenario", scenario, "builtin scenario name");
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--out", out_dir, "output directory");
    };

    CLI::App* sim = app.add_subcommand("simulate", "run the closed loop, write artifacts");
    add_common(sim);
    sim->add_option("--x0", x0_text, "initial state, comma separated");
    sim->add_option("--sigma", sigma, "dwell upper bound");
    sim->add_option("--stop-phi", stop_phi, "termination level");
    sim->add_option("--step", step, "integrator step");
    sim->add_option("--seed", seed, "random seed");
    sim->add_option("--max-events", max_events, "event budget");
    sim->add_option("--batch", batch, "run these config files concurrently");

    CLI::App* clf =
        app.add_subcommand("check-clf", "grid-certify the stabilizability implication");
    add_common(clf);
    clf->add_option("--grid-annulus", annulus, "rmin:rmax:count (default 0.2:3:100)");
    clf->add_option("--tol", tol, "equality tolerance");
    clf->add_flag("--csv", csv, "also write machine-readable CSV");

    CLI::App* gains =
        app.add_subcommand("check-gains", "small-gain chain and rank conditions");
    add_common(gains);
    gains->add_option("--grid-count", grid_count, "gain grid size");
    gains->add_option("--rank-points", rank_points, "random rank-check points");
    gains->add_option("--seed", seed, "random seed");
    gains->add_flag("--csv", csv, "also write machine-readable CSV");

    CLI::App* br = app.add_subcommand("bracket", "field and bracket values at a point");
    add_common(br);
    br->add_option("--point", point_text, "state, comma separated")->required();
    br->add_flag("--csv", csv, "also write machine-readable CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            if (!batch.empty()) return cmd_batch(batch);
            return cmd_simulate(assemble_config(scenario, config_path, x0_text, sigma,
                                                stop_phi, step, seed, max_events, out_dir));
        }
        const ScenarioConfig cfg =
            assemble_config(scenario, config_path, "", 0, 0, 0, seed, 0, out_dir);
        if (clf->parsed()) return cmd_check_clf(cfg, annulus, tol, csv);
        if (gains->parsed()) return cmd_check_gains(cfg, grid_count, rank_points, csv);
        if (br->parsed()) return cmd_bracket(cfg, point_text, csv);
    } catch (const std::ios_base::failure& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
