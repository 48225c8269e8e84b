#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "sdstab/sampled_loop.hpp"
#include "sdstab/smallgain.hpp"

namespace sdstab {

struct Tolerances {
    double classification_tol = 1e-7;  // scale for the g.phi ~ 0 tests
    double band = 1e-3;                // regime band scale
    double slack = 0.5;                // peak bound factor (1 + slack)
    double margin_mu = 1e-4;           // decrease margin scale
};

struct ScenarioConfig {
    std::string scenario = "example1";  // "example1" | "example2" | "custom"
    Vec x0;                             // defaulted per scenario when empty
    double sigma = 0.5;
    double stop_phi = 1e-6;
    double step = 1e-3;
    std::uint64_t seed = 1;
    std::size_t max_events = 10000;
    Tolerances tolerances;
    std::string output_dir = ".";
    // "custom" = planar affine family with a(x) = c0 x1 + c1 x2 + c2 x1^3
    //            + c3 x2^3 + c4 x1 x2, revalidated at load.
    std::vector<double> custom_a_coeffs{-1.0, -2.0, 0.0, 0.0, 0.0};
};

/// Parses a JSON config document; fills defaults, validates invariants.
/// Throws ParseError (malformed document) or ValidationError (named field).
ScenarioConfig load_config(const std::string& text);

/// A fully built scenario: the system, the Lyapunov function the loop
/// certifies, the controller ingredients, and the lower envelope used for
/// uniform state bounds.
struct Scenario {
    std::string name;
    ControlSystem sys;
    ScalarField phi;   // loop Lyapunov function (V, or the merged candidate)
    std::size_t x_dim; // composite split point; 0 for plain affine scenarios
    std::optional<GainSetup> gains;
    ClassKFn a1_envelope;
};

/// Instantiates and revalidates a builtin (grid checks of the instance
/// conditions; rank checks for the composite). Throws ValidationError.
Scenario build_scenario(const ScenarioConfig& cfg);

Controller make_scenario_controller(const Scenario& scn, const ScenarioConfig& cfg);

Vec default_x0(const std::string& scenario);

/// Runs the closed loop and writes trajectory.csv, ledger.csv, summary.txt
/// and (for planar scenarios) phase.svg into cfg.output_dir.
/// Exit codes: 0 Converged, 2 Budget, 3 Failed or synthesis error, 4 I/O.
int run_scenario(const ScenarioConfig& cfg);

/// Same run without touching the filesystem.
RunResult run_scenario_in_memory(const ScenarioConfig& cfg);

// --- artifact I/O -----------------------------------------------------------

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const ScalarField& phi);
void write_ledger_csv(const std::filesystem::path& path, const SampleLedger& ledger);
void write_summary(const std::filesystem::path& path, const RunResult& rr,
                   const ScalarField& phi);
void write_phase_svg(const std::filesystem::path& path, const Trajectory& traj,
                     const SampleLedger& ledger);

/// Parses a ledger.csv produced by write_ledger_csv (states and schedules are
/// not round-tripped; they are not part of the file format).
SampleLedger parse_ledger_csv(const std::string& text);

/// Full-precision decimal float, shortest round-trippable via %.17g.
std::string format_full(double v);

// --- deterministic grids ----------------------------------------------------

/// 2-D annulus grid, deterministic: golden-angle sweep with every seventh
/// point pinned to a diagonal ray so the singular loci of the planar builtin
/// are exercised.
std::vector<Vec> annulus_grid(double rmin, double rmax, std::size_t count);

std::vector<double> log_grid(double lo, double hi, std::size_t count);

}  // namespace sdstab
