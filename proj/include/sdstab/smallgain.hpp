#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sdstab/classk.hpp"
#include "sdstab/clf_sdf.hpp"
#include "sdstab/dynamics.hpp"

namespace sdstab {

/// Comparison-function data for a composite system split into an x-part
/// (dim n, Lyapunov candidate V) and a y-part (dim m, candidate W), together
/// with the interpolants and limit levels derived from the gain chain.
struct GainSetup {
    ScalarField V;  // on R^n
    ScalarField W;  // on R^m
    ClassKFn a1, a2;          // a1(|x|) <= V(x) <= a2(|x|)
    ClassKFn b1, b2;          // b1(|y|) <= W(y) <= b2(|y|)
    ClassKFn gamma1, Gamma2;  // regime gains

    std::optional<ClassKFn> ell1 = {}, ell2 = {};  // built by build_interpolants
    double r = std::numeric_limits<double>::infinity();
    double R1 = std::numeric_limits<double>::infinity();
    double R2 = std::numeric_limits<double>::infinity();

    bool gamma1_bounded() const { return !gamma1.is_unbounded(); }

    /// lower = b2 o Gamma2 o a1^{-1}, upper = b1 o gamma1 o a2^{-1}
    double lower_chain(double s) const;
    double upper_chain(double s) const;
};

struct GainViolation {
    double s;
    double lhs, rhs;  // upper chain vs lower chain at s
};

struct SmallGainReport {
    std::size_t points = 0;
    std::vector<GainViolation> violations;
    bool limit_checked = false;
    bool limit_ok = true;
    double r = std::numeric_limits<double>::infinity();
    bool pass() const { return violations.empty() && limit_ok; }
};

/// Strict gain-chain inequality upper(s) > lower(s) at each grid point; when
/// gamma1 is bounded, additionally requires the limit of the upper chain to
/// clear r with a margin at the largest grid point.
SmallGainReport check_small_gain(const GainSetup& setup, const std::vector<double>& grid);
SmallGainReport check_small_gain_serial(const GainSetup& setup, const std::vector<double>& grid);

/// Convex combinations at weights 1/3 and 2/3 between the two gain chains.
/// Verifies strict ordering lower < ell1 < ell2 < upper on the probe grid and
/// fills the limit levels (r, R2 = lim ell1, R1 = lim ell2). Throws
/// ChainViolation if strictness fails anywhere on the grid.
void build_interpolants(GainSetup& setup, const std::vector<double>& probe_grid);

/// Merged Lyapunov candidate: max of W(y) and ell_i(V(x)).
double psi(const GainSetup& setup, int i, const Vec& x, const Vec& y);

enum class RegimeVariant { SteerX, SteerY, Boundary };
const char* label(RegimeVariant v);

struct Regime {
    RegimeVariant variant;
    double w_value;     // W(y)
    double ell1_value;  // ell1(V(x))
};

/// Band half-width used to fatten the exact switching locus.
double regime_band(const GainSetup& setup, const Vec& y, double scale = 1e-3);

/// Compares W(y) against ell1(V(x)); Boundary within the band.
Regime classify_regime(const GainSetup& setup, const Vec& x, const Vec& y, double band);

struct RankViolation {
    std::size_t index;
    Vec point;              // packed (x, y)
    std::string condition;  // "x_fields" | "y_fields" | "full_fields"
    std::size_t rank_found, rank_required;
};

struct RankReport {
    std::size_t points = 0;
    std::size_t checks = 0;  // applicable (point, condition) pairs examined
    std::vector<RankViolation> violations;
    bool pass() const { return violations.empty(); }
};

/// Bracket-generated span checks for a driftless composite at each grid
/// point, up to bracket depth 2. Each of the three conditions is evaluated
/// only at points inside its regime set; zero loci are skipped.
RankReport check_rank_conditions(const ControlSystem& sys, std::size_t x_dim,
                                 const GainSetup& setup, const std::vector<Vec>& grid);
RankReport check_rank_conditions_serial(const ControlSystem& sys, std::size_t x_dim,
                                        const GainSetup& setup, const std::vector<Vec>& grid);

/// Which Lyapunov value a primitive search must decrease, and which regime
/// inequality it must maintain along the way.
enum class ActiveKind {
    SteerX,    // decrease V, maintain W < ell1(V)
    SteerY,    // decrease W, maintain ell1(V) < W
    Boundary,  // decrease both V and W (no regime constraint)
};

struct PrimitiveOptions {
    std::vector<double> amplitudes{4.0, 2.0, 1.0, 0.5, 0.25};
    int max_halvings = 24;
    double slack = 0.5;
    double margin_mu = 1e-4;
    double q_floor = 1e-6;  // strengthened margin q(s) = max(q_floor, q_slope*s)
    double q_slope = 1e-3;
    bool prerank_frozen = true;  // rank candidates on the frozen auxiliary system
    int chunk = 16;              // parallel evaluation block size
};

/// Enumerates constant, two-segment and four-segment (bracket motion)
/// schedules over an amplitude ladder and halved dwells; candidates are
/// pre-ranked on the frozen auxiliary system and the first candidate (in
/// ranked order) whose TRUE-system simulation achieves strict decrease,
/// boundedness and regime maintenance is accepted. The unsuffixed entry
/// evaluates ranked candidates in parallel blocks; results are identical to
/// the serial reference.
DwellResult primitive_search(const ControlSystem& sys, std::size_t x_dim,
                             const GainSetup& setup, ActiveKind active, const Vec& x0,
                             const Vec& y0, double sigma, double step,
                             const PrimitiveOptions& opts = {});
DwellResult primitive_search_serial(const ControlSystem& sys, std::size_t x_dim,
                                    const GainSetup& setup, ActiveKind active, const Vec& x0,
                                    const Vec& y0, double sigma, double step,
                                    const PrimitiveOptions& opts = {});

struct CompositeOptions {
    double band_scale = 1e-3;
    PrimitiveOptions search;
};

/// Regime dispatcher: classifies (x, y) and runs the matching primitive
/// search. (x, y) must be nonzero.
DwellResult composite_controller(const GainSetup& setup, const ControlSystem& sys,
                                 std::size_t x_dim, const Vec& x, const Vec& y, double sigma,
                                 double step, const CompositeOptions& opts = {});

/// Controller over the packed state (x, y) for the sampled loop.
Controller make_composite_controller(const GainSetup& setup, const ControlSystem& sys,
                                     std::size_t x_dim, double sigma, double step,
                                     const CompositeOptions& opts = {});

}  // namespace sdstab
