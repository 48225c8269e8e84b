#pragma once

#include <vector>

#include "sdstab/dynamics.hpp"

namespace sdstab {

struct Segment {
    double duration;  // > 0
    Vec control;
};

/// A finite list of (duration, constant control) segments; the only control
/// representation the trajectory producer consumes.
struct ControlSchedule {
    std::vector<Segment> segments;

    double total_duration() const;
    bool empty() const { return segments.empty(); }

    ControlSchedule& append(double duration, Vec control);
    static ControlSchedule single(double duration, Vec control);
};

ControlSchedule concat(const ControlSchedule& a, const ControlSchedule& b);

/// Sampled closed-loop trajectory. controls[k] is held on [times[k], times[k+1]).
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> controls;  // size = times.size() - 1

    std::size_t size() const { return times.size(); }
    const Vec& back_state() const { return states.back(); }
};

/// States with norm beyond this (or any non-finite entry) raise BlowupError.
inline constexpr double kBlowupNorm = 1e12;

/// Classic fixed-step RK4 over a piecewise-constant schedule. The final step
/// of each segment is shortened to land exactly on the segment boundary;
/// every internal step and boundary is recorded.
Trajectory integrate(const ControlSystem& sys, const Vec& x0, const ControlSchedule& schedule,
                     double step);

/// Final state only.
Vec endpoint(const ControlSystem& sys, const Vec& x0, const ControlSchedule& schedule,
             double step);

/// Max of phi over the recorded samples -- the numerical surrogate for the
/// supremum over the interval, at the resolution of one sample per RK step.
double peak_along(const ControlSystem& sys, const Vec& x0, const ControlSchedule& schedule,
                  double step, const ScalarField& phi);

/// Step refinement used by the synthesis layers: at least ten steps per
/// segment, never coarser than the requested base step.
double refined_step(double base_step, const ControlSchedule& schedule);

}  // namespace sdstab
