#include "sdstab/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace sdstab {

double ControlSchedule::total_duration() const {
    double t = 0.0;
    for (const Segment& s : segments) t += s.duration;
    return t;
}

ControlSchedule& ControlSchedule::append(double duration, Vec control) {
    if (!(duration > 0.0)) throw ValidationError("duration", "segment duration must be > 0");
    segments.push_back({duration, std::move(control)});
    return *this;
}

ControlSchedule ControlSchedule::single(double duration, Vec control) {
    ControlSchedule s;
    s.append(duration, std::move(control));
    return s;
}

ControlSchedule concat(const ControlSchedule& a, const ControlSchedule& b) {
    ControlSchedule r = a;
    r.segments.insert(r.segments.end(), b.segments.begin(), b.segments.end());
    return r;
}

namespace {

Vec rk4_step(const ControlSystem& sys, const Vec& x, const Vec& u, double h) {
    const Vec k1 = sys.rhs(x, u);
    const Vec k2 = sys.rhs(axpy(x, 0.5 * h, k1), u);
    const Vec k3 = sys.rhs(axpy(x, 0.5 * h, k2), u);
    const Vec k4 = sys.rhs(axpy(x, h, k3), u);
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

void check_state(const Vec& x, double t) {
    if (!all_finite(x) || norm2(x) > kBlowupNorm)
        throw BlowupError("trajectory left the admissible region", t);
}

}  // namespace

Trajectory integrate(const ControlSystem& sys, const Vec& x0, const ControlSchedule& schedule,
                     double step) {
    if (!(step > 0.0)) throw ValidationError("step", "integration step must be > 0");
    if (schedule.empty()) throw EmptyScheduleError("integrate: empty schedule");
    if (x0.size() != sys.state_dim) throw DimensionError("integrate: x0 dimension mismatch");
    if (!all_finite(x0)) throw NumericsError("integrate: x0 not finite");

    Trajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(x0);

    Vec x = x0;
    double seg_start = 0.0;
    for (const Segment& seg : schedule.segments) {
        if (seg.control.size() != sys.input_dim)
            throw DimensionError("integrate: control dimension mismatch");
        const double dur = seg.duration;
        const long n_full = static_cast<long>(std::floor(dur / step));
        const double rem = dur - static_cast<double>(n_full) * step;
        const bool take_rem = rem > step * 1e-9;

        double last_t = seg_start;
        for (long k = 0; k < n_full; ++k) {
            x = rk4_step(sys, x, seg.control, step);
            // Last full step of a remainder-free segment lands on the boundary.
            const bool is_last = (k == n_full - 1) && !take_rem;
            last_t = is_last ? seg_start + dur : seg_start + static_cast<double>(k + 1) * step;
            check_state(x, traj.times.back());
            traj.times.push_back(last_t);
            traj.states.push_back(x);
            traj.controls.push_back(seg.control);
        }
        if (take_rem) {
            x = rk4_step(sys, x, seg.control, rem);
            check_state(x, traj.times.back());
            traj.times.push_back(seg_start + dur);
            traj.states.push_back(x);
            traj.controls.push_back(seg.control);
        }
        seg_start += dur;
    }
    return traj;
}

Vec endpoint(const ControlSystem& sys, const Vec& x0, const ControlSchedule& schedule,
             double step) {
    return integrate(sys, x0, schedule, step).back_state();
}

double peak_along(const ControlSystem& sys, const Vec& x0, const ControlSchedule& schedule,
                  double step, const ScalarField& phi) {
    const Trajectory traj = integrate(sys, x0, schedule, step);
    double peak = phi(traj.states.front());
    for (std::size_t i = 1; i < traj.states.size(); ++i)
        peak = std::max(peak, phi(traj.states[i]));
    return peak;
}

double refined_step(double base_step, const ControlSchedule& schedule) {
    double h = base_step;
    for (const Segment& s : schedule.segments) h = std::min(h, s.duration / 10.0);
    return h;
}

}  // namespace sdstab
