#pragma once

#include <stdexcept>
#include <string>

namespace sdstab {

/// Mismatched vector/matrix dimensions between interacting values.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A numerical evaluation produced NaN/Inf or left the representable range.
struct NumericsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Construction-time invariant violation; `field` names the offending input.
struct ValidationError : std::invalid_argument {
    std::string field;
    ValidationError(std::string f, const std::string& msg)
        : std::invalid_argument(f + ": " + msg), field(std::move(f)) {}
};

/// Malformed configuration document.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Trajectory left the admissible region; carries the last finite time.
struct BlowupError : std::runtime_error {
    double last_finite_time;
    BlowupError(const std::string& msg, double t)
        : std::runtime_error(msg), last_finite_time(t) {}
};

struct EmptyScheduleError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// The pointwise stabilizability implication fails at a state; carries the
/// three classification witnesses.
struct CLFConditionViolated : std::runtime_error {
    double f_phi, g_phi, bracket_phi;
    CLFConditionViolated(const std::string& msg, double fp, double gp, double bp)
        : std::runtime_error(msg), f_phi(fp), g_phi(gp), bracket_phi(bp) {}
};

struct AuthorityTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BracketTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dwell-time halving exhausted without an accepted decrease.
struct NoDecreaseFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Interpolant chain strictness failed on the probe grid.
struct ChainViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Motion-primitive candidate set exhausted without an accepted schedule.
struct NoPrimitiveFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sdstab
