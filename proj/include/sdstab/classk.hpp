#pragma once

#include <functional>
#include <string>

#include "sdstab/errors.hpp"

namespace sdstab {

/// A strictly increasing scalar map with value 0 at 0 (comparison function).
/// Strict monotonicity and the zero value are validated on a probe grid at
/// construction; inversion is numeric (bisection).
class ClassKFn {
public:
    ClassKFn(std::string name, std::function<double(double)> eval, double domain_hint,
             bool unbounded);

    double operator()(double s) const { return eval_(s); }

    /// Numeric inverse by bisection; exact 0 at 0. For bounded maps, values
    /// beyond the reachable range raise NumericsError.
    double invert(double v) const;

    bool is_unbounded() const { return unbounded_; }
    double domain_hint() const { return domain_hint_; }
    const std::string& name() const { return name_; }

    /// Value at s = 1e6 -- the numeric stand-in for the limit at infinity of
    /// a bounded map.
    double limit_estimate() const;

    static ClassKFn compose(const ClassKFn& outer, const ClassKFn& inner,
                            std::string name = "");

    /// lo + weight*(hi - lo), pointwise; weight in (0, 1).
    static ClassKFn affine_blend(const ClassKFn& lo, const ClassKFn& hi, double weight,
                                 std::string name = "");

private:
    std::string name_;
    std::function<double(double)> eval_;
    double domain_hint_;
    bool unbounded_;

    void validate() const;
};

}  // namespace sdstab
