#include "sdstab/classk.hpp"

#include <cmath>
#include <utility>

namespace sdstab {

ClassKFn::ClassKFn(std::string name, std::function<double(double)> eval, double domain_hint,
                   bool unbounded)
    : name_(std::move(name)), eval_(std::move(eval)), domain_hint_(domain_hint),
      unbounded_(unbounded) {
    if (!(domain_hint_ > 0.0))
        throw ValidationError(name_, "domain_hint must be > 0");
    validate();
}

void ClassKFn::validate() const {
    if (std::abs(eval_(0.0)) > 1e-12)
        throw ValidationError(name_, "class-K function must vanish at 0");
    // Geometric probe grid over ~12 decades up to the domain hint.
    double prev_s = 0.0, prev_v = 0.0;
    for (int k = 40; k >= 0; --k) {
        const double s = domain_hint_ * std::pow(2.0, -k);
        const double v = eval_(s);
        if (!std::isfinite(v) || v < 0.0)
            throw ValidationError(name_, "class-K function must be finite and nonnegative");
        if (!(v > prev_v))
            throw ValidationError(name_, "class-K function must be strictly increasing");
        prev_s = s;
        prev_v = v;
    }
    (void)prev_s;
}

double ClassKFn::invert(double v) const {
    if (v < 0.0) throw NumericsError(name_ + ": cannot invert a negative value");
    if (v == 0.0) return 0.0;
    double lo = 0.0, hi = domain_hint_;
    int expansions = 0;
    while (eval_(hi) < v) {
        if (!unbounded_ || ++expansions > 200)
            throw NumericsError(name_ + ": value outside invertible range");
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (eval_(mid) < v ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double ClassKFn::limit_estimate() const { return eval_(1e6); }

ClassKFn ClassKFn::compose(const ClassKFn& outer, const ClassKFn& inner, std::string name) {
    if (name.empty()) name = outer.name_ + "o" + inner.name_;
    auto f_outer = outer.eval_;
    auto f_inner = inner.eval_;
    return ClassKFn(std::move(name), [f_outer, f_inner](double s) { return f_outer(f_inner(s)); },
                    inner.domain_hint_, outer.unbounded_ && inner.unbounded_);
}

ClassKFn ClassKFn::affine_blend(const ClassKFn& lo, const ClassKFn& hi, double weight,
                                std::string name) {
    if (!(weight > 0.0 && weight < 1.0))
        throw ValidationError("weight", "blend weight must be in (0, 1)");
    if (name.empty()) name = "blend(" + lo.name_ + "," + hi.name_ + ")";
    auto f_lo = lo.eval_;
    auto f_hi = hi.eval_;
    return ClassKFn(std::move(name),
                    [f_lo, f_hi, weight](double s) {
                        const double a = f_lo(s);
                        return a + weight * (f_hi(s) - a);
                    },
                    std::min(lo.domain_hint(), hi.domain_hint()),
                    lo.is_unbounded() || hi.is_unbounded());
}

}  // namespace sdstab
