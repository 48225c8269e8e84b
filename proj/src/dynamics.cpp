#include "sdstab/dynamics.hpp"

#include <cmath>
#include <utility>

namespace sdstab {

namespace {

// Central-difference steps. The wider step for nested second-order terms
// trades truncation against cancellation across two difference levels.
double grad_step(const Vec& x) { return 1e-6 * (1.0 + norm2(x)); }
double second_step(const Vec& x) { return 1e-4 * (1.0 + norm2(x)); }

void require_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want) throw DimensionError(std::string(what) + ": dimension mismatch");
}

}  // namespace

Vec VectorField::operator()(const Vec& x) const {
    require_dim(x.size(), dim, "VectorField");
    Vec v = eval(x);
    if (v.size() != dim) throw DimensionError("VectorField: eval output length != dim");
    if (!all_finite(v)) throw NumericsError("VectorField: non-finite evaluation");
    return v;
}

Mat VectorField::jac(const Vec& x) const {
    if (jacobian) {
        Mat j = jacobian(x);
        if (j.rows != dim || j.cols != dim)
            throw DimensionError("VectorField: jacobian shape mismatch");
        return j;
    }
    return fd_jacobian(*this, x);
}

double ScalarField::operator()(const Vec& x) const {
    require_dim(x.size(), dim, "ScalarField");
    const double v = value(x);
    if (!std::isfinite(v)) throw NumericsError("ScalarField: non-finite evaluation");
    return v;
}

Vec ScalarField::grad(const Vec& x) const {
    if (gradient) {
        Vec g = gradient(x);
        if (g.size() != dim) throw DimensionError("ScalarField: gradient length != dim");
        return g;
    }
    return fd_gradient(*this, x);
}

Mat ScalarField::hess(const Vec& x) const {
    if (hessian) {
        Mat h = hessian(x);
        if (h.rows != dim || h.cols != dim)
            throw DimensionError("ScalarField: hessian shape mismatch");
        return h;
    }
    return fd_hessian(*this, x);
}

Vec fd_gradient(const ScalarField& phi, const Vec& x) {
    const double h = grad_step(x);
    Vec g(x.size());
    Vec xp = x, xm = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        g[i] = (phi.value(xp) - phi.value(xm)) / (2.0 * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    if (!all_finite(g)) throw NumericsError("fd_gradient: non-finite");
    return g;
}

Mat fd_hessian(const ScalarField& phi, const Vec& x) {
    // Central second differences of the value; symmetric by construction.
    const double h = second_step(x);
    const std::size_t n = x.size();
    Mat m(n, n);
    const double f0 = phi.value(x);
    Vec p = x;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = x[i] + h;
        const double fp = phi.value(p);
        p[i] = x[i] - h;
        const double fm = phi.value(p);
        p[i] = x[i];
        m(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            p[i] = x[i] + h; p[j] = x[j] + h;
            const double fpp = phi.value(p);
            p[j] = x[j] - h;
            const double fpm = phi.value(p);
            p[i] = x[i] - h; p[j] = x[j] + h;
            const double fmp = phi.value(p);
            p[j] = x[j] - h;
            const double fmm = phi.value(p);
            p[i] = x[i]; p[j] = x[j];
            const double v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return m;
}

Mat fd_jacobian(const VectorField& f, const Vec& x) {
    const double h = grad_step(x);
    const std::size_t n = f.dim;
    Mat j(n, n);
    Vec xp = x, xm = x;
    for (std::size_t c = 0; c < n; ++c) {
        xp[c] = x[c] + h;
        xm[c] = x[c] - h;
        const Vec fp = f.eval(xp);
        const Vec fm = f.eval(xm);
        for (std::size_t r = 0; r < n; ++r) j(r, c) = (fp[r] - fm[r]) / (2.0 * h);
        xp[c] = x[c];
        xm[c] = x[c];
    }
    return j;
}

VectorField linear_combination(double a, const VectorField& X, double b, const VectorField& Y) {
    if (X.dim != Y.dim) throw DimensionError("linear_combination: dimension mismatch");
    VectorField r;
    r.dim = X.dim;
    r.eval = [a, X, b, Y](const Vec& x) { return add(scale(a, X.eval(x)), scale(b, Y.eval(x))); };
    if (X.jacobian && Y.jacobian) {
        r.jacobian = [a, X, b, Y](const Vec& x) {
            Mat jx = X.jacobian(x), jy = Y.jacobian(x);
            Mat j(jx.rows, jx.cols);
            for (std::size_t i = 0; i < j.data.size(); ++i)
                j.data[i] = a * jx.data[i] + b * jy.data[i];
            return j;
        };
    }
    return r;
}

VectorField shift_by_control(const VectorField& f, double u, const VectorField& g) {
    return linear_combination(1.0, f, u, g);
}

Vec ControlSystem::rhs(const Vec& x, const Vec& u) const {
    require_dim(x.size(), state_dim, "ControlSystem state");
    require_dim(u.size(), input_dim, "ControlSystem input");
    switch (shape) {
        case SystemShape::General: {
            Vec v = rhs_general(x, u);
            if (v.size() != state_dim) throw DimensionError("ControlSystem: rhs length");
            return v;
        }
        case SystemShape::Affine:
            return axpy(f.eval(x), u[0], g.eval(x));
        case SystemShape::Driftless: {
            Vec v(state_dim, 0.0);
            for (std::size_t i = 0; i < fields.size(); ++i) {
                const Vec fi = fields[i].eval(x);
                for (std::size_t k = 0; k < state_dim; ++k) v[k] += u[i] * fi[k];
            }
            return v;
        }
    }
    throw NumericsError("ControlSystem: bad shape");
}

ControlSystem ControlSystem::general(std::size_t state_dim, std::size_t input_dim,
                                     std::function<Vec(const Vec&, const Vec&)> rhs) {
    ControlSystem s;
    s.shape = SystemShape::General;
    s.state_dim = state_dim;
    s.input_dim = input_dim;
    s.rhs_general = std::move(rhs);
    const Vec v = s.rhs(Vec(state_dim, 0.0), Vec(input_dim, 0.0));
    if (norm2(v) > 1e-12)
        throw ValidationError("system", "F(0,0) must vanish");
    return s;
}

ControlSystem ControlSystem::affine(VectorField f, VectorField g) {
    if (f.dim != g.dim) throw DimensionError("affine: f/g dimension mismatch");
    ControlSystem s;
    s.shape = SystemShape::Affine;
    s.state_dim = f.dim;
    s.input_dim = 1;
    s.f = std::move(f);
    s.g = std::move(g);
    if (norm2(s.f.eval(Vec(s.state_dim, 0.0))) > 1e-12)
        throw ValidationError("system", "f(0) must vanish");
    return s;
}

ControlSystem ControlSystem::driftless(std::vector<VectorField> fields) {
    if (fields.empty()) throw ValidationError("system", "driftless needs at least one field");
    ControlSystem s;
    s.shape = SystemShape::Driftless;
    s.state_dim = fields.front().dim;
    s.input_dim = fields.size();
    for (const VectorField& f : fields) {
        if (f.dim != s.state_dim) throw DimensionError("driftless: field dimension mismatch");
        if (norm2(f.eval(Vec(s.state_dim, 0.0))) > 1e-12)
            throw ValidationError("system", "driftless fields must vanish at 0");
    }
    s.fields = std::move(fields);
    return s;
}

double lie_derivative(const VectorField& X, const ScalarField& phi, const Vec& x) {
    if (X.dim != phi.dim) throw DimensionError("lie_derivative: dimension mismatch");
    const double v = dot(phi.grad(x), X(x));
    if (!std::isfinite(v)) throw NumericsError("lie_derivative: non-finite");
    return v;
}

double second_lie(const VectorField& X, const VectorField& Y, const ScalarField& phi,
                  const Vec& x) {
    if (X.dim != Y.dim || X.dim != phi.dim)
        throw DimensionError("second_lie: dimension mismatch");
    if (phi.hessian && phi.gradient && Y.jacobian) {
        const Vec xv = X(x);
        const Vec inner = add(matvec(phi.hessian(x), Y.eval(x)),
                              matvec_t(Y.jacobian(x), phi.gradient(x)));
        const double v = dot(xv, inner);
        if (!std::isfinite(v)) throw NumericsError("second_lie: non-finite");
        return v;
    }
    // Nested differences: differentiate y -> Dphi(y).Y(y) along X(x).
    const Vec xv = X(x);
    const double n = norm2(xv);
    if (n == 0.0) return 0.0;
    const double h = 1e-4 * (1.0 + norm2(x));
    const Vec dir = scale(1.0 / n, xv);
    const Vec xp = axpy(x, h, dir);
    const Vec xm = axpy(x, -h, dir);
    const double hp = dot(phi.grad(xp), Y.eval(xp));
    const double hm = dot(phi.grad(xm), Y.eval(xm));
    const double v = n * (hp - hm) / (2.0 * h);
    if (!std::isfinite(v)) throw NumericsError("second_lie: non-finite");
    return v;
}

VectorField bracket(const VectorField& X, const VectorField& Y) {
    if (X.dim != Y.dim) throw DimensionError("bracket: dimension mismatch");
    VectorField b;
    b.dim = X.dim;
    b.eval = [X, Y](const Vec& x) {
        return sub(matvec(Y.jac(x), X.eval(x)), matvec(X.jac(x), Y.eval(x)));
    };
    return b;
}

double field_product_phi(const VectorField& X, const VectorField& Y, const ScalarField& phi,
                         const Vec& x) {
    return second_lie(X, Y, phi, x) - quadratic_form(X(x), phi.hess(x), Y(x));
}

namespace {

struct ClfPointResult {
    bool violated = false;
    std::string clause;
    double f_phi = 0, g_phi = 0, bracket_phi = 0;
};

ClfPointResult check_clf_point(const ControlSystem& sys, const ScalarField& phi,
                               const VectorField& br, const Vec& x, double tol) {
    ClfPointResult r;
    r.f_phi = lie_derivative(sys.f, phi, x);
    r.g_phi = lie_derivative(sys.g, phi, x);
    if (std::abs(r.g_phi) > tol) return r;  // control authority; no constraint
    r.bracket_phi = lie_derivative(br, phi, x);
    if (r.f_phi < -tol) return r;
    if (std::abs(r.f_phi) <= tol && std::abs(r.bracket_phi) > tol) return r;
    r.violated = true;
    r.clause = std::abs(r.f_phi) > tol ? "drift_nonnegative" : "bracket_vanishes";
    return r;
}

ClfReport assemble_clf_report(const std::vector<Vec>& grid,
                              const std::vector<ClfPointResult>& results) {
    ClfReport report;
    report.points_checked = grid.size();
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].violated)
            report.violations.push_back({i, grid[i], results[i].clause, results[i].f_phi,
                                         results[i].g_phi, results[i].bracket_phi});
    }
    return report;
}

}  // namespace

ClfReport check_clf_implication_serial(const ControlSystem& sys, const ScalarField& phi,
                                       const std::vector<Vec>& grid, double tol) {
    if (sys.shape != SystemShape::Affine)
        throw ValidationError("system", "clf check requires an affine system");
    const VectorField br = bracket(sys.f, sys.g);
    std::vector<ClfPointResult> results(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        results[i] = check_clf_point(sys, phi, br, grid[i], tol);
    return assemble_clf_report(grid, results);
}

ClfReport check_clf_implication(const ControlSystem& sys, const ScalarField& phi,
                                const std::vector<Vec>& grid, double tol) {
    if (sys.shape != SystemShape::Affine)
        throw ValidationError("system", "clf check requires an affine system");
    const VectorField br = bracket(sys.f, sys.g);
    std::vector<ClfPointResult> results(grid.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        results[i] = check_clf_point(sys, phi, br, grid[i], tol);
    return assemble_clf_report(grid, results);
}

bool spot_check_positive_definite(const ScalarField& phi, const std::vector<Vec>& grid) {
    if (std::abs(phi.value(Vec(phi.dim, 0.0))) > 1e-12) return false;
    for (const Vec& x : grid) {
        if (norm2(x) == 0.0) continue;
        if (!(phi.value(x) > 0.0)) return false;
    }
    return true;
}

}  // namespace sdstab
