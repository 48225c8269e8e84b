#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdstab/linalg.hpp"

namespace sdstab {

/// A vector field on R^n. The Jacobian is optional; when absent, central
/// finite differences with step 1e-6*(1+|x|) are used.
struct VectorField {
    std::size_t dim = 0;
    std::function<Vec(const Vec&)> eval;
    std::function<Mat(const Vec&)> jacobian;  // optional analytic Jacobian

    /// Checked evaluation: validates input/output dimensions and finiteness.
    Vec operator()(const Vec& x) const;

    /// Analytic Jacobian if supplied, else finite differences.
    Mat jac(const Vec& x) const;
};

/// A scalar field on R^n with optional analytic gradient and Hessian.
struct ScalarField {
    std::size_t dim = 0;
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;  // optional
    std::function<Mat(const Vec&)> hessian;   // optional
    bool positive_definite = false;

    double operator()(const Vec& x) const;
    Vec grad(const Vec& x) const;
    Mat hess(const Vec& x) const;
};

// Forced finite-difference paths (also used as cross-checks against
// analytic derivatives where both exist).
Vec fd_gradient(const ScalarField& phi, const Vec& x);
Mat fd_hessian(const ScalarField& phi, const Vec& x);
Mat fd_jacobian(const VectorField& f, const Vec& x);

/// a*X + b*Y as a new field; Jacobian is analytic iff both operands carry one.
VectorField linear_combination(double a, const VectorField& X, double b, const VectorField& Y);

/// Constant-coefficient shift X + c (used for control-affine closed loops).
VectorField shift_by_control(const VectorField& f, double u, const VectorField& g);

enum class SystemShape { General, Affine, Driftless };

/// A controlled system in one of three shapes:
///   General:   xdot = F(x, u)
///   Affine:    xdot = f(x) + u*g(x)   (single input)
///   Driftless: xdot = sum_i u_i F_i(x)
struct ControlSystem {
    SystemShape shape = SystemShape::General;
    std::size_t state_dim = 0;
    std::size_t input_dim = 0;

    std::function<Vec(const Vec&, const Vec&)> rhs_general;
    VectorField f, g;                 // affine pieces
    std::vector<VectorField> fields;  // driftless generators

    Vec rhs(const Vec& x, const Vec& u) const;

    static ControlSystem general(std::size_t state_dim, std::size_t input_dim,
                                 std::function<Vec(const Vec&, const Vec&)> rhs);
    static ControlSystem affine(VectorField f, VectorField g);
    static ControlSystem driftless(std::vector<VectorField> fields);
};

/// Directional derivative of phi along X: (X phi)(x) = Dphi(x) . X(x).
double lie_derivative(const VectorField& X, const ScalarField& phi, const Vec& x);

/// Second-order term X(Y phi)(x): the derivative along X of y -> Dphi(y).Y(y).
/// Uses X^T (D2phi Y + DY^T Dphi) when analytic pieces exist, else nested
/// central differences with the wider second-order step 1e-4*(1+|x|).
double second_lie(const VectorField& X, const VectorField& Y, const ScalarField& phi,
                  const Vec& x);

/// Lie bracket [X, Y](x) = DY(x) X(x) - DX(x) Y(x). The returned field's
/// Jacobian is numeric.
VectorField bracket(const VectorField& X, const VectorField& Y);

/// Dphi(x) . (DY(x) X(x)) -- the scalar obtained by applying the composed
/// field (XY) = DY X to phi. Assembled from second_lie and the Hessian
/// quadratic form: X(Y phi) - X^T D2phi Y.
double field_product_phi(const VectorField& X, const VectorField& Y, const ScalarField& phi,
                         const Vec& x);

/// One grid point that fails the pointwise stabilizability implication.
struct ClfViolation {
    std::size_t index;
    Vec x;
    std::string clause;  // "drift_nonnegative" | "bracket_vanishes"
    double f_phi, g_phi, bracket_phi;
};

struct ClfReport {
    std::size_t points_checked = 0;
    std::vector<ClfViolation> violations;
    bool pass() const { return violations.empty(); }
};

/// Classifies every grid point against the implication: where |g.phi| <= tol,
/// require f.phi < -tol, or |f.phi| <= tol with |[f,g].phi| > tol.
/// Violations are data, not errors. The unsuffixed entry runs the grid in
/// parallel when built with OpenMP; the _serial variant is the reference.
ClfReport check_clf_implication(const ControlSystem& sys, const ScalarField& phi,
                                const std::vector<Vec>& grid, double tol);
ClfReport check_clf_implication_serial(const ControlSystem& sys, const ScalarField& phi,
                                       const std::vector<Vec>& grid, double tol);

/// Spot check positive definiteness of phi on sample states (x != 0).
bool spot_check_positive_definite(const ScalarField& phi, const std::vector<Vec>& grid);

}  // namespace sdstab
