#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "sdstab/errors.hpp"

namespace sdstab {

using Vec = std::vector<double>;

/// Dense row-major matrix; dimensions here are tiny (state dims <= ~6).
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec add(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("add: size mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("sub: size mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec scale(double c, const Vec& a) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
    return r;
}

/// a + c*b
inline Vec axpy(const Vec& a, double c, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("axpy: size mismatch");
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + c * b[i];
    return r;
}

inline Vec matvec(const Mat& m, const Vec& v) {
    if (m.cols != v.size()) throw DimensionError("matvec: size mismatch");
    Vec r(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) r[i] += m(i, j) * v[j];
    return r;
}

/// m^T * v
inline Vec matvec_t(const Mat& m, const Vec& v) {
    if (m.rows != v.size()) throw DimensionError("matvec_t: size mismatch");
    Vec r(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) r[j] += m(i, j) * v[i];
    return r;
}

/// v^T * m * w
inline double quadratic_form(const Vec& v, const Mat& m, const Vec& w) {
    return dot(v, matvec(m, w));
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Eigenvalues of a small symmetric matrix via cyclic Jacobi rotations.
/// Good to ~1e-14 for the n<=8 matrices used here.
inline std::vector<double> symmetric_eigenvalues(Mat a) {
    const std::size_t n = a.rows;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    return ev;
}

/// Numeric rank of a stack of row vectors: singular values above
/// rel_tol * sigma_max count toward the rank.
inline std::size_t numeric_rank(const std::vector<Vec>& rows, std::size_t dim,
                                double rel_tol = 1e-8) {
    if (rows.empty()) return 0;
    Mat gram(dim, dim);
    for (const Vec& r : rows) {
        if (r.size() != dim) throw DimensionError("numeric_rank: row size mismatch");
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) gram(i, j) += r[i] * r[j];
    }
    std::vector<double> ev = symmetric_eigenvalues(gram);
    double max_sv = 0.0;
    for (double e : ev) max_sv = std::max(max_sv, std::sqrt(std::max(e, 0.0)));
    if (max_sv == 0.0) return 0;
    std::size_t rank = 0;
    for (double e : ev)
        if (std::sqrt(std::max(e, 0.0)) > rel_tol * max_sv) ++rank;
    return rank;
}

}  // namespace sdstab
