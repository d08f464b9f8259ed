#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dislab/errors.hpp"

namespace dislab {

using Vec = std::vector<double>;

// Dense row-major square-or-rectangular matrix. Dimensions here are tiny
// (d <= 16), so no fancy storage or BLAS; plain loops keep everything
// bitwise reproducible.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Vec operator+(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec operator-(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec operator*(double s, const Vec& a) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
    return r;
}

inline void axpy(double s, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double dist2(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline Vec matvec(const Mat& m, const Vec& x) {
    if (x.size() != m.cols) throw ShapeError("matvec: dimension mismatch");
    Vec r(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) r[i] += m(i, j) * x[j];
    return r;
}

inline Vec matvec_transposed(const Mat& m, const Vec& x) {
    if (x.size() != m.rows) throw ShapeError("matvec_transposed: dimension mismatch");
    Vec r(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) r[j] += m(i, j) * x[i];
    return r;
}

inline Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw ShapeError("matmul: dimension mismatch");
    Mat r(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols; ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}

inline Mat outer(const Vec& a, const Vec& b) {
    Mat r(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r(i, j) = a[i] * b[j];
    return r;
}

inline double frobenius_distance(const Mat& a, const Mat& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double max_asymmetry(const Mat& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = i + 1; j < m.cols; ++j) s = std::max(s, std::abs(m(i, j) - m(j, i)));
    return s;
}

// Cholesky factor L (lower) of a symmetric PSD matrix, with a small relative
// jitter retry for factors that sit on the PSD boundary.
inline Mat cholesky_psd(Mat a) {
    const std::size_t n = a.rows;
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += a(i, i);
    const double base_jitter = 1e-14 * std::max(trace, 1e-300);
    for (int attempt = 0; attempt < 8; ++attempt) {
        Mat l(n, n);
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double s = a(i, j);
                for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
                if (i == j) {
                    if (s <= 0.0) {
                        ok = false;
                        break;
                    }
                    l(i, i) = std::sqrt(s);
                } else {
                    l(i, j) = s / l(j, j);
                }
            }
        }
        if (ok) return l;
        const double jitter = base_jitter * std::pow(10.0, attempt);
        for (std::size_t i = 0; i < n; ++i) a(i, i) += jitter;
    }
    throw std::runtime_error("cholesky_psd: matrix not positive semidefinite");
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Mat& m) {
    for (double x : m.data)
        if (!std::isfinite(x)) return false;
    return true;
}

// Numerically safe log(sum(exp(v))).
inline double logsumexp(const Vec& v) {
    double m = -INFINITY;
    for (double x : v)
        if (x > m) m = x;
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace dislab
