#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace autoscope::linalg {

/// In-place lower Cholesky of a symmetric positive-definite n×n matrix
/// (row-major, full storage; the upper triangle is zeroed). Returns false if
/// a non-positive pivot is hit.
inline bool cholesky(std::vector<double>& a, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        const double ljj = std::sqrt(d);
        a[j * n + j] = ljj;
        const double inv = 1.0 / ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s * inv;
        }
        for (std::size_t k = j + 1; k < n; ++k) a[j * n + k] = 0.0;
    }
    return true;
}

/// Solve L x = b (forward substitution), L lower triangular.
inline void solve_lower(const std::vector<double>& L, std::size_t n, std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[i];
        const double* row = &L[i * n];
        for (std::size_t k = 0; k < i; ++k) s -= row[k] * x[k];
        x[i] = s / row[i];
    }
}

/// Solve L^T x = b (backward substitution).
inline void solve_lower_transposed(const std::vector<double>& L, std::size_t n,
                                   std::vector<double>& x) {
    for (std::size_t ii = n; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= L[k * n + ii] * x[k];
        x[ii] = s / L[ii * n + ii];
    }
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace autoscope::linalg
