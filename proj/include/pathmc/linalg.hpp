#pragma once

#include <cmath>
#include <vector>

#include "pathmc/errors.hpp"

namespace pathmc {

// Eigendecomposition of a symmetric matrix: A = V diag(values) V^T with V
// stored column-major (vectors[i + n*k] is component i of eigenvector k).
struct EigenSym {
    int n = 0;
    std::vector<double> values;
    std::vector<double> vectors;
};

// Cyclic Jacobi rotations; ample for the small (m <= 64) covariance factors
// used here, and has no external dependencies.
inline EigenSym jacobi_eigen(std::vector<double> a, int n) {
    if (n < 1 || static_cast<int>(a.size()) != n * n)
        throw InputError("jacobi_eigen: bad matrix size");
    std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;
    auto A = [&](int i, int j) -> double& {
        return a[static_cast<std::size_t>(i) * n + j];
    };
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
        if (off < 1e-26) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(A(p, q)) < 1e-300) continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) +
                                  std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v[static_cast<std::size_t>(k) * n + p];
                    const double vkq = v[static_cast<std::size_t>(k) * n + q];
                    v[static_cast<std::size_t>(k) * n + p] = c * vkp - s * vkq;
                    v[static_cast<std::size_t>(k) * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    EigenSym e;
    e.n = n;
    e.values.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        e.values[static_cast<std::size_t>(i)] = A(i, i);
    e.vectors = std::move(v);
    return e;
}

// Builds f(A) = V diag(f(values)) V^T from a decomposition.
template <typename F>
inline std::vector<double> eigen_apply(const EigenSym& e, const F& f) {
    const int n = e.n;
    std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
    for (int k = 0; k < n; ++k) {
        const double fk = f(e.values[static_cast<std::size_t>(k)]);
        for (int i = 0; i < n; ++i) {
            const double vik = e.vectors[static_cast<std::size_t>(i) * n + k] * fk;
            for (int j = 0; j < n; ++j)
                out[static_cast<std::size_t>(i) * n + j] +=
                    vik * e.vectors[static_cast<std::size_t>(j) * n + k];
        }
    }
    return out;
}

inline void sym_matvec(const std::vector<double>& m, int n,
                       const double* x, double* y) {
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        const double* row = m.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) s += row[j] * x[j];
        y[i] = s;
    }
}

}  // namespace pathmc
