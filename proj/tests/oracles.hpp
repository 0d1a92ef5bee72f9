// Independent reference values used by the test suites.
//
// Everything here is derived from first principles with standard-library
// tools only (closed-form Gaussian identities, Gauss-Legendre quadrature,
// and a plain Euler scheme driven by std::mt19937_64), so agreement with
// the library is a genuine cross-check rather than a tautology.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracles {

inline double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double phi_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
}

// P[eta <= t] for the defective first-passage law of r + K s + W_s to 0:
//   Phi(-(r + K t)/sqrt(t)) + exp(-2 K r) Phi((K t - r)/sqrt(t)).
inline double eta_cdf_closed(double r, double K, double t) {
    if (t <= 0.0) return 0.0;
    const double s = std::sqrt(t);
    return phi_cdf(-(r + K * t) / s) + std::exp(-2.0 * K * r) * phi_cdf((K * t - r) / s);
}

// P[Brownian motion started at x > 0 stays positive up to time u].
inline double halfspace_stay(double x, double u) {
    return 2.0 * phi_cdf(x / std::sqrt(u)) - 1.0;
}

// Gauss-Legendre nodes/weights on [-1, 1] via Newton iteration.
struct GlRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GlRule gauss_legendre(int n) {
    GlRule rule;
    rule.nodes.resize(static_cast<size_t>(n));
    rule.weights.resize(static_cast<size_t>(n));
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < n; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[static_cast<size_t>(i)] = x;
        rule.weights[static_cast<size_t>(i)] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return rule;
}

// Probability that a scalar Brownian bridge from a (time 0) to b (time 1)
// lies inside [lo, hi] at every interior time in `times` (strictly
// increasing, all in (0, 1)).  Backward induction over nested
// Gauss-Legendre quadrature of the sequential conditional factorisation:
// given X_{t} = x, the next pinned value at s has
//   mean = x + (s - t) / (1 - t) * (b - x),  var = (s - t)(1 - s)/(1 - t).
inline double bridge_box_probability(const std::vector<double>& times, double a,
                                     double b, double lo, double hi,
                                     int n_nodes = 80) {
    if (times.empty()) return 1.0;
    const GlRule rule = gauss_legendre(n_nodes);
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    std::vector<double> grid(rule.nodes.size());
    for (size_t i = 0; i < grid.size(); ++i) grid[i] = mid + half * rule.nodes[i];

    const size_t m = times.size();
    // value[i] = P[remaining points stay in box | current point = grid[i]]
    std::vector<double> value(grid.size(), 1.0), next(grid.size());
    for (size_t layer = m; layer-- > 1;) {
        const double t = times[layer - 1], s = times[layer];
        const double var = (s - t) * (1.0 - s) / (1.0 - t);
        const double sd = std::sqrt(var);
        for (size_t i = 0; i < grid.size(); ++i) {
            const double x = grid[i];
            const double mean = x + (s - t) / (1.0 - t) * (b - x);
            double acc = 0.0;
            for (size_t j = 0; j < grid.size(); ++j)
                acc += rule.weights[j] * phi_pdf((grid[j] - mean) / sd) / sd * value[j];
            next[i] = acc * half;
        }
        value.swap(next);
    }
    const double t0 = 0.0, s0 = times[0];
    const double var0 = (s0 - t0) * (1.0 - s0) / (1.0 - t0);
    const double sd0 = std::sqrt(var0);
    const double mean0 = a + (s0 - t0) / (1.0 - t0) * (b - a);
    double acc = 0.0;
    for (size_t j = 0; j < grid.size(); ++j)
        acc += rule.weights[j] * phi_pdf((grid[j] - mean0) / sd0) / sd0 * value[j];
    return acc * half;
}

// Probability that scalar Brownian motion from a stays inside [lo, hi] at
// every time in `times` (strictly increasing, > 0).  Same backward induction
// as above with the Markov transition N(x, s - t).
inline double bm_box_probability(const std::vector<double>& times, double a,
                                 double lo, double hi, int n_nodes = 80) {
    if (times.empty()) return 1.0;
    const GlRule rule = gauss_legendre(n_nodes);
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    std::vector<double> grid(rule.nodes.size());
    for (size_t i = 0; i < grid.size(); ++i) grid[i] = mid + half * rule.nodes[i];

    const size_t m = times.size();
    std::vector<double> value(grid.size(), 1.0), next(grid.size());
    for (size_t layer = m; layer-- > 1;) {
        const double sd = std::sqrt(times[layer] - times[layer - 1]);
        for (size_t i = 0; i < grid.size(); ++i) {
            double acc = 0.0;
            for (size_t j = 0; j < grid.size(); ++j)
                acc += rule.weights[j] * phi_pdf((grid[j] - grid[i]) / sd) / sd * value[j];
            next[i] = acc * half;
        }
        value.swap(next);
    }
    const double sd0 = std::sqrt(times[0]);
    double acc = 0.0;
    for (size_t j = 0; j < grid.size(); ++j)
        acc += rule.weights[j] * phi_pdf((grid[j] - a) / sd0) / sd0 * value[j];
    return acc * half;
}

// Dirichlet heat kernel of (1/2) d^2/dx^2 on the interval (alpha, beta) via
// the reflection (image) series:
//   p(t, x, y) = sum_k  phi_t(y - x + 2kL) - phi_t(y + x - 2 alpha + 2kL).
inline double interval_killed_kernel(double t, double x, double y, double alpha,
                                     double beta, int kmax = 40) {
    const double L = beta - alpha;
    const double xs = x - alpha, ys = y - alpha;
    const double inv_sd = 1.0 / std::sqrt(t);
    auto dens = [&](double z) { return phi_pdf(z * inv_sd) * inv_sd; };
    double s = 0.0;
    for (int k = -kmax; k <= kmax; ++k) {
        const double shift = 2.0 * k * L;
        s += dens(ys - xs + shift) - dens(ys + xs + shift);
    }
    return s;
}

// P[standard Brownian bridge a -> b over [0,1] stays inside (r, 1-r)].
inline double bridge_interval_stay(double r, double a, double b) {
    const double free_kernel = phi_pdf(b - a);
    return interval_killed_kernel(1.0, a, b, r, 1.0 - r) / free_kernel;
}

// P[bridge stays in [0,1] AND its distance to {0,1} dips to r or below].
inline double bridge_interval_shell(double r, double a, double b) {
    return bridge_interval_stay(0.0, a, b) - bridge_interval_stay(r, a, b);
}

// P[Brownian motion from a stays inside (r, 1-r) up to time 1]: the image
// series integrated in the endpoint, term by term, with Gaussian CDFs.
inline double bm_interval_stay(double r, double a, int kmax = 40) {
    const double alpha = r, beta = 1.0 - r;
    const double L = beta - alpha;
    const double xs = a - alpha;
    double s = 0.0;
    for (int k = -kmax; k <= kmax; ++k) {
        const double shift = 2.0 * k * L;
        s += phi_cdf(L - xs + shift) - phi_cdf(-xs + shift);
        s -= phi_cdf(L + xs + shift) - phi_cdf(xs + shift);
    }
    return s;
}

inline double bm_interval_shell(double r, double a) {
    return bm_interval_stay(0.0, a) - bm_interval_stay(r, a);
}

// Exact two-window dip law for a bridge a -> b over [0,1] on the unit
// interval: the path must stay inside (0,1) throughout, and its distance to
// the boundary must dip to r or below somewhere in [0, s1] (single) and in
// both [0, s1] and [s1, s2] (joint).  Inclusion-exclusion over the "no dip
// in window" events writes every term as a product of killed kernels glued
// by Gauss-Legendre quadrature over the window-junction values.
struct TwoWindowLaw {
    double joint;
    double single;
};

inline TwoWindowLaw two_window_interval_law(double r, double a, double b,
                                            double s1, double s2,
                                            int n_nodes = 96) {
    const GlRule rule = gauss_legendre(n_nodes);
    const double lo = r, hi = 1.0 - r;
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    const size_t n = rule.nodes.size();
    std::vector<double> g(n);
    for (size_t i = 0; i < n; ++i) g[i] = mid + half * rule.nodes[i];

    // Everything below is an unnormalised pinned weight; divide by the free
    // kernel phi(b - a) at the end.
    const double stay = interval_killed_kernel(1.0, a, b, 0.0, 1.0);

    std::vector<double> tail2(n);  // stay-in-(0,1) weight from (s2, z) to (1, b)
    for (size_t j = 0; j < n; ++j)
        tail2[j] = interval_killed_kernel(1.0 - s2, g[j], b, 0.0, 1.0);

    double a1 = 0.0, a12 = 0.0;
    for (size_t j = 0; j < n; ++j) {
        a1 += rule.weights[j] * interval_killed_kernel(s1, a, g[j], lo, hi) *
              interval_killed_kernel(1.0 - s1, g[j], b, 0.0, 1.0);
        a12 += rule.weights[j] * interval_killed_kernel(s2, a, g[j], lo, hi) * tail2[j];
    }
    a1 *= half;
    a12 *= half;

    // No dip in the middle window only: quadrature over both junctions.
    double a2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double inner = 0.0;
        for (size_t j = 0; j < n; ++j)
            inner += rule.weights[j] *
                     interval_killed_kernel(s2 - s1, g[i], g[j], lo, hi) * tail2[j];
        a2 += rule.weights[i] * interval_killed_kernel(s1, a, g[i], 0.0, 1.0) *
              inner * half;
    }
    a2 *= half;

    const double norm = phi_pdf(b - a);
    return {(stay - a1 - a2 + a12) / norm, (stay - a1) / norm};
}

// Euler estimate (with exact inter-step barrier-crossing thinning) of
//   E[ exp(-lambda tau) ; exit of [0, alpha) through the top ]
// for X_t = r + K t + W_t, 0 <= r < alpha, K >= 0.  Returns {mean, stderr}.
inline std::pair<double, double> euler_exit_upper(double r, double alpha, double K,
                                                  double lambda, double dt,
                                                  uint64_t n_paths, uint64_t seed,
                                                  double horizon = 20.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double sd = std::sqrt(dt);
    const uint64_t max_steps = static_cast<uint64_t>(std::ceil(horizon / dt));
    double sum = 0.0, sum_sq = 0.0;
    for (uint64_t p = 0; p < n_paths; ++p) {
        double x = r, v = 0.0;
        for (uint64_t j = 0; j < max_steps; ++j) {
            const double xn = x + K * dt + sd * gauss(gen);
            const double t = static_cast<double>(j + 1) * dt;
            if (xn <= 0.0) break;                       // absorbed below
            if (xn >= alpha) { v = std::exp(-lambda * t); break; }
            const double e_low = 2.0 * x * xn / dt;
            if (e_low < 40.0 && unif(gen) < std::exp(-e_low)) break;
            const double e_up = 2.0 * (alpha - x) * (alpha - xn) / dt;
            if (e_up < 40.0 && unif(gen) < std::exp(-e_up)) {
                v = std::exp(-lambda * t);
                break;
            }
            x = xn;
        }
        sum += v;
        sum_sq += v * v;
    }
    const double n = static_cast<double>(n_paths);
    const double mean = sum / n;
    const double var = (sum_sq / n - mean * mean) / (n - 1.0);
    return {mean, std::sqrt(var > 0.0 ? var : 0.0)};
}

}  // namespace oracles
