#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "pathmc/errors.hpp"

namespace pathmc {
namespace detail {

// 15-point Kronrod rule with embedded 7-point Gauss rule.
// Nodes/weights for the positive half; index 7 is the center node.
inline constexpr double kKronrodX[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000};
inline constexpr double kKronrodW[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
// Gauss-7 weights for the node subset at indices 1, 3, 5 and the center.
inline constexpr double kGaussW[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469};

template <typename F>
inline void gauss_kronrod_15(const F& f, double a, double b, double* value,
                             double* error) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fk = 0.0;
    double fg = 0.0;
    for (int i = 0; i < 7; ++i) {
        const double dx = h * kKronrodX[i];
        const double s = f(c - dx) + f(c + dx);
        fk += kKronrodW[i] * s;
        if (i % 2 == 1) fg += kGaussW[i / 2] * s;
    }
    const double fc = f(c);
    fk += kKronrodW[7] * fc;
    fg += kGaussW[3] * fc;
    *value = fk * h;
    *error = std::abs((fk - fg) * h);
}

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

}  // namespace detail

// Adaptive Gauss-Kronrod integration of f over [a, b] to an absolute
// tolerance.  `split_points` seeds the initial partition (useful when the
// integrand has a known narrow feature the first rule application would
// otherwise miss).  Throws NumericalError if the subdivision budget runs out
// before the error estimate drops below tol.
template <typename F>
inline double integrate(const F& f, double a, double b, double abs_tol,
                        std::vector<double> split_points = {},
                        int max_segments = 4000) {
    if (!(b >= a)) throw InputError("integrate: requires b >= a");
    if (a == b) return 0.0;
    std::erase_if(split_points, [&](double x) { return !(x > a && x < b); });
    split_points.push_back(a);
    split_points.push_back(b);
    std::sort(split_points.begin(), split_points.end());
    split_points.erase(
        std::unique(split_points.begin(), split_points.end()),
        split_points.end());

    std::priority_queue<detail::Segment> segs;
    double total = 0.0;
    double err = 0.0;
    int count = 0;
    auto push = [&](double lo, double hi) {
        detail::Segment s{lo, hi, 0.0, 0.0};
        detail::gauss_kronrod_15(f, lo, hi, &s.value, &s.error);
        total += s.value;
        err += s.error;
        segs.push(s);
        ++count;
    };
    for (std::size_t i = 0; i + 1 < split_points.size(); ++i) {
        if (split_points[i + 1] > split_points[i])
            push(split_points[i], split_points[i + 1]);
    }

    while (err > abs_tol) {
        if (count >= max_segments)
            throw NumericalError("integrate: subdivision budget exhausted");
        detail::Segment worst = segs.top();
        segs.pop();
        total -= worst.value;
        err -= worst.error;
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b)
            throw NumericalError("integrate: interval too small to split");
        push(worst.a, mid);
        push(mid, worst.b);
    }
    return total;
}

}  // namespace pathmc
