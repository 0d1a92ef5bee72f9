#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pathmc/errors.hpp"
#include "pathmc/geometry.hpp"
#include "pathmc/rng.hpp"

namespace pathmc {

// Substream roles within one replica; keeping purposes on separate
// substreams means consumers can interleave them without perturbing either.
inline constexpr uint64_t kSubstreamPath = 0;
inline constexpr uint64_t kSubstreamThinning = 1;
inline constexpr uint64_t kSubstreamAux = 2;

// Strictly increasing sampling times starting at 0.
struct TimeGrid {
    std::vector<double> times;

    TimeGrid() = default;
    explicit TimeGrid(std::vector<double> t) : times(std::move(t)) { validate(); }

    // Uniform grid with `steps` intervals over [0, horizon].
    static TimeGrid uniform(double horizon, int steps) {
        if (!(horizon > 0)) throw InputError("TimeGrid: horizon must be positive");
        if (steps < 1) throw InputError("TimeGrid: need >= 1 step");
        std::vector<double> t(static_cast<std::size_t>(steps) + 1);
        for (int i = 0; i <= steps; ++i)
            t[static_cast<std::size_t>(i)] = horizon * static_cast<double>(i) /
                                             static_cast<double>(steps);
        t.back() = horizon;
        return TimeGrid(std::move(t));
    }

    std::size_t n_points() const { return times.size(); }
    std::size_t n_steps() const { return times.size() - 1; }
    double horizon() const { return times.back(); }

    void validate() const {
        if (times.size() < 2) throw InputError("TimeGrid: need >= 2 points");
        if (times.front() != 0.0) throw InputError("TimeGrid: must start at 0");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1]))
                throw InputError("TimeGrid: times must be strictly increasing");
    }
};

// Default skeleton resolution: 2^9 uniform steps.
inline TimeGrid default_grid(double horizon = 1.0, int log2_steps = 9) {
    return TimeGrid::uniform(horizon, 1 << log2_steps);
}

enum class PathLaw { bm, bridge };

// A sampled path skeleton: point j lives at pts[j*dim .. j*dim+dim).
// The (seed, replica) pair pins the draw: resampling with the same pair is
// bitwise identical regardless of scheduling.
struct PathSample {
    TimeGrid grid;
    int dim = 0;
    std::vector<double> pts;
    PathLaw law = PathLaw::bm;
    Point a;  // start point
    Point b;  // bridge endpoint (empty for plain Brownian motion)
    uint64_t seed = 0;
    uint64_t replica = 0;

    std::span<const double> at(std::size_t j) const {
        return {pts.data() + j * static_cast<std::size_t>(dim),
                static_cast<std::size_t>(dim)};
    }
};

// Brownian motion from `start` evaluated on `grid`.
inline PathSample sample_bm(const Point& start, const TimeGrid& grid,
                            uint64_t seed, uint64_t replica) {
    if (start.empty()) throw InputError("sample_bm: empty start point");
    const int d = static_cast<int>(start.size());
    PathSample p;
    p.grid = grid;
    p.dim = d;
    p.law = PathLaw::bm;
    p.a = start;
    p.seed = seed;
    p.replica = replica;
    p.pts.resize(grid.n_points() * start.size());
    CounterRng rng(seed, replica, kSubstreamPath);
    for (int i = 0; i < d; ++i) p.pts[static_cast<std::size_t>(i)] = start[i];
    for (std::size_t j = 1; j < grid.n_points(); ++j) {
        const double sd = std::sqrt(grid.times[j] - grid.times[j - 1]);
        for (int i = 0; i < d; ++i)
            p.pts[j * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] =
                p.pts[(j - 1) * static_cast<std::size_t>(d) +
                      static_cast<std::size_t>(i)] +
                sd * rng.normal();
    }
    return p;
}

namespace detail {

// One conditional step of the unit-horizon bridge: from value x at time t to
// time s (t < s < 1), given endpoint b at time 1.
inline void bridge_step_moments(double t, double s, double x, double b,
                                double* mean, double* var) {
    const double w = (s - t) / (1.0 - t);
    *mean = x + w * (b - x);
    *var = (s - t) * (1.0 - s) / (1.0 - t);
}

}  // namespace detail

// Pinned path from a to b on [0, 1], sampled sequentially through the
// conditional transition law; the final point is set to b exactly.
inline PathSample sample_bridge(const Point& a, const Point& b,
                                const TimeGrid& grid, uint64_t seed,
                                uint64_t replica) {
    if (a.empty() || a.size() != b.size())
        throw InputError("sample_bridge: endpoint dimension mismatch");
    if (std::abs(grid.horizon() - 1.0) > 1e-15)
        throw InputError("sample_bridge: grid horizon must be 1");
    const int d = static_cast<int>(a.size());
    PathSample p;
    p.grid = grid;
    p.dim = d;
    p.law = PathLaw::bridge;
    p.a = a;
    p.b = b;
    p.seed = seed;
    p.replica = replica;
    p.pts.resize(grid.n_points() * a.size());
    CounterRng rng(seed, replica, kSubstreamPath);
    for (int i = 0; i < d; ++i) p.pts[static_cast<std::size_t>(i)] = a[i];
    const std::size_t last = grid.n_points() - 1;
    for (std::size_t j = 1; j < last; ++j) {
        const double t = grid.times[j - 1];
        const double s = grid.times[j];
        for (int i = 0; i < d; ++i) {
            double mean = 0.0, var = 0.0;
            detail::bridge_step_moments(
                t, s,
                p.pts[(j - 1) * static_cast<std::size_t>(d) +
                      static_cast<std::size_t>(i)],
                b[static_cast<std::size_t>(i)], &mean, &var);
            p.pts[j * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] =
                mean + std::sqrt(var) * rng.normal();
        }
    }
    for (int i = 0; i < d; ++i)
        p.pts[last * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] =
            b[static_cast<std::size_t>(i)];
    return p;
}

// Probability that a one-dimensional bridge over a step of length dt, with
// boundary distances q0 and q1 >= 0 at the step endpoints, dips below zero in
// between: exp(-2 q0 q1 / dt).  Equals 1 when an endpoint sits on the
// boundary.
inline double crossing_correction(double q0, double q1, double dt) {
    if (!(dt > 0)) throw InputError("crossing_correction: dt must be positive");
    if (q0 < 0 || q1 < 0)
        throw InputError("crossing_correction: boundary distances must be >= 0");
    return std::exp(-2.0 * q0 * q1 / dt);
}

enum class MinQMode { discrete, corrected };

// Indicator that the path kept its boundary distance at or above `level`.
// discrete: checks the skeleton only.  corrected: additionally flips the
// indicator to false with the per-step probability that the continuous
// interpolant dipped below `level` between skeleton points (Bernoulli
// thinning), removing the leading-order skeleton bias.
inline bool min_q_functional(const Domain& dom, const PathSample& path,
                             double level, MinQMode mode, CounterRng& thinning) {
    if (path.dim != dom.dim())
        throw InputError("min_q_functional: path/domain dimension mismatch");
    double q_prev = dom.signed_distance(path.at(0)) - level;
    if (q_prev < 0) return false;
    for (std::size_t j = 1; j < path.grid.n_points(); ++j) {
        const double q = dom.signed_distance(path.at(j)) - level;
        if (q < 0) return false;
        if (mode == MinQMode::corrected) {
            const double dt = path.grid.times[j] - path.grid.times[j - 1];
            const double expo = 2.0 * q_prev * q / dt;
            // Skip the draw only when the crossing probability underflows
            // below anything a 53-bit uniform could register.
            if (expo < 40.0 && thinning.uniform01() < std::exp(-expo))
                return false;
        }
        q_prev = q;
    }
    return true;
}

inline bool min_q_functional(const Domain& dom, const PathSample& path,
                             double level, MinQMode mode) {
    CounterRng thinning(path.seed, path.replica, kSubstreamThinning);
    return min_q_functional(dom, path, level, mode, thinning);
}

// Cameron-Martin norm of the piecewise-linear interpolant of (a - b):
// sqrt(sum |delta(a-b)|^2 / delta t).  Grids must match exactly.
inline double h0_norm(const PathSample& pa, const PathSample& pb) {
    if (pa.dim != pb.dim) throw InputError("h0_norm: dimension mismatch");
    if (pa.grid.times != pb.grid.times)
        throw InputError("h0_norm: paths must share one grid");
    double s = 0.0;
    const std::size_t d = static_cast<std::size_t>(pa.dim);
    for (std::size_t j = 1; j < pa.grid.n_points(); ++j) {
        const double dt = pa.grid.times[j] - pa.grid.times[j - 1];
        double inc2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double da = pa.pts[j * d + i] - pa.pts[(j - 1) * d + i];
            const double db = pb.pts[j * d + i] - pb.pts[(j - 1) * d + i];
            inc2 += (da - db) * (da - db);
        }
        s += inc2 / dt;
    }
    return std::sqrt(s);
}

// Dyadic refinement: inserts the midpoint of every interval, drawn from the
// conditional law given the surrounding skeleton (exact for both supported
// laws, since conditioning on both interval endpoints localizes the law).
// Refining a path repeatedly yields nested evaluations of one underlying
// continuous trajectory, which is what grid-convergence studies need.
inline PathSample refine_dyadic(const PathSample& path, CounterRng& rng) {
    PathSample out;
    out.dim = path.dim;
    out.law = path.law;
    out.a = path.a;
    out.b = path.b;
    out.seed = path.seed;
    out.replica = path.replica;
    const std::size_t d = static_cast<std::size_t>(path.dim);
    const std::size_t n = path.grid.n_points();
    std::vector<double> times;
    times.reserve(2 * n - 1);
    out.pts.reserve((2 * n - 1) * d);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double t0 = path.grid.times[j];
        const double t1 = path.grid.times[j + 1];
        const double tm = 0.5 * (t0 + t1);
        times.push_back(t0);
        for (std::size_t i = 0; i < d; ++i) out.pts.push_back(path.pts[j * d + i]);
        times.push_back(tm);
        const double sd = 0.5 * std::sqrt(t1 - t0);
        for (std::size_t i = 0; i < d; ++i) {
            const double mid =
                0.5 * (path.pts[j * d + i] + path.pts[(j + 1) * d + i]);
            out.pts.push_back(mid + sd * rng.normal());
        }
    }
    times.push_back(path.grid.times.back());
    for (std::size_t i = 0; i < d; ++i)
        out.pts.push_back(path.pts[(n - 1) * d + i]);
    out.grid = TimeGrid(std::move(times));
    return out;
}

}  // namespace pathmc
