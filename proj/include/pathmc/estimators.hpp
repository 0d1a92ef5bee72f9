#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pathmc/errors.hpp"
#include "pathmc/gauss_path.hpp"
#include "pathmc/geometry.hpp"
#include "pathmc/rng.hpp"
#include "pathmc/stats.hpp"

namespace pathmc {

// One Monte Carlo cell: a frequency (or scaled frequency) with its standard
// error and enough bookkeeping to reproduce it exactly.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    uint64_t n = 0;
    uint64_t seed = 0;
    std::map<std::string, std::string> meta;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_std_error = 0.0;
    int n_points = 0;
    // Indices of input points dropped because their value was nonpositive
    // (they have no logarithm; dropping is flagged, never silent).
    std::vector<int> dropped;
};

struct Verdict {
    bool pass = false;
    // Raw slack bound - value.  The pass decision additionally grants the
    // k_sigma noise allowance, so a pass with slightly negative margin means
    // the point estimate exceeds the bound by less than the noise band.
    double margin = 0.0;
    std::string rule;
};

// Statistical one-sided bound test: pass iff value - k_sigma * std_error
// stays at or below `bound`.
inline Verdict verdict_bound(const Estimate& e, double bound, double k_sigma,
                             std::string rule) {
    if (!(k_sigma >= 0)) throw InputError("verdict_bound: k_sigma must be >= 0");
    Verdict v;
    v.margin = bound - e.value;
    v.pass = e.value - k_sigma * e.std_error <= bound;
    v.rule = std::move(rule);
    return v;
}

// Ordinary least squares of log(value) against log(x).  Requires at least
// three usable points after dropping nonpositive values.
inline SlopeFit fit_loglog_slope(const std::vector<double>& x,
                                 const std::vector<double>& value) {
    if (x.size() != value.size())
        throw InputError("fit_loglog_slope: length mismatch");
    SlopeFit fit;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0)) throw InputError("fit_loglog_slope: x must be positive");
        if (value[i] > 0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(value[i]));
        } else {
            fit.dropped.push_back(static_cast<int>(i));
        }
    }
    const std::size_t n = lx.size();
    if (n < 3)
        throw InputError("fit_loglog_slope: need >= 3 positive points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0)) throw InputError("fit_loglog_slope: degenerate abscissae");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
        rss += e * e;
    }
    fit.slope_std_error =
        n > 2 ? std::sqrt(rss / static_cast<double>(n - 2) / sxx) : 0.0;
    fit.n_points = static_cast<int>(n);
    return fit;
}

struct ExecPolicy {
    int workers = 1;
};

namespace detail {

// Replicas are split into fixed-size chunks whose boundaries do not depend
// on the worker count; workers claim chunks through an atomic cursor and the
// per-chunk results are combined in chunk order afterwards.  Together with
// counter-based per-replica streams this makes every estimate bitwise
// independent of the parallel schedule.
inline constexpr uint64_t kChunkSize = 8192;

template <typename Result, typename Fn>
inline std::vector<Result> run_chunked(uint64_t n, const ExecPolicy& policy,
                                       const Fn& fn) {
    const uint64_t n_chunks = (n + kChunkSize - 1) / kChunkSize;
    std::vector<Result> results(static_cast<std::size_t>(n_chunks));
    std::atomic<uint64_t> cursor{0};
    auto work = [&]() {
        for (;;) {
            const uint64_t c = cursor.fetch_add(1);
            if (c >= n_chunks) break;
            const uint64_t lo = c * kChunkSize;
            const uint64_t hi = std::min(n, lo + kChunkSize);
            results[static_cast<std::size_t>(c)] = fn(lo, hi);
        }
    };
    const int workers = std::max(1, std::min(policy.workers, 64));
    if (workers == 1 || n_chunks <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return results;
}

// Shared streaming kernel behind every path-functional estimator.  Walks one
// replica of the configured law step by step, maintaining
//   - the corrected stay indicator at level 0 (skeleton check plus Bernoulli
//     thinning by the between-step boundary-crossing probability), and
//   - corrected dip indicators at each requested level r: the skeleton check
//     q < r plus per-step thinning by the probability that the linearized
//     boundary-distance bridge dipped below r between skeleton points, over
//     the whole path and optionally restricted to two time windows.
// Path increments live on substream 0 and thinning on substream 1, matching
// sample_bm / sample_bridge and min_q_functional.  At most one thinning
// uniform is consumed per step, shared by every crossing decision of that
// step; because the per-step crossing probability grows with the level, the
// shared uniform couples the indicators comonotonically — dips are nested
// across levels replica by replica and a thinning kill at level 0 registers
// as a dip at every level, exactly the continuum joint law of nested
// crossing events under the local half-space linearization.  When no dip
// level is undecided the pattern reduces to one uniform per step with
// level-0 crossing exponent < 40, bitwise the min_q_functional discipline,
// so survival-only runs and runs whose dip levels die on the first skeleton
// point stay bitwise comparable.
struct PathEventSpec {
    const Domain* dom = nullptr;
    Point a;
    Point b;  // empty: free right endpoint (plain Brownian motion)
    TimeGrid grid;
    std::vector<double> r_list;
    bool windows = false;
    double s1 = 0.0, s2 = 0.0;
    uint64_t seed = 0;
};

struct PathEventCounts {
    uint64_t n = 0;
    uint64_t stay = 0;
    std::vector<uint64_t> full;   // stay && dipped below level r somewhere
    std::vector<uint64_t> w1;     // stay && dipped below level r in [0, s1]
    std::vector<uint64_t> joint;  // stay && dipped below level r in both windows

    void init(std::size_t nr) {
        full.assign(nr, 0);
        w1.assign(nr, 0);
        joint.assign(nr, 0);
    }
    void add(const PathEventCounts& o) {
        n += o.n;
        stay += o.stay;
        for (std::size_t i = 0; i < full.size(); ++i) {
            full[i] += o.full[i];
            w1[i] += o.w1[i];
            joint[i] += o.joint[i];
        }
    }
};

inline PathEventCounts run_path_events(const PathEventSpec& spec,
                                       uint64_t replica_lo, uint64_t replica_hi) {
    const Domain& dom = *spec.dom;
    const int d = dom.dim();
    const bool bridge = !spec.b.empty();
    const std::size_t n_pts = spec.grid.n_points();
    const std::size_t last = n_pts - 1;
    const std::size_t nr = spec.r_list.size();

    // Per-step coefficients hoisted out of the replica loop.
    std::vector<double> sq_dt(n_pts, 0.0), wgt(n_pts, 0.0), sd(n_pts, 0.0);
    std::vector<double> inv_dt(n_pts, 0.0);
    for (std::size_t j = 1; j < n_pts; ++j) {
        const double t0 = spec.grid.times[j - 1];
        const double t1 = spec.grid.times[j];
        inv_dt[j] = 1.0 / (t1 - t0);
        sq_dt[j] = std::sqrt(t1 - t0);
        if (bridge && j < last) {
            wgt[j] = (t1 - t0) / (1.0 - t0);
            sd[j] = std::sqrt((t1 - t0) * (1.0 - t1) / (1.0 - t0));
        }
    }

    // Window membership, up to roundoff slack.  A skeleton point belongs to
    // a window when its time lies inside; a step belongs only when both of
    // its endpoints do, so a step straddling a window edge contributes no
    // between-point crossing to either side (its endpoints still carry the
    // skeleton checks).
    const double w_eps = 1e-15;
    std::vector<uint8_t> pt_w1, pt_w2, st_w1, st_w2;
    if (spec.windows) {
        pt_w1.assign(n_pts, 0);
        pt_w2.assign(n_pts, 0);
        st_w1.assign(n_pts, 0);
        st_w2.assign(n_pts, 0);
        for (std::size_t j = 0; j < n_pts; ++j) {
            const double t = spec.grid.times[j];
            pt_w1[j] = t <= spec.s1 + w_eps ? 1 : 0;
            pt_w2[j] = (t >= spec.s1 - w_eps && t <= spec.s2 + w_eps) ? 1 : 0;
        }
        for (std::size_t j = 1; j < n_pts; ++j) {
            st_w1[j] = (pt_w1[j - 1] && pt_w1[j]) ? 1 : 0;
            st_w2[j] = (pt_w2[j - 1] && pt_w2[j]) ? 1 : 0;
        }
    }

    PathEventCounts out;
    out.init(nr);
    out.n = replica_hi - replica_lo;
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<uint8_t> dip_full(nr, 0), dip_w1(nr, 0), dip_w2(nr, 0);
    for (uint64_t rep = replica_lo; rep < replica_hi; ++rep) {
        CounterRng path_rng(spec.seed, rep, kSubstreamPath);
        CounterRng thin_rng(spec.seed, rep, kSubstreamThinning);
        std::copy(spec.a.begin(), spec.a.end(), x.begin());
        double q_prev = dom.signed_distance(x);
        bool alive = q_prev >= 0.0;
        std::fill(dip_full.begin(), dip_full.end(), 0);
        std::fill(dip_w1.begin(), dip_w1.end(), 0);
        std::fill(dip_w2.begin(), dip_w2.end(), 0);
        for (std::size_t k = 0; k < nr; ++k) {
            if (q_prev < spec.r_list[k]) {
                dip_full[k] = 1;
                if (spec.windows) {
                    if (pt_w1[0]) dip_w1[k] = 1;
                    if (pt_w2[0]) dip_w2[k] = 1;
                }
            }
        }
        for (std::size_t j = 1; alive && j < n_pts; ++j) {
            if (!bridge) {
                for (int i = 0; i < d; ++i) x[static_cast<std::size_t>(i)] += sq_dt[j] * path_rng.normal();
            } else if (j < last) {
                for (int i = 0; i < d; ++i) {
                    const std::size_t ii = static_cast<std::size_t>(i);
                    x[ii] += wgt[j] * (spec.b[ii] - x[ii]) + sd[j] * path_rng.normal();
                }
            } else {
                std::copy(spec.b.begin(), spec.b.end(), x.begin());
            }
            const double q = dom.signed_distance(x);
            if (q < 0.0) {
                alive = false;
                break;
            }
            // One thinning uniform per step, drawn on first need and shared
            // by every crossing decision of the step.
            double u_step = 0.0;
            bool u_drawn = false;
            const double expo0 = 2.0 * q_prev * q * inv_dt[j];
            if (expo0 < 40.0) {
                u_step = thin_rng.uniform01();
                u_drawn = true;
                if (u_step < std::exp(-expo0)) {
                    alive = false;
                    break;
                }
            }
            for (std::size_t k = 0; k < nr; ++k) {
                const bool want_full = !dip_full[k];
                const bool want_w1 = spec.windows && !dip_w1[k];
                const bool want_w2 = spec.windows && !dip_w2[k];
                if (!(want_full || want_w1 || want_w2)) continue;
                const double r = spec.r_list[k];
                if (q < r) {
                    if (want_full) dip_full[k] = 1;
                    if (want_w1 && pt_w1[j]) dip_w1[k] = 1;
                    if (want_w2 && pt_w2[j]) dip_w2[k] = 1;
                    continue;
                }
                // A left endpoint below the level was already recorded by its
                // own skeleton check; only level-straddles from above remain.
                if (q_prev < r) continue;
                const bool apply_full = want_full;
                const bool apply_w1 = want_w1 && st_w1[j] != 0;
                const bool apply_w2 = want_w2 && st_w2[j] != 0;
                if (!(apply_full || apply_w1 || apply_w2)) continue;
                const double expo = 2.0 * (q_prev - r) * (q - r) * inv_dt[j];
                if (expo >= 40.0) continue;
                if (!u_drawn) {
                    u_step = thin_rng.uniform01();
                    u_drawn = true;
                }
                if (u_step < std::exp(-expo)) {
                    if (apply_full) dip_full[k] = 1;
                    if (apply_w1) dip_w1[k] = 1;
                    if (apply_w2) dip_w2[k] = 1;
                }
            }
            q_prev = q;
        }
        if (!alive) continue;
        ++out.stay;
        for (std::size_t k = 0; k < nr; ++k) {
            if (dip_full[k]) ++out.full[k];
            if (spec.windows) {
                if (dip_w1[k]) ++out.w1[k];
                if (dip_w1[k] && dip_w2[k]) ++out.joint[k];
            }
        }
    }
    return out;
}

inline PathEventCounts collect_path_events(const PathEventSpec& spec,
                                           uint64_t n_paths,
                                           const ExecPolicy& policy) {
    auto chunks = run_chunked<PathEventCounts>(
        n_paths, policy, [&](uint64_t lo, uint64_t hi) {
            return run_path_events(spec, lo, hi);
        });
    PathEventCounts total;
    total.init(spec.r_list.size());
    for (const auto& c : chunks) total.add(c);
    return total;
}

inline Estimate make_frequency_estimate(uint64_t count, uint64_t n,
                                        uint64_t seed) {
    Estimate e;
    e.n = n;
    e.seed = seed;
    e.value = static_cast<double>(count) / static_cast<double>(n);
    e.std_error = bernoulli_stderr(count, n);
    return e;
}

inline void require_interior(const Domain& dom, const Point& p,
                             const char* what) {
    if (static_cast<int>(p.size()) != dom.dim())
        throw InputError(std::string(what) + ": dimension mismatch");
    if (!(dom.signed_distance(p) > 0))
        throw InputError(std::string(what) + ": point must lie inside the domain");
}

// Start points on the boundary itself are legal for the free-path
// estimators (they die immediately under the crossing correction).
inline void require_in_closure(const Domain& dom, const Point& p,
                               const char* what) {
    if (static_cast<int>(p.size()) != dom.dim())
        throw InputError(std::string(what) + ": dimension mismatch");
    if (!(dom.signed_distance(p) >= 0))
        throw InputError(std::string(what) +
                         ": point must lie in the domain closure");
}

}  // namespace detail

// P[ motion from x keeps a nonnegative boundary distance up to time u ],
// corrected for between-step crossings by Bernoulli thinning.
inline Estimate estimate_survival(const Domain& dom, const Point& x, double u,
                                  uint64_t n_paths, int grid_steps,
                                  uint64_t seed,
                                  const ExecPolicy& policy = {}) {
    detail::require_in_closure(dom, x, "estimate_survival");
    if (n_paths < 2) throw InputError("estimate_survival: need >= 2 paths");
    detail::PathEventSpec spec;
    spec.dom = &dom;
    spec.a = x;
    spec.grid = TimeGrid::uniform(u, grid_steps);
    spec.seed = seed;
    auto counts = detail::collect_path_events(spec, n_paths, policy);
    Estimate e = detail::make_frequency_estimate(counts.stay, n_paths, seed);
    e.meta["experiment"] = "survival";
    e.meta["mode"] = "corrected";
    e.meta["u"] = std::to_string(u);
    e.meta["grid_steps"] = std::to_string(grid_steps);
    return e;
}

// P[ stays in the closure AND the boundary distance dips to r or below ] for
// Brownian paths from x over [0, u].  Both events are corrected: the stay
// event thins at level 0 and the dip event combines the skeleton check with
// per-step crossing thinning at level r, so between-point dips are counted
// instead of only skeleton minima (which decay one power of r too fast when
// r is small against the step scale).  The shared per-step uniform nests the
// dip events exactly across the whole r grid.
inline std::vector<Estimate> estimate_shell(const Domain& dom, const Point& x,
                                            double u,
                                            const std::vector<double>& r_list,
                                            uint64_t n_paths, int grid_steps,
                                            uint64_t seed,
                                            const ExecPolicy& policy = {}) {
    detail::require_in_closure(dom, x, "estimate_shell");
    if (r_list.empty()) throw InputError("estimate_shell: empty r list");
    if (n_paths < 2) throw InputError("estimate_shell: need >= 2 paths");
    detail::PathEventSpec spec;
    spec.dom = &dom;
    spec.a = x;
    spec.grid = TimeGrid::uniform(u, grid_steps);
    spec.r_list = r_list;
    spec.seed = seed;
    auto counts = detail::collect_path_events(spec, n_paths, policy);
    std::vector<Estimate> out;
    for (std::size_t k = 0; k < r_list.size(); ++k) {
        Estimate e = detail::make_frequency_estimate(counts.full[k], n_paths, seed);
        e.meta["experiment"] = "shell";
        e.meta["mode"] = "corrected (stay and dip both use per-step crossing thinning)";
        e.meta["r"] = std::to_string(r_list[k]);
        e.meta["u"] = std::to_string(u);
        e.meta["grid_steps"] = std::to_string(grid_steps);
        out.push_back(std::move(e));
    }
    return out;
}

// Bridge variant of the shell estimate on the unit horizon.  With b present
// the law is the pinned path from a to b; with b absent the right endpoint is
// free (plain Brownian motion), the one-sided setting.
inline std::vector<Estimate> estimate_bridge_shell(
    const Domain& dom, const Point& a, const std::optional<Point>& b,
    const std::vector<double>& r_list, uint64_t n_paths, int grid_steps,
    uint64_t seed, const ExecPolicy& policy = {}) {
    detail::require_interior(dom, a, "estimate_bridge_shell");
    if (b) detail::require_interior(dom, *b, "estimate_bridge_shell");
    if (r_list.empty()) throw InputError("estimate_bridge_shell: empty r list");
    if (n_paths < 2) throw InputError("estimate_bridge_shell: need >= 2 paths");
    detail::PathEventSpec spec;
    spec.dom = &dom;
    spec.a = a;
    if (b) spec.b = *b;
    spec.grid = TimeGrid::uniform(1.0, grid_steps);
    spec.r_list = r_list;
    spec.seed = seed;
    auto counts = detail::collect_path_events(spec, n_paths, policy);
    std::vector<Estimate> out;
    for (std::size_t k = 0; k < r_list.size(); ++k) {
        Estimate e = detail::make_frequency_estimate(counts.full[k], n_paths, seed);
        e.meta["experiment"] = "bridge_shell";
        e.meta["law"] = b ? "bridge" : "free-endpoint";
        e.meta["mode"] = "corrected (stay and dip both use per-step crossing thinning)";
        e.meta["r"] = std::to_string(r_list[k]);
        e.meta["grid_steps"] = std::to_string(grid_steps);
        out.push_back(std::move(e));
    }
    return out;
}

struct TwoWindowResult {
    // P[stay and both window minima <= r], indexed like r_list.
    std::vector<Estimate> joint;
    // P[stay and first-window minimum <= r] on the same paths; the joint
    // event is contained in this one replica by replica.
    std::vector<Estimate> single;
};

// Simultaneous near-boundary dips in two disjoint time windows [0, s1] and
// [s1, s2] under the pinned law.  Window dips use the same corrected event
// as the shell estimators, restricted to skeleton points and whole steps
// inside the window.
inline TwoWindowResult estimate_two_window(
    const Domain& dom, const Point& a, const Point& b, double s1, double s2,
    const std::vector<double>& r_list, uint64_t n_paths, int grid_steps,
    uint64_t seed, const ExecPolicy& policy = {}) {
    detail::require_interior(dom, a, "estimate_two_window");
    detail::require_interior(dom, b, "estimate_two_window");
    if (!(0.0 < s1 && s1 < s2 && s2 < 1.0))
        throw InputError("estimate_two_window: requires 0 < s1 < s2 < 1");
    if (r_list.empty()) throw InputError("estimate_two_window: empty r list");
    if (n_paths < 2) throw InputError("estimate_two_window: need >= 2 paths");
    detail::PathEventSpec spec;
    spec.dom = &dom;
    spec.a = a;
    spec.b = b;
    spec.grid = TimeGrid::uniform(1.0, grid_steps);
    spec.r_list = r_list;
    spec.windows = true;
    spec.s1 = s1;
    spec.s2 = s2;
    spec.seed = seed;
    auto counts = detail::collect_path_events(spec, n_paths, policy);
    TwoWindowResult res;
    for (std::size_t k = 0; k < r_list.size(); ++k) {
        Estimate ej = detail::make_frequency_estimate(counts.joint[k], n_paths, seed);
        ej.meta["experiment"] = "two_window";
        ej.meta["r"] = std::to_string(r_list[k]);
        ej.meta["s1"] = std::to_string(s1);
        ej.meta["s2"] = std::to_string(s2);
        ej.meta["grid_steps"] = std::to_string(grid_steps);
        res.joint.push_back(std::move(ej));
        Estimate e1 = detail::make_frequency_estimate(counts.w1[k], n_paths, seed);
        e1.meta["experiment"] = "two_window:first-window";
        e1.meta["r"] = std::to_string(r_list[k]);
        res.single.push_back(std::move(e1));
    }
    return res;
}

// Gradient-mass proxy sequence: n times the bridge-shell estimate at r = 1/n.
// All n values share one set of paths (one pass, common seeds), so the
// scaling identity versus a direct bridge-shell run at r = 1/n holds
// bitwise.
inline std::vector<Estimate> estimate_bv_gradient_sequence(
    const Domain& dom, const Point& a, const std::optional<Point>& b,
    const std::vector<int>& n_list, uint64_t n_paths, int grid_steps,
    uint64_t seed, const ExecPolicy& policy = {}) {
    if (n_list.empty()) throw InputError("estimate_bv_gradient_sequence: empty n list");
    std::vector<double> r_list;
    for (int n : n_list) {
        if (n < 1) throw InputError("estimate_bv_gradient_sequence: n must be >= 1");
        r_list.push_back(1.0 / static_cast<double>(n));
    }
    auto shells = estimate_bridge_shell(dom, a, b, r_list, n_paths, grid_steps,
                                        seed, policy);
    std::vector<Estimate> out;
    for (std::size_t k = 0; k < n_list.size(); ++k) {
        Estimate e = shells[k];
        const double scale = static_cast<double>(n_list[k]);
        e.value *= scale;
        e.std_error *= scale;
        e.meta["experiment"] = "bv_sequence";
        e.meta["n"] = std::to_string(n_list[k]);
        e.meta["identity"] = "value = n * bridge_shell(1/n), shared paths";
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace pathmc
