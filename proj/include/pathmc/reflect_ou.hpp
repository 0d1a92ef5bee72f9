#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "pathmc/errors.hpp"
#include "pathmc/gauss_path.hpp"
#include "pathmc/geometry.hpp"
#include "pathmc/linalg.hpp"
#include "pathmc/rng.hpp"
#include "pathmc/stats.hpp"

namespace pathmc {

// Finite-dimensional discretization of the pinned (or free-endpoint) path
// measure: the path is represented by its values at m interior grid times,
// jointly Gaussian around the mean path with a time-covariance factor Sigma
// acting identically on each space dimension.
//   pinned:       times i/(m+1), covariance min(s,t) - s t, linear mean a->b
//   free-endpoint: times i/m (endpoint included), covariance min(s,t),
//                  constant mean a
struct DiscretizedForm {
    Domain domain;
    Point a;
    Point b;  // empty for the free-endpoint variant
    int m = 0;
    int d = 0;
    std::vector<double> times;       // m grid times
    std::vector<double> mean;        // m*d mean configuration
    std::vector<double> sigma;       // m*m covariance factor
    std::vector<double> sigma_half;  // symmetric square root
    std::vector<double> sigma_inv;   // inverse (weights the local-time norm)

    bool one_sided() const { return b.empty(); }
};

inline DiscretizedForm build_discretization(const Domain& dom, const Point& a,
                                            const std::optional<Point>& b,
                                            int m) {
    if (m < 1) throw InputError("build_discretization: m must be >= 1");
    if (static_cast<int>(a.size()) != dom.dim())
        throw InputError("build_discretization: endpoint dimension mismatch");
    if (!(dom.signed_distance(a) > 0))
        throw InputError("build_discretization: a must lie inside the domain");
    if (b) {
        if (b->size() != a.size())
            throw InputError("build_discretization: endpoint dimension mismatch");
        if (!(dom.signed_distance(*b) > 0))
            throw InputError("build_discretization: b must lie inside the domain");
    }
    DiscretizedForm f{dom, a, b ? *b : Point{}, m, dom.dim(), {}, {}, {}, {}, {}};
    f.times.resize(static_cast<std::size_t>(m));
    const bool pinned = b.has_value();
    for (int i = 1; i <= m; ++i)
        f.times[static_cast<std::size_t>(i - 1)] =
            pinned ? static_cast<double>(i) / (m + 1)
                   : static_cast<double>(i) / m;
    f.sigma.resize(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double s = f.times[static_cast<std::size_t>(i)];
            const double t = f.times[static_cast<std::size_t>(j)];
            f.sigma[static_cast<std::size_t>(i) * m + j] =
                pinned ? std::min(s, t) - s * t : std::min(s, t);
        }
    const EigenSym eig = jacobi_eigen(f.sigma, m);
    double lam_max = 0.0;
    for (double v : eig.values) lam_max = std::max(lam_max, v);
    for (double v : eig.values)
        if (!(v > 1e-12 * lam_max))
            throw NumericalError("build_discretization: covariance not positive definite");
    f.sigma_half = eigen_apply(eig, [](double v) { return std::sqrt(v); });
    f.sigma_inv = eigen_apply(eig, [](double v) { return 1.0 / v; });
    // Factorization sanity: the square of the root must reproduce sigma.
    double worst = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int k = 0; k < m; ++k)
                s += f.sigma_half[static_cast<std::size_t>(i) * m + k] *
                     f.sigma_half[static_cast<std::size_t>(k) * m + j];
            worst = std::max(
                std::abs(s - f.sigma[static_cast<std::size_t>(i) * m + j]), worst);
        }
    if (worst > 1e-10)
        throw NumericalError("build_discretization: square root check failed");
    f.mean.resize(static_cast<std::size_t>(m) * dom.dim());
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < dom.dim(); ++i) {
            const double t = f.times[static_cast<std::size_t>(k)];
            f.mean[static_cast<std::size_t>(k) * dom.dim() + i] =
                pinned ? a[static_cast<std::size_t>(i)] +
                             t * ((*b)[static_cast<std::size_t>(i)] -
                                  a[static_cast<std::size_t>(i)])
                       : a[static_cast<std::size_t>(i)];
        }
    return f;
}

// Scratch buffers reused across steps so the hot loop never allocates.
struct ChainWorkspace {
    std::vector<double> xi, eta, yp, proj, pvec, w;
    std::vector<int> touched;

    void init(int m, int d) {
        xi.assign(static_cast<std::size_t>(m) * d, 0.0);
        eta.assign(static_cast<std::size_t>(m) * d, 0.0);
        yp.assign(static_cast<std::size_t>(m) * d, 0.0);
        proj.assign(static_cast<std::size_t>(d), 0.0);
        pvec.assign(static_cast<std::size_t>(d), 0.0);
        w.assign(static_cast<std::size_t>(m), 0.0);
        touched.assign(static_cast<std::size_t>(m), 0);
    }
};

// Restores every grid slice of `y` to the domain closure by covariance-aligned
// pushes: the most violating slice moves to its nearest closure point, and all
// other slices are dragged along in proportion to their covariance with it
// (the push direction of unit norm in the energy metric, which is what keeps
// the restricted Gaussian law invariant — a per-slice clamp instead converges
// to a visibly different occupation law).  Deepest violation first, repeated
// until feasible; triggering slices are flagged in ws.touched.  Returns true
// when any push happened.
inline bool push_back_to_closure(const DiscretizedForm& form,
                                 std::vector<double>& y, ChainWorkspace& ws) {
    const int m = form.m;
    const int d = form.d;
    ws.touched.assign(static_cast<std::size_t>(m), 0);
    bool any = false;
    const int max_pass = 16 * m + 64;
    for (int pass = 0; pass < max_pass; ++pass) {
        int worst = -1;
        double depth = 1e-13;
        for (int k = 0; k < m; ++k) {
            std::span<const double> pt(y.data() + static_cast<std::size_t>(k) * d,
                                       static_cast<std::size_t>(d));
            const double q = form.domain.signed_distance(pt);
            if (-q > depth) {
                depth = -q;
                worst = k;
            }
        }
        if (worst < 0) break;
        any = true;
        ws.touched[static_cast<std::size_t>(worst)] = 1;
        const std::size_t wbase = static_cast<std::size_t>(worst) * d;
        std::span<const double> pt(y.data() + wbase, static_cast<std::size_t>(d));
        std::span<double> prj(ws.proj.data(), static_cast<std::size_t>(d));
        form.domain.project_to_closure(pt, prj);
        for (int i = 0; i < d; ++i)
            ws.pvec[static_cast<std::size_t>(i)] =
                ws.proj[static_cast<std::size_t>(i)] - y[wbase + i];
        const double s_ww =
            form.sigma[static_cast<std::size_t>(worst) * m + worst];
        for (int k = 0; k < m; ++k) {
            if (k == worst) continue;
            const double wgt =
                form.sigma[static_cast<std::size_t>(k) * m + worst] / s_ww;
            if (wgt == 0.0) continue;
            for (int i = 0; i < d; ++i)
                y[static_cast<std::size_t>(k) * d + i] +=
                    wgt * ws.pvec[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < d; ++i)
            y[wbase + i] = ws.proj[static_cast<std::size_t>(i)];
    }
    // Roundoff guard: clamp any residual sub-tolerance violation in place.
    for (int k = 0; k < m; ++k) {
        std::span<const double> pt(y.data() + static_cast<std::size_t>(k) * d,
                                   static_cast<std::size_t>(d));
        if (form.domain.signed_distance(pt) < 0.0) {
            std::span<double> prj(ws.proj.data(), static_cast<std::size_t>(d));
            form.domain.project_to_closure(pt, prj);
            for (int i = 0; i < d; ++i)
                y[static_cast<std::size_t>(k) * d + i] =
                    ws.proj[static_cast<std::size_t>(i)];
        }
    }
    return any;
}

// One reflected Euler step of the chain:
//   y' = mean + (1 - dt/2)(y - mean) + sqrt(dt) * (Sigma_half (x) I) xi
//   y_next = y' pushed back to the closure (covariance-aligned, see above)
// The push corrections ell are the discrete local-time increments; the
// returned increment is their Sigma^{-1}-weighted norm (the natural energy
// norm of the Gaussian form).  Optionally exports the noise actually added
// and the corrections for trajectory reconstruction checks.
inline double step_reflected(const DiscretizedForm& form,
                             std::vector<double>& y, double dt,
                             CounterRng& rng, ChainWorkspace& ws,
                             std::vector<double>* noise_out = nullptr,
                             std::vector<double>* ell_out = nullptr,
                             std::vector<int>* contact_idx = nullptr) {
    const int m = form.m;
    const int d = form.d;
    const double damp = 1.0 - 0.5 * dt;
    const double sq_dt = std::sqrt(dt);
    for (std::size_t j = 0; j < ws.xi.size(); ++j) ws.xi[j] = rng.normal();
    // eta = (Sigma_half (x) I_d) xi, applied per space dimension.
    for (int k = 0; k < m; ++k) {
        const double* row = form.sigma_half.data() + static_cast<std::size_t>(k) * m;
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            for (int j = 0; j < m; ++j)
                s += row[j] * ws.xi[static_cast<std::size_t>(j) * d + i];
            ws.eta[static_cast<std::size_t>(k) * d + i] = s;
        }
    }
    if (contact_idx) contact_idx->clear();
    for (int k = 0; k < m; ++k) {
        for (int i = 0; i < d; ++i) {
            const std::size_t idx = static_cast<std::size_t>(k) * d + i;
            const double noise = sq_dt * ws.eta[idx];
            ws.yp[idx] = form.mean[idx] + damp * (y[idx] - form.mean[idx]) + noise;
            if (noise_out) (*noise_out)[idx] = noise;
            y[idx] = ws.yp[idx];
        }
    }
    const bool any_contact = push_back_to_closure(form, y, ws);
    if (contact_idx)
        for (int k = 0; k < m; ++k)
            if (ws.touched[static_cast<std::size_t>(k)]) contact_idx->push_back(k);
    for (std::size_t idx = 0; idx < static_cast<std::size_t>(m) * d; ++idx) {
        const double ell = y[idx] - ws.yp[idx];
        if (ell_out) (*ell_out)[idx] = ell;
        ws.eta[idx] = ell;  // reuse eta as ell storage for the weighted norm
    }
    if (!any_contact) return 0.0;
    double norm2 = 0.0;
    for (int i = 0; i < d; ++i) {
        // v = Sigma^{-1} ell_col_i ; norm2 += ell_col_i . v
        for (int k = 0; k < m; ++k) {
            const double* row =
                form.sigma_inv.data() + static_cast<std::size_t>(k) * m;
            double s = 0.0;
            for (int j = 0; j < m; ++j)
                s += row[j] * ws.eta[static_cast<std::size_t>(j) * d + i];
            ws.w[static_cast<std::size_t>(k)] = s;
        }
        for (int k = 0; k < m; ++k)
            norm2 += ws.eta[static_cast<std::size_t>(k) * d + i] *
                     ws.w[static_cast<std::size_t>(k)];
    }
    return std::sqrt(std::max(0.0, norm2));
}

struct ChainOptions {
    double dt = 1e-3;
    double total_time = 1000.0;
    double burn_in_frac = 0.1;
    int hist_bins = 20;
    double hist_lo = 0.0;
    double hist_hi = 1.0;
    bool accumulate_covariance = false;
    int cov_stride = 4;
    int n_batches = 32;
    int record_limit = 0;  // trace this many post-burn-in steps
};

struct StepTrace {
    std::vector<double> noise;
    std::vector<double> ell;
};

struct ChainRun {
    uint64_t n_steps = 0;
    uint64_t burn_in_steps = 0;
    double dt = 0.0;
    // Occupation statistics over the post-burn-in steps.
    std::vector<double> coord_mean;    // m*d
    std::vector<double> coord_var;     // m*d
    std::vector<double> centered_cov;  // (m*d)^2, optional
    uint64_t cov_samples = 0;
    std::vector<std::vector<double>> hist;  // per coordinate, normalized
    // Local time (Sigma^{-1}-weighted pushes).
    double local_time_total = 0.0;
    double local_time_rate = 0.0;            // per unit chain time
    double local_time_rate_std_error = 0.0;  // batch means
    // Contact bookkeeping (window partition = thirds of the time interval).
    uint64_t contact_steps = 0;
    uint64_t multi_window_steps = 0;
    double contact_mass = 0.0;
    double multi_window_mass = 0.0;
    std::vector<uint64_t> contacts_by_count;  // histogram over #indices pushed
    double min_q_seen = 0.0;
    // Trajectory trace for reconstruction checks.
    std::vector<double> record_initial;
    std::vector<StepTrace> trace;
    std::vector<double> record_final;  // state right after the traced window
    std::vector<double> final_state;
};

inline ChainRun run_chain(const DiscretizedForm& form, const ChainOptions& opt,
                          uint64_t seed) {
    if (!(opt.dt > 0) || !(opt.total_time > 0))
        throw InputError("run_chain: dt and total_time must be positive");
    if (!(opt.burn_in_frac >= 0 && opt.burn_in_frac < 1))
        throw InputError("run_chain: burn_in_frac must lie in [0, 1)");
    const int m = form.m;
    const int d = form.d;
    const std::size_t md = static_cast<std::size_t>(m) * d;
    const uint64_t n_steps =
        static_cast<uint64_t>(std::llround(opt.total_time / opt.dt));
    const uint64_t burn =
        static_cast<uint64_t>(static_cast<double>(n_steps) * opt.burn_in_frac);
    if (n_steps <= burn + 10) throw InputError("run_chain: run too short");

    ChainRun run;
    run.n_steps = n_steps;
    run.burn_in_steps = burn;
    run.dt = opt.dt;
    run.coord_mean.assign(md, 0.0);
    run.coord_var.assign(md, 0.0);
    run.hist.assign(md, std::vector<double>(
                            static_cast<std::size_t>(opt.hist_bins), 0.0));
    run.contacts_by_count.assign(md + 1, 0);
    if (opt.accumulate_covariance) run.centered_cov.assign(md * md, 0.0);
    run.min_q_seen = std::numeric_limits<double>::infinity();

    // Start from the mean configuration pushed into the closure.
    std::vector<double> y(md);
    for (int k = 0; k < m; ++k) {
        std::span<const double> mk(form.mean.data() + static_cast<std::size_t>(k) * d,
                                   static_cast<std::size_t>(d));
        std::span<double> yk(y.data() + static_cast<std::size_t>(k) * d,
                             static_cast<std::size_t>(d));
        form.domain.project_to_closure(mk, yk);
    }

    CounterRng rng(seed, 0, kSubstreamPath);
    ChainWorkspace ws;
    ws.init(m, d);
    std::vector<int> contacts;
    std::vector<double> noise_buf(md), ell_buf(md);
    const uint64_t n_post = n_steps - burn;
    std::vector<double> batch_mass(static_cast<std::size_t>(opt.n_batches), 0.0);
    const double hist_scale = opt.hist_bins / (opt.hist_hi - opt.hist_lo);

    for (uint64_t step = 0; step < n_steps; ++step) {
        const bool recording =
            opt.record_limit > 0 && step >= burn &&
            step < burn + static_cast<uint64_t>(opt.record_limit);
        if (recording && step == burn) run.record_initial = y;
        const double a_inc = step_reflected(
            form, y, opt.dt, rng, ws, recording ? &noise_buf : nullptr,
            recording ? &ell_buf : nullptr, &contacts);
        if (recording) {
            run.trace.push_back({noise_buf, ell_buf});
            if (step + 1 == burn + static_cast<uint64_t>(opt.record_limit))
                run.record_final = y;
        }
        if (step < burn) continue;

        // Occupation accumulators.
        for (std::size_t j = 0; j < md; ++j) {
            const double v = y[j];
            run.coord_mean[j] += v;
            run.coord_var[j] += v * v;
            int b = static_cast<int>((v - opt.hist_lo) * hist_scale);
            b = std::clamp(b, 0, opt.hist_bins - 1);
            run.hist[j][static_cast<std::size_t>(b)] += 1.0;
        }
        if (opt.accumulate_covariance &&
            (step - burn) % static_cast<uint64_t>(opt.cov_stride) == 0) {
            for (std::size_t i = 0; i < md; ++i) {
                const double ci = y[i] - form.mean[i];
                for (std::size_t j = 0; j < md; ++j)
                    run.centered_cov[i * md + j] += ci * (y[j] - form.mean[j]);
            }
            ++run.cov_samples;
        }
        for (int k = 0; k < m; ++k) {
            std::span<const double> yk(y.data() + static_cast<std::size_t>(k) * d,
                                       static_cast<std::size_t>(d));
            run.min_q_seen =
                std::min(run.min_q_seen, form.domain.signed_distance(yk));
        }

        // Local time and contact profile.
        run.local_time_total += a_inc;
        const std::size_t batch = static_cast<std::size_t>(
            (step - burn) * static_cast<uint64_t>(opt.n_batches) / n_post);
        batch_mass[std::min(batch, batch_mass.size() - 1)] += a_inc;
        if (!contacts.empty()) {
            ++run.contact_steps;
            run.contact_mass += a_inc;
            run.contacts_by_count[std::min(contacts.size(), md)] += 1;
            int w_first = -1;
            bool multi = false;
            for (int k : contacts) {
                const double t = form.times[static_cast<std::size_t>(k)];
                const int w = std::min(2, static_cast<int>(3.0 * t));
                if (w_first < 0)
                    w_first = w;
                else if (w != w_first)
                    multi = true;
            }
            if (multi) {
                ++run.multi_window_steps;
                run.multi_window_mass += a_inc;
            }
        } else {
            run.contacts_by_count[0] += 1;
        }
    }

    for (std::size_t j = 0; j < md; ++j) {
        run.coord_mean[j] /= static_cast<double>(n_post);
        run.coord_var[j] = run.coord_var[j] / static_cast<double>(n_post) -
                           run.coord_mean[j] * run.coord_mean[j];
        for (double& h : run.hist[j]) h /= static_cast<double>(n_post);
    }
    if (run.cov_samples > 0)
        for (double& v : run.centered_cov) v /= static_cast<double>(run.cov_samples);
    run.local_time_rate = run.local_time_total / (static_cast<double>(n_post) * opt.dt);
    // Batch means on per-batch local-time rates.
    {
        std::vector<double> rates(batch_mass.size());
        const double batch_time =
            static_cast<double>(n_post) * opt.dt / static_cast<double>(opt.n_batches);
        for (std::size_t i = 0; i < batch_mass.size(); ++i)
            rates[i] = batch_mass[i] / batch_time;
        double mu = 0.0;
        for (double rr : rates) mu += rr;
        mu /= static_cast<double>(rates.size());
        double var = 0.0;
        for (double rr : rates) var += (rr - mu) * (rr - mu);
        var /= static_cast<double>(rates.size() - 1);
        run.local_time_rate_std_error =
            std::sqrt(var / static_cast<double>(rates.size()));
    }
    if (opt.record_limit > 0 && run.record_final.empty() && !run.trace.empty())
        run.record_final = y;
    run.final_state = y;
    return run;
}

// Telescoping reconstruction: replays the recorded trace and rebuilds the
// final state as initial + summed drift + summed noise + summed corrections.
// The result must agree with the replayed final state to floating-point
// accumulation accuracy; disagreement means the trace and the update rule
// are out of sync.
inline double skorokhod_residual(const DiscretizedForm& form,
                               const std::vector<double>& record_initial,
                               const std::vector<StepTrace>& trace,
                               const std::vector<double>& final_state,
                               double dt) {
    const std::size_t md = static_cast<std::size_t>(form.m) * form.d;
    if (record_initial.size() != md || final_state.size() != md || trace.empty())
        throw InputError("skorokhod_residual: malformed trace");
    std::vector<double> c(md), drift_sum(md, 0.0), noise_sum(md, 0.0),
        ell_sum(md, 0.0);
    for (std::size_t j = 0; j < md; ++j)
        c[j] = record_initial[j] - form.mean[j];
    for (const auto& st : trace) {
        if (st.noise.size() != md || st.ell.size() != md)
            throw InputError("skorokhod_residual: malformed trace entry");
        for (std::size_t j = 0; j < md; ++j) {
            const double drift = -0.5 * dt * c[j];
            drift_sum[j] += drift;
            noise_sum[j] += st.noise[j];
            ell_sum[j] += st.ell[j];
            c[j] = c[j] + drift + st.noise[j] + st.ell[j];
        }
    }
    double resid = 0.0;
    for (std::size_t j = 0; j < md; ++j) {
        const double recon = record_initial[j] - form.mean[j] + drift_sum[j] +
                             noise_sum[j] + ell_sum[j] + form.mean[j];
        resid = std::max(resid, std::abs(recon - final_state[j]));
    }
    return resid;
}

// Strong self-consistency gap between the scheme at dt and at dt/2 driven by
// one Brownian increment stream (the coarse step consumes the sum of the two
// fine half-step draws).  Returns the sup over coarse steps of the state gap;
// halving dt again must shrink it, which is the refinement-order check.
inline double coupled_refinement_gap(const DiscretizedForm& form, double total_time,
                                     double dt, uint64_t seed) {
    if (!(dt > 0) || !(total_time > dt))
        throw InputError("coupled_refinement_gap: bad horizon");
    const int m = form.m;
    const int d = form.d;
    const std::size_t md = static_cast<std::size_t>(m) * d;
    const uint64_t n_coarse = static_cast<uint64_t>(std::llround(total_time / dt));
    std::vector<double> yc(md), yf(md);
    for (int k = 0; k < m; ++k) {
        std::span<const double> mk(form.mean.data() + static_cast<std::size_t>(k) * d,
                                   static_cast<std::size_t>(d));
        form.domain.project_to_closure(
            mk, std::span<double>(yc.data() + static_cast<std::size_t>(k) * d,
                                  static_cast<std::size_t>(d)));
    }
    yf = yc;
    CounterRng rng(seed, 0, kSubstreamAux);
    ChainWorkspace wsc, wsf;
    wsc.init(m, d);
    wsf.init(m, d);
    const double half = 0.5 * dt;
    const double sq_half = std::sqrt(half);
    const double inv_sq2 = 0.70710678118654752440;
    std::vector<double> xi1(md), xi2(md);
    std::vector<double> eta(md);
    double gap = 0.0;
    // Local stepping with explicit noise so both resolutions share it.
    auto apply = [&](std::vector<double>& y, ChainWorkspace& ws,
                     const std::vector<double>& xi, double step_dt) {
        const double damp = 1.0 - 0.5 * step_dt;
        const double sq = std::sqrt(step_dt);
        for (int k = 0; k < m; ++k) {
            const double* row =
                form.sigma_half.data() + static_cast<std::size_t>(k) * m;
            for (int i = 0; i < d; ++i) {
                double s = 0.0;
                for (int j = 0; j < m; ++j)
                    s += row[j] * xi[static_cast<std::size_t>(j) * d + i];
                eta[static_cast<std::size_t>(k) * d + i] = s;
            }
        }
        for (std::size_t idx = 0; idx < md; ++idx)
            y[idx] = form.mean[idx] + damp * (y[idx] - form.mean[idx]) +
                     sq * eta[idx];
        push_back_to_closure(form, y, ws);
    };
    (void)sq_half;
    for (uint64_t s = 0; s < n_coarse; ++s) {
        for (std::size_t j = 0; j < md; ++j) xi1[j] = rng.normal();
        for (std::size_t j = 0; j < md; ++j) xi2[j] = rng.normal();
        apply(yf, wsf, xi1, half);
        apply(yf, wsf, xi2, half);
        // Coarse noise = sum of fine Brownian increments: xi = (xi1+xi2)/sqrt(2).
        for (std::size_t j = 0; j < md; ++j)
            xi1[j] = (xi1[j] + xi2[j]) * inv_sq2;
        apply(yc, wsc, xi1, dt);
        double g = 0.0;
        for (std::size_t j = 0; j < md; ++j)
            g += (yc[j] - yf[j]) * (yc[j] - yf[j]);
        gap = std::max(gap, std::sqrt(g));
    }
    return gap;
}

struct RejectionSample {
    std::vector<double> samples;  // n_accept * (m*d), row-major
    uint64_t attempts = 0;
    double acceptance_rate = 0.0;
};

// Direct draws from the discretized constrained law by rejection: sample the
// unconstrained Gaussian skeleton sequentially, accept iff every grid point
// lies in the closure.  With `crossing_thinning` the acceptance additionally
// demands survival of the between-point crossing corrections, approximating
// the fine-grid law.  Aborts when the empirical acceptance rate degenerates.
inline RejectionSample rejection_sample_constrained_bridge(
    const DiscretizedForm& form, uint64_t n_accept, uint64_t seed,
    bool crossing_thinning = false) {
    if (n_accept < 1) throw InputError("rejection_sample: need n_accept >= 1");
    const int m = form.m;
    const int d = form.d;
    const std::size_t md = static_cast<std::size_t>(m) * d;
    RejectionSample out;
    out.samples.reserve(n_accept * md);
    std::vector<double> x(static_cast<std::size_t>(d));
    std::vector<double> row(md);
    uint64_t accepted = 0;
    const bool pinned = !form.one_sided();
    for (uint64_t attempt = 0;; ++attempt) {
        if (accepted >= n_accept) break;
        if (attempt >= 2000000 &&
            static_cast<double>(accepted) / static_cast<double>(attempt) < 1e-6)
            throw NumericalError(
                "rejection_sample: acceptance rate below 1e-6, aborting");
        CounterRng rng(seed, attempt, kSubstreamAux);
        CounterRng thin(seed, attempt, kSubstreamThinning);
        std::copy(form.a.begin(), form.a.end(), x.begin());
        double t_prev = 0.0;
        double q_prev = form.domain.signed_distance(x);
        bool ok = true;
        for (int k = 0; k < m && ok; ++k) {
            const double t = form.times[static_cast<std::size_t>(k)];
            for (int i = 0; i < d; ++i) {
                const std::size_t ii = static_cast<std::size_t>(i);
                double mu, var;
                if (pinned) {
                    detail::bridge_step_moments(t_prev, t, x[ii], form.b[ii], &mu,
                                                &var);
                } else {
                    mu = x[ii];
                    var = t - t_prev;
                }
                x[ii] = mu + std::sqrt(var) * rng.normal();
                row[static_cast<std::size_t>(k) * d + ii] = x[ii];
            }
            const double q = form.domain.signed_distance(x);
            if (q < 0.0) ok = false;
            if (ok && crossing_thinning) {
                const double expo = 2.0 * q_prev * q / (t - t_prev);
                if (expo < 40.0 && thin.uniform01() < std::exp(-expo)) ok = false;
            }
            q_prev = q;
            t_prev = t;
        }
        if (ok && pinned && crossing_thinning) {
            // Final segment back to the pinned endpoint.
            const double qb = form.domain.signed_distance(form.b);
            const double expo = 2.0 * q_prev * qb / (1.0 - t_prev);
            if (expo < 40.0 && thin.uniform01() < std::exp(-expo)) ok = false;
        }
        if (ok) {
            out.samples.insert(out.samples.end(), row.begin(), row.end());
            ++accepted;
        }
        out.attempts = attempt + 1;
    }
    out.acceptance_rate =
        static_cast<double>(n_accept) / static_cast<double>(out.attempts);
    return out;
}

struct ContactProfile {
    uint64_t contact_steps = 0;
    uint64_t multi_window_steps = 0;
    double contact_mass = 0.0;
    double multi_window_mass = 0.0;
    double multi_window_mass_fraction = 0.0;
    std::vector<uint64_t> contacts_by_count;
};

// Concentration diagnostic: how much of the local-time mass is spent pushing
// several disjoint time windows at once.  Single-window concentration is the
// discrete signature of boundary contact happening at isolated times.
inline ContactProfile contact_profile_analysis(const ChainRun& run) {
    ContactProfile p;
    p.contact_steps = run.contact_steps;
    p.multi_window_steps = run.multi_window_steps;
    p.contact_mass = run.contact_mass;
    p.multi_window_mass = run.multi_window_mass;
    p.contacts_by_count = run.contacts_by_count;
    p.multi_window_mass_fraction =
        run.contact_mass > 0 ? run.multi_window_mass / run.contact_mass : 0.0;
    return p;
}

}  // namespace pathmc
