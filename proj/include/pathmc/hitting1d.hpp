#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "pathmc/errors.hpp"
#include "pathmc/quadrature.hpp"
#include "pathmc/rng.hpp"

namespace pathmc {

// First time a unit-slope comparison line K*t + S_t (S a standard Brownian
// motion) drops to -r.  The law is defective for K > 0: with probability
// 1 - exp(-2 K r) the line never reaches -r and the time is +infinity.
struct EtaLaw {
    double r = 1.0;
    double K = 0.0;

    EtaLaw(double r_, double K_) : r(r_), K(K_) {
        if (!(r > 0)) throw InputError("EtaLaw: r must be positive");
        if (K < 0) throw InputError("EtaLaw: K must be >= 0");
    }
};

// Sub-probability density of the finite part at time t.
inline double eta_density(const EtaLaw& law, double t) {
    if (t <= 0) return 0.0;
    const double z = law.r + law.K * t;
    return law.r / std::sqrt(6.283185307179586 * t * t * t) *
           std::exp(-z * z / (2.0 * t));
}

// Mass of the defect atom at +infinity.
inline double eta_atom(const EtaLaw& law) {
    return law.K > 0 ? -std::expm1(-2.0 * law.K * law.r) : 0.0;
}

namespace detail {

// Integral of eta_density over (u, infinity) via the substitution t = u/w^2,
// which maps the half-line to w in (0, 1] and removes both the heavy
// algebraic tail (K = 0) and the essential decay (K > 0): the transformed
// integrand (2r / sqrt(2 pi u)) exp(-(r w + K u / w)^2 / (2u)) is smooth and
// bounded on the whole interval.
inline double eta_tail_integral(const EtaLaw& law, double u, double abs_tol) {
    if (!(u > 0)) throw InputError("eta_tail: u must be positive");
    const double pref = 2.0 * law.r / std::sqrt(6.283185307179586 * u);
    auto g = [&](double w) {
        if (w <= 0.0) return 0.0;
        const double z = law.r * w + law.K * u / w;
        return pref * std::exp(-z * z / (2.0 * u));
    };
    // Seed the partition at the scale where the exponent reaches ~30 so the
    // first rule application cannot overlook a narrow bump near w = 0.
    std::vector<double> splits;
    const double w_r = std::sqrt(60.0 * u) / law.r;          // r-term scale
    const double w_k = law.K > 0 ? law.K * u / std::sqrt(60.0 * u)
                                 : 1.0;                      // K-term scale
    for (double base : {w_r, w_k}) {
        double w = std::clamp(base / 8.0, 1e-14, 1.0);
        for (int j = 0; j < 48 && w < 1.0; ++j, w *= 2.0) splits.push_back(w);
    }
    return integrate(g, 0.0, 1.0, abs_tol, std::move(splits));
}

}  // namespace detail

// P[time > u], including the atom at +infinity.  Absolute tolerance 1e-10.
inline double eta_tail(const EtaLaw& law, double u) {
    return eta_atom(law) + detail::eta_tail_integral(law, u, 1e-10);
}

// Closed-form bound dominating eta_tail for every u:
// sqrt(2/pi) * r / sqrt(u) + 2 K r.
inline double eta_tail_upper_bound(const EtaLaw& law, double u) {
    if (!(u > 0)) throw InputError("eta_tail_upper_bound: u must be positive");
    return 0.79788456080286535588 * law.r / std::sqrt(u) + 2.0 * law.K * law.r;
}

// Total mass (finite part + atom); equals 1 for a correctly normalized law.
inline double eta_total_mass(const EtaLaw& law, double abs_tol = 1e-10) {
    const double u0 = std::min(1.0, law.r * law.r);
    std::vector<double> splits;
    for (double f : {0.01, 1.0 / 3.0, 1.0, 3.0})
        splits.push_back(law.r * law.r * f);
    const double head = integrate([&](double t) { return eta_density(law, t); },
                                  0.0, u0, abs_tol, std::move(splits));
    return head + eta_atom(law) + detail::eta_tail_integral(law, u0, abs_tol);
}

// Draws from the law by inverse CDF over a precomputed monotone table for the
// finite part (built once per law; interpolation tolerance 1e-8), plus a
// Bernoulli draw for the atom.  Construct once and reuse: table construction
// performs many adaptive quadratures.
class EtaSampler {
public:
    explicit EtaSampler(const EtaLaw& law) : law_(law), atom_(eta_atom(law)) {
        build_table();
    }

    const EtaLaw& law() const { return law_; }

    // May return +infinity (the defect outcome).  Consumes exactly two
    // uniforms per call so stream alignment never depends on the outcome.
    double sample(CounterRng& rng) const {
        const double u_atom = rng.uniform01();
        const double v = rng.uniform01();
        if (u_atom < atom_) return std::numeric_limits<double>::infinity();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), v);
        if (it == cdf_.begin()) return t_.front();
        if (it == cdf_.end()) return t_.back();
        const std::size_t j = static_cast<std::size_t>(it - cdf_.begin());
        const double f0 = cdf_[j - 1], f1 = cdf_[j];
        const double w = f1 > f0 ? (v - f0) / (f1 - f0) : 0.0;
        return t_[j - 1] + w * (t_[j] - t_[j - 1]);
    }

    std::size_t table_size() const { return t_.size(); }
    double atom() const { return atom_; }
    const std::vector<double>& knots() const { return t_; }
    const std::vector<double>& knot_cdf() const { return cdf_; }

    // Conditional CDF of the finite part, exposed for verification.
    double conditional_cdf(double t) const {
        if (t <= 0) return 0.0;
        return 1.0 - detail::eta_tail_integral(law_, t, 1e-11) / (1.0 - atom_);
    }

private:
    void build_table() {
        const double Z = 1.0 - atom_;
        if (!(Z > 0)) throw NumericalError("EtaSampler: defect mass is 1");
        auto cdf = [&](double t) {
            return 1.0 - detail::eta_tail_integral(law_, t, 1e-11) / Z;
        };
        double t_lo = law_.r * law_.r / 1000.0;
        for (int i = 0; i < 200 && cdf(t_lo) > 1e-12; ++i) t_lo *= 0.25;
        double t_hi = std::max(law_.r * law_.r, 1.0);
        int grow = 0;
        for (; grow < 400 && 1.0 - cdf(t_hi) > 1e-9; ++grow) t_hi *= 2.0;
        if (grow == 400)
            throw NumericalError("EtaSampler: failed to bracket the upper tail");

        // Geometric seed knots, then midpoint refinement until linear
        // interpolation of the CDF is accurate to 1e-7.  The slow 3/2-power
        // tail dominates the knot count, so the tolerance trades table size
        // against an interpolation error that stays far below sampling noise.
        std::vector<double> ts;
        const int per_decade = 8;
        const double decades = std::log10(t_hi / t_lo);
        const int n0 = std::max(16, static_cast<int>(decades) * per_decade);
        for (int i = 0; i <= n0; ++i)
            ts.push_back(t_lo * std::pow(t_hi / t_lo,
                                         static_cast<double>(i) / n0));
        std::vector<double> fs(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) fs[i] = cdf(ts[i]);

        std::vector<double> rt, rf;  // refined knots
        rt.reserve(4096);
        rf.reserve(4096);
        rt.push_back(ts[0]);
        rf.push_back(fs[0]);
        struct Seg {
            double t0, f0, t1, f1;
        };
        std::vector<Seg> stack;
        for (std::size_t i = ts.size() - 1; i >= 1; --i)
            stack.push_back({ts[i - 1], fs[i - 1], ts[i], fs[i]});
        std::size_t evals = 0;
        while (!stack.empty()) {
            Seg s = stack.back();
            stack.pop_back();
            const double tm = 0.5 * (s.t0 + s.t1);
            const double fm = cdf(tm);
            if (++evals > 80000)
                throw NumericalError("EtaSampler: table refinement budget exhausted");
            const double interp = 0.5 * (s.f0 + s.f1);
            if (std::abs(fm - interp) > 1e-7 && tm > s.t0 && tm < s.t1) {
                stack.push_back({tm, fm, s.t1, s.f1});
                stack.push_back({s.t0, s.f0, tm, fm});
            } else {
                // Segment accepted; emit left-to-right.
                if (tm > s.t0 && tm < s.t1) {
                    rt.push_back(tm);
                    rf.push_back(fm);
                }
                rt.push_back(s.t1);
                rf.push_back(s.f1);
            }
        }
        // Monotone cleanup (quadrature noise can produce ~1e-12 wiggles).
        t_.clear();
        cdf_.clear();
        for (std::size_t i = 0; i < rt.size(); ++i) {
            if (!t_.empty() && rt[i] <= t_.back()) continue;
            double f = std::clamp(rf[i], 0.0, 1.0);
            if (!cdf_.empty()) f = std::max(f, cdf_.back());
            t_.push_back(rt[i]);
            cdf_.push_back(f);
        }
        if (t_.size() < 2)
            throw NumericalError("EtaSampler: degenerate table");
    }

    EtaLaw law_;
    double atom_;
    std::vector<double> t_;
    std::vector<double> cdf_;
};

// Exit statistics of r + K t + W_t from the strip [0, alpha).
struct TwoSidedExit {
    double r = 0.5;
    double alpha = 1.0;
    double K = 0.0;

    TwoSidedExit(double r_, double alpha_, double K_)
        : r(r_), alpha(alpha_), K(K_) {
        if (!(alpha > 0)) throw InputError("TwoSidedExit: alpha must be positive");
        if (r < 0 || r >= alpha)
            throw InputError("TwoSidedExit: requires 0 <= r < alpha");
        if (K < 0) throw InputError("TwoSidedExit: K must be >= 0");
    }
};

// E[ exp(-lambda * tau) ; exit through the top ] for the strip exit above:
// exp(K (alpha - r)) * sinh(r s) / sinh(alpha s) with s = sqrt(K^2 + 2 lambda).
// At lambda = 0 this reduces to the textbook upper-exit probability
// (1 - e^{-2Kr}) / (1 - e^{-2K alpha}) of the upward-drifting motion, which
// fixes the prefactor sign.  Evaluated in log space; since s >= K the
// exponent K(alpha-r) - s(alpha-r) is never positive, so no overflow.
inline double exit_upper_laplace(const TwoSidedExit& e, double lambda) {
    if (lambda < 0) throw InputError("exit_upper_laplace: lambda must be >= 0");
    if (e.r == 0.0) return 0.0;
    const double s = std::sqrt(e.K * e.K + 2.0 * lambda);
    if (s == 0.0) return e.r / e.alpha;  // K = 0, lambda = 0
    // sinh(r s)/sinh(alpha s) = exp((r - alpha) s) (1 - e^{-2 r s})/(1 - e^{-2 alpha s})
    const double log_ratio = (e.r - e.alpha) * s +
                             std::log1p(-std::exp(-2.0 * e.r * s)) -
                             std::log1p(-std::exp(-2.0 * e.alpha * s));
    return std::exp(e.K * (e.alpha - e.r) + log_ratio);
}

struct BesselDominationReport {
    double violation_rate = 0.0;
    double max_excess = 0.0;
    double max_gap = 0.0;  // largest pre-tolerance gap R - (R0 + K t + S)
    double tol = 0.0;
    int n_paths = 0;
};

// Pathwise check of the comparison inequality behind EtaLaw: for Brownian
// motion at distance R_t from a fixed center, while R stays >= delta the
// radial part satisfies R_t <= R_0 + K t + S_t with K = (d-1)/(2 delta) and
// S the radially projected driving noise.  Discretization breaks the
// inequality only through scheme error, so the rate of excursions beyond
// tol(dt) = c sqrt(dt) log(1/dt) must shrink as dt does.
inline BesselDominationReport bessel_domination_check(
    int dim, double delta, double q_x, double horizon, double dt,
    int n_paths, uint64_t seed, double c_tol = 3.0) {
    if (dim < 2)
        throw InputError("bessel_domination_check: requires dimension >= 2");
    if (!(delta > 0) || q_x < 0 || !(horizon > 0) || !(dt > 0) || n_paths < 1)
        throw InputError("bessel_domination_check: bad parameters");
    const double K = static_cast<double>(dim - 1) / (2.0 * delta);
    const double tol = c_tol * std::sqrt(dt) * std::log(1.0 / dt);
    const double R0 = q_x + delta;
    const int n_steps = static_cast<int>(std::ceil(horizon / dt));
    BesselDominationReport rep;
    rep.tol = tol;
    rep.n_paths = n_paths;
    std::vector<double> w(static_cast<std::size_t>(dim));
    const double sqdt = std::sqrt(dt);
    int violations = 0;
    for (int p = 0; p < n_paths; ++p) {
        CounterRng rng(seed, static_cast<uint64_t>(p), 0);
        std::fill(w.begin(), w.end(), 0.0);
        w[0] = R0;
        double R = R0;
        double S = 0.0;
        bool violated = false;
        for (int k = 1; k <= n_steps && !violated; ++k) {
            double proj = 0.0;
            double R2 = 0.0;
            for (int i = 0; i < dim; ++i) {
                const double xi = rng.normal();
                proj += w[static_cast<std::size_t>(i)] * xi;
                w[static_cast<std::size_t>(i)] += sqdt * xi;
                R2 += w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(i)];
            }
            S += sqdt * proj / R;
            R = std::sqrt(R2);
            if (R < delta) break;  // comparison hypothesis void from here on
            const double bound = R0 + K * (dt * k) + S + tol;
            rep.max_gap = std::max(rep.max_gap, R - bound + tol);
            if (R > bound) {
                violated = true;
                rep.max_excess = std::max(rep.max_excess, R - bound);
            }
        }
        if (violated) ++violations;
    }
    rep.violation_rate = static_cast<double>(violations) / n_paths;
    return rep;
}

}  // namespace pathmc
