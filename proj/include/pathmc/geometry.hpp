#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pathmc/errors.hpp"
#include "pathmc/rng.hpp"

namespace pathmc {

using Point = std::vector<double>;

// Tolerance for "y lies on the boundary" preconditions.
inline constexpr double kBoundaryTol = 1e-9;

enum class DomainKind {
    ball,
    halfspace,
    box,
    annulus,
    convex_polytope,
    cusp_union,
};

inline const char* to_string(DomainKind k) {
    switch (k) {
        case DomainKind::ball: return "ball";
        case DomainKind::halfspace: return "halfspace";
        case DomainKind::box: return "box";
        case DomainKind::annulus: return "annulus";
        case DomainKind::convex_polytope: return "convex_polytope";
        case DomainKind::cusp_union: return "cusp_union";
    }
    return "?";
}

// One face of a halfspace intersection; the domain lies on the side the
// normal points into: {x : normal . x > offset}.
struct HalfspaceFace {
    Point normal;
    double offset = 0.0;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) {
    return std::sqrt(dot(a, a));
}

inline double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace detail

// A domain in R^d with exact signed distance to its boundary: positive
// inside, negative outside, zero on the boundary.  Every supported kind keeps
// the distance closed-form except the convex polytope exterior, which uses an
// iterative cyclic projection.  All operations are pure: no hidden state, so
// concurrent use is safe.
class Domain {
public:
    static Domain ball(Point center, double radius) {
        if (center.empty()) throw InputError("ball: empty center");
        if (!(radius > 0)) throw InputError("ball: radius must be positive");
        Domain d(DomainKind::ball, static_cast<int>(center.size()));
        d.center_ = std::move(center);
        d.radius_ = radius;
        return d;
    }

    // {x : normal . x > offset}; the normal points into the domain and is
    // normalized here.
    static Domain halfspace(Point inward_normal, double offset) {
        if (inward_normal.empty()) throw InputError("halfspace: empty normal");
        const double n = detail::norm(inward_normal);
        if (!(n > 0)) throw InputError("halfspace: zero normal");
        for (double& v : inward_normal) v /= n;
        Domain d(DomainKind::halfspace, static_cast<int>(inward_normal.size()));
        d.faces_.push_back({std::move(inward_normal), offset / n});
        return d;
    }

    static Domain box(Point lo, Point hi) {
        if (lo.empty() || lo.size() != hi.size())
            throw InputError("box: lo/hi dimension mismatch");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i])) throw InputError("box: requires lo < hi per axis");
        Domain d(DomainKind::box, static_cast<int>(lo.size()));
        d.lo_ = std::move(lo);
        d.hi_ = std::move(hi);
        return d;
    }

    static Domain annulus(Point center, double r_in, double r_out) {
        if (center.empty()) throw InputError("annulus: empty center");
        if (!(r_in > 0 && r_out > r_in))
            throw InputError("annulus: requires 0 < r_in < r_out");
        Domain d(DomainKind::annulus, static_cast<int>(center.size()));
        d.center_ = std::move(center);
        d.r_in_ = r_in;
        d.r_out_ = r_out;
        return d;
    }

    static Domain convex_polytope(std::vector<HalfspaceFace> faces, int dim) {
        if (dim < 1) throw InputError("convex_polytope: dim must be >= 1");
        if (faces.empty()) throw InputError("convex_polytope: needs faces");
        for (auto& f : faces) {
            if (static_cast<int>(f.normal.size()) != dim)
                throw InputError("convex_polytope: face dimension mismatch");
            const double n = detail::norm(f.normal);
            if (!(n > 0)) throw InputError("convex_polytope: zero face normal");
            for (double& v : f.normal) v /= n;
            f.offset /= n;
        }
        Domain d(DomainKind::convex_polytope, dim);
        d.faces_ = std::move(faces);
        return d;
    }

    // Complement of a finite union of closed balls.  The balls must have
    // pairwise disjoint interiors (tangency allowed; tangency points are the
    // outward cusps of the domain); overlap would break exactness of the
    // signed distance, so it is rejected.
    static Domain cusp_union(std::vector<Point> centers, std::vector<double> radii) {
        if (centers.empty() || centers.size() != radii.size())
            throw InputError("cusp_union: centers/radii mismatch");
        const std::size_t dim = centers[0].size();
        if (dim == 0) throw InputError("cusp_union: empty center");
        for (std::size_t i = 0; i < centers.size(); ++i) {
            if (centers[i].size() != dim)
                throw InputError("cusp_union: center dimension mismatch");
            if (!(radii[i] > 0)) throw InputError("cusp_union: radius must be positive");
        }
        for (std::size_t i = 0; i < centers.size(); ++i)
            for (std::size_t j = i + 1; j < centers.size(); ++j)
                if (detail::dist(centers[i], centers[j]) <
                    radii[i] + radii[j] - 1e-12)
                    throw InputError("cusp_union: ball interiors overlap");
        Domain d(DomainKind::cusp_union, static_cast<int>(dim));
        d.centers_ = std::move(centers);
        d.radii_ = std::move(radii);
        return d;
    }

    DomainKind kind() const { return kind_; }
    int dim() const { return dim_; }

    // Signed distance to the boundary: positive inside, negative outside,
    // 1-Lipschitz everywhere.
    double signed_distance(std::span<const double> x) const {
        check_dim(x);
        switch (kind_) {
            case DomainKind::ball:
                return radius_ - detail::dist(x, center_);
            case DomainKind::halfspace:
                return detail::dot(x, faces_[0].normal) - faces_[0].offset;
            case DomainKind::box: {
                double inside = std::numeric_limits<double>::infinity();
                double out2 = 0.0;
                for (int i = 0; i < dim_; ++i) {
                    inside = std::min(inside, std::min(x[i] - lo_[i], hi_[i] - x[i]));
                    const double d = x[i] < lo_[i] ? lo_[i] - x[i]
                                   : x[i] > hi_[i] ? x[i] - hi_[i]
                                                   : 0.0;
                    out2 += d * d;
                }
                return out2 > 0.0 ? -std::sqrt(out2) : inside;
            }
            case DomainKind::annulus: {
                const double rho = detail::dist(x, center_);
                return std::min(rho - r_in_, r_out_ - rho);
            }
            case DomainKind::convex_polytope: {
                const double m = face_margin(x);
                if (m >= 0.0) return m;
                Point p(x.begin(), x.end());
                dykstra_project(p);
                return -detail::dist(x, p);
            }
            case DomainKind::cusp_union: {
                double m = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < centers_.size(); ++i)
                    m = std::min(m, detail::dist(x, centers_[i]) - radii_[i]);
                return m;
            }
        }
        throw InputError("signed_distance: unknown kind");
    }

    // Membership in the inner level set {q > r}.
    bool in_level_set(std::span<const double> x, double r) const {
        return signed_distance(x) > r;
    }

    // Nearest point of the closure.  Identity inside; otherwise the unique
    // nearest boundary point (ties broken deterministically where the
    // nearest point is non-unique, e.g. the center of an annulus).
    void project_to_closure(std::span<const double> x, std::span<double> out) const {
        check_dim(x);
        if (out.size() != x.size())
            throw InputError("project_to_closure: output dimension mismatch");
        switch (kind_) {
            case DomainKind::ball: {
                const double rho = detail::dist(x, center_);
                if (rho <= radius_) {
                    std::copy(x.begin(), x.end(), out.begin());
                    return;
                }
                for (int i = 0; i < dim_; ++i)
                    out[i] = center_[i] + (x[i] - center_[i]) * (radius_ / rho);
                return;
            }
            case DomainKind::halfspace: {
                const double m = detail::dot(x, faces_[0].normal) - faces_[0].offset;
                for (int i = 0; i < dim_; ++i)
                    out[i] = m >= 0.0 ? x[i] : x[i] - m * faces_[0].normal[i];
                return;
            }
            case DomainKind::box:
                for (int i = 0; i < dim_; ++i)
                    out[i] = std::clamp(x[i], lo_[i], hi_[i]);
                return;
            case DomainKind::annulus: {
                const double rho = detail::dist(x, center_);
                if (rho >= r_in_ && rho <= r_out_) {
                    std::copy(x.begin(), x.end(), out.begin());
                    return;
                }
                const double target = rho < r_in_ ? r_in_ : r_out_;
                if (rho == 0.0) {
                    // Center: every inner-boundary point is nearest; pick the
                    // +e1 direction for determinism.
                    std::copy(center_.begin(), center_.end(), out.begin());
                    out[0] += target;
                    return;
                }
                for (int i = 0; i < dim_; ++i)
                    out[i] = center_[i] + (x[i] - center_[i]) * (target / rho);
                return;
            }
            case DomainKind::convex_polytope: {
                if (face_margin(x) >= 0.0) {
                    std::copy(x.begin(), x.end(), out.begin());
                    return;
                }
                Point p(x.begin(), x.end());
                dykstra_project(p);
                std::copy(p.begin(), p.end(), out.begin());
                return;
            }
            case DomainKind::cusp_union: {
                double worst = std::numeric_limits<double>::infinity();
                std::size_t which = 0;
                for (std::size_t i = 0; i < centers_.size(); ++i) {
                    const double m = detail::dist(x, centers_[i]) - radii_[i];
                    if (m < worst) {
                        worst = m;
                        which = i;
                    }
                }
                if (worst >= 0.0) {
                    std::copy(x.begin(), x.end(), out.begin());
                    return;
                }
                // Inside ball `which` (interiors are disjoint, so the nearest
                // closure point is its radial exit).
                const auto& c = centers_[which];
                const double rho = detail::dist(x, c);
                if (rho == 0.0) {
                    std::copy(c.begin(), c.end(), out.begin());
                    out[0] += radii_[which];
                    return;
                }
                for (int i = 0; i < dim_; ++i)
                    out[i] = c[i] + (x[i] - c[i]) * (radii_[which] / rho);
                return;
            }
        }
        throw InputError("project_to_closure: unknown kind");
    }

    Point project_to_closure(std::span<const double> x) const {
        Point out(x.size());
        project_to_closure(x, out);
        return out;
    }

    // Outward unit direction at a boundary point (pointing away from the
    // domain).  Where several facets are active (corners), the
    // lexicographically smallest active facet wins.
    Point outward_normal(std::span<const double> y) const {
        check_dim(y);
        if (std::abs(signed_distance(y)) > kBoundaryTol)
            throw InputError("outward_normal: point is not on the boundary");
        Point n(static_cast<std::size_t>(dim_), 0.0);
        switch (kind_) {
            case DomainKind::ball: {
                const double rho = detail::dist(y, center_);
                for (int i = 0; i < dim_; ++i) n[i] = (y[i] - center_[i]) / rho;
                return n;
            }
            case DomainKind::halfspace:
                for (int i = 0; i < dim_; ++i) n[i] = -faces_[0].normal[i];
                return n;
            case DomainKind::box: {
                int best_axis = 0;
                bool best_hi = false;
                double best = std::numeric_limits<double>::infinity();
                for (int i = 0; i < dim_; ++i) {
                    if (y[i] - lo_[i] < best - 1e-15) {
                        best = y[i] - lo_[i];
                        best_axis = i;
                        best_hi = false;
                    }
                    if (hi_[i] - y[i] < best - 1e-15) {
                        best = hi_[i] - y[i];
                        best_axis = i;
                        best_hi = true;
                    }
                }
                n[best_axis] = best_hi ? 1.0 : -1.0;
                return n;
            }
            case DomainKind::annulus: {
                const double rho = detail::dist(y, center_);
                const double sign = (rho - r_in_ <= r_out_ - rho) ? -1.0 : 1.0;
                for (int i = 0; i < dim_; ++i)
                    n[i] = sign * (y[i] - center_[i]) / rho;
                return n;
            }
            case DomainKind::convex_polytope: {
                double best = std::numeric_limits<double>::infinity();
                std::size_t best_j = 0;
                for (std::size_t j = 0; j < faces_.size(); ++j) {
                    const double m =
                        detail::dot(y, faces_[j].normal) - faces_[j].offset;
                    if (m < best - 1e-15) {
                        best = m;
                        best_j = j;
                    }
                }
                for (int i = 0; i < dim_; ++i) n[i] = -faces_[best_j].normal[i];
                return n;
            }
            case DomainKind::cusp_union: {
                double best = std::numeric_limits<double>::infinity();
                std::size_t best_i = 0;
                for (std::size_t i = 0; i < centers_.size(); ++i) {
                    const double m =
                        std::abs(detail::dist(y, centers_[i]) - radii_[i]);
                    if (m < best - 1e-15) {
                        best = m;
                        best_i = i;
                    }
                }
                // Outward from the domain means into the ball.
                const auto& c = centers_[best_i];
                const double rho = detail::dist(y, c);
                for (int i = 0; i < dim_; ++i) n[i] = (c[i] - y[i]) / rho;
                return n;
            }
        }
        throw InputError("outward_normal: unknown kind");
    }

    // Largest exterior-ball radius the kind supports at every boundary point
    // (+infinity when unconstrained).
    double admissible_delta_limit() const {
        switch (kind_) {
            case DomainKind::ball:
            case DomainKind::halfspace:
            case DomainKind::box:
            case DomainKind::convex_polytope:
                return std::numeric_limits<double>::infinity();
            case DomainKind::annulus:
                return r_in_;
            case DomainKind::cusp_union:
                return *std::min_element(radii_.begin(), radii_.end());
        }
        throw InputError("admissible_delta_limit: unknown kind");
    }

    // --- accessors used by serialization and samplers ---
    const Point& center() const { return center_; }
    double radius() const { return radius_; }
    double inner_radius() const { return r_in_; }
    double outer_radius() const { return r_out_; }
    const Point& box_lo() const { return lo_; }
    const Point& box_hi() const { return hi_; }
    const std::vector<HalfspaceFace>& faces() const { return faces_; }
    const std::vector<Point>& ball_centers() const { return centers_; }
    const std::vector<double>& ball_radii() const { return radii_; }

    // Cyclic (Dykstra) projection onto the intersection of halfspaces;
    // relative tolerance 1e-12, at most 10^4 sweeps.  Exposed for tests.
    void dykstra_project(Point& p) const {
        const double scale = 1.0 + detail::norm(p);
        std::vector<Point> corr(faces_.size(),
                                Point(static_cast<std::size_t>(dim_), 0.0));
        Point y(static_cast<std::size_t>(dim_));
        for (int sweep = 0; sweep < 10000; ++sweep) {
            double moved = 0.0;
            for (std::size_t j = 0; j < faces_.size(); ++j) {
                for (int i = 0; i < dim_; ++i) y[i] = p[i] + corr[j][i];
                const double m =
                    detail::dot(y, faces_[j].normal) - faces_[j].offset;
                for (int i = 0; i < dim_; ++i) {
                    const double pn = m >= 0.0 ? y[i] : y[i] - m * faces_[j].normal[i];
                    corr[j][i] = y[i] - pn;
                    moved = std::max(moved, std::abs(pn - p[i]));
                    p[i] = pn;
                }
            }
            if (moved <= 1e-12 * scale && face_margin(p) >= -1e-12 * scale) return;
        }
        throw NumericalError("dykstra_project: sweep budget exhausted");
    }

private:
    Domain(DomainKind k, int dim) : kind_(k), dim_(dim) {}

    void check_dim(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != dim_)
            throw InputError("point dimension does not match domain");
    }

    double face_margin(std::span<const double> x) const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& f : faces_)
            m = std::min(m, detail::dot(x, f.normal) - f.offset);
        return m;
    }

    DomainKind kind_;
    int dim_;
    Point center_;
    double radius_ = 0.0;
    double r_in_ = 0.0;
    double r_out_ = 0.0;
    Point lo_, hi_;
    std::vector<HalfspaceFace> faces_;
    std::vector<Point> centers_;
    std::vector<double> radii_;
};

// Exterior tangent ball: |y - z| = delta and the closed ball B(z, delta)
// meets the closure of the domain only at y.
struct ExteriorBallWitness {
    Point y;
    Point z;
    double delta = 0.0;
};

namespace detail {

// Witness construction without the admissibility gate; check_uebc uses this
// to *measure* violations for inadmissible radii instead of refusing them.
inline ExteriorBallWitness witness_unchecked(const Domain& dom,
                                             std::span<const double> y,
                                             double delta) {
    if (!(delta > 0)) throw InputError("exterior_ball_witness: delta must be positive");
    const Point n = dom.outward_normal(y);
    ExteriorBallWitness w;
    w.y.assign(y.begin(), y.end());
    w.z.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) w.z[i] = y[i] + delta * n[i];
    w.delta = delta;
    return w;
}

}  // namespace detail

inline ExteriorBallWitness exterior_ball_witness(const Domain& dom,
                                                 std::span<const double> y,
                                                 double delta) {
    if (delta > dom.admissible_delta_limit())
        throw UnsupportedDeltaError(
            "exterior_ball_witness: delta exceeds the kind's admissible limit");
    return detail::witness_unchecked(dom, y, delta);
}

// Drift parameters induced by an exterior-ball radius: comparison arguments
// control the boundary-distance process by a drifted line with slope
// K = (d - 1) / (2 delta).  K vanishes exactly in dimension one.
struct DriftParams {
    int dim = 1;
    double delta = 1.0;
    double K = 0.0;

    DriftParams(int d, double dlt) : dim(d), delta(dlt) {
        if (d < 1) throw InputError("DriftParams: dim must be >= 1");
        if (!(dlt > 0)) throw InputError("DriftParams: delta must be positive");
        K = static_cast<double>(d - 1) / (2.0 * dlt);
    }
};

namespace detail {

// Orthonormal basis of the hyperplane orthogonal to unit vector n
// (deterministic Gram-Schmidt over the standard basis).
inline std::vector<Point> tangent_basis(const Point& n) {
    const std::size_t d = n.size();
    std::vector<Point> basis;
    basis.push_back(n);
    for (std::size_t i = 0; i < d && basis.size() < d; ++i) {
        Point v(d, 0.0);
        v[i] = 1.0;
        for (const auto& b : basis) {
            const double c = dot(v, b);
            for (std::size_t k = 0; k < d; ++k) v[k] -= c * b[k];
        }
        const double len = norm(v);
        if (len > 1e-8) {
            for (double& x : v) x /= len;
            basis.push_back(std::move(v));
        }
    }
    basis.erase(basis.begin());  // drop n itself
    return basis;
}

inline void sphere_direction(CounterRng& rng, std::span<double> out) {
    double len = 0.0;
    do {
        len = 0.0;
        for (double& v : out) {
            v = rng.normal();
            len += v * v;
        }
    } while (len == 0.0);
    len = std::sqrt(len);
    for (double& v : out) v /= len;
}

inline double worst_face_margin(const Domain& dom, const Point& p) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& f : dom.faces()) m = std::min(m, dot(p, f.normal) - f.offset);
    return m;
}

// Interior point of a halfspace intersection by maximizing the worst face
// margin (concave piecewise-linear).  A subgradient of the minimum is any
// convex combination of the active faces' normals, so when the single worst
// normal makes no progress (several faces tie at a corner) the active set is
// widened face by face until some averaged direction improves.  Throws if no
// strictly interior point is found.
inline Point polytope_interior_point(const Domain& dom) {
    const int d = dom.dim();
    const auto& faces = dom.faces();
    Point x(static_cast<std::size_t>(d), 0.0);
    dom.dykstra_project(x);
    Point cand(x), dir(static_cast<std::size_t>(d));
    const auto line_search_margin = [&](const Point& from, const Point& g,
                                        Point& best) {
        double lo = 0.0, hi = 8.0 * (1.0 + norm(from));
        for (int it = 0; it < 80; ++it) {
            const double t1 = lo + (hi - lo) / 3.0;
            const double t2 = hi - (hi - lo) / 3.0;
            for (int i = 0; i < d; ++i) best[i] = from[i] + t1 * g[i];
            const double m1 = worst_face_margin(dom, best);
            for (int i = 0; i < d; ++i) best[i] = from[i] + t2 * g[i];
            const double m2 = worst_face_margin(dom, best);
            if (m1 < m2)
                lo = t1;
            else
                hi = t2;
        }
        const double t = 0.5 * (lo + hi);
        for (int i = 0; i < d; ++i) best[i] = from[i] + t * g[i];
        return worst_face_margin(dom, best);
    };
    std::vector<double> margins(faces.size());
    std::vector<std::size_t> order(faces.size());
    for (int iter = 0; iter < 300; ++iter) {
        for (std::size_t j = 0; j < faces.size(); ++j)
            margins[j] = dot(x, faces[j].normal) - faces[j].offset;
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return margins[a] < margins[b]; });
        const double m = margins[order[0]];
        bool improved = false;
        // Average the k worst faces' normals for growing k until one improves.
        for (std::size_t k = 1; k <= faces.size() && !improved; ++k) {
            std::fill(dir.begin(), dir.end(), 0.0);
            for (std::size_t j = 0; j < k; ++j)
                for (int i = 0; i < d; ++i)
                    dir[static_cast<std::size_t>(i)] +=
                        faces[order[j]].normal[static_cast<std::size_t>(i)];
            const double len = norm(dir);
            if (len < 1e-14) continue;  // opposing normals cancel
            for (double& v : dir) v /= len;
            if (line_search_margin(x, dir, cand) > m + 1e-13 * (1.0 + std::abs(m))) {
                x = cand;
                improved = true;
            }
        }
        if (!improved) break;
    }
    if (!(worst_face_margin(dom, x) > 1e-9))
        throw NumericalError("polytope interior point not found (empty interior?)");
    return x;
}

}  // namespace detail

// Draws a point on the boundary.  Spheres, boxes and annuli are sampled with
// exact area weighting; the halfspace hyperplane uses a fixed tangential
// window (the boundary is flat, any window covers the geometry); polytope
// boundaries are sampled by casting rays from an interior point (positive
// density on every facet, not exactly area-weighted).
inline void sample_boundary(const Domain& dom, CounterRng& rng,
                            std::span<double> out) {
    const int d = dom.dim();
    if (static_cast<int>(out.size()) != d)
        throw InputError("sample_boundary: output dimension mismatch");
    switch (dom.kind()) {
        case DomainKind::ball: {
            detail::sphere_direction(rng, out);
            for (int i = 0; i < d; ++i)
                out[i] = dom.center()[i] + dom.radius() * out[i];
            return;
        }
        case DomainKind::halfspace: {
            const auto& f = dom.faces()[0];
            const auto basis = detail::tangent_basis(f.normal);
            for (int i = 0; i < d; ++i) out[i] = f.offset * f.normal[i];
            for (const auto& b : basis) {
                const double c = (2.0 * rng.uniform01() - 1.0) * 10.0;
                for (int i = 0; i < d; ++i) out[i] += c * b[i];
            }
            return;
        }
        case DomainKind::box: {
            const auto& lo = dom.box_lo();
            const auto& hi = dom.box_hi();
            std::vector<double> area(static_cast<std::size_t>(d), 1.0);
            double total = 0.0;
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j)
                    if (j != i) area[i] *= hi[j] - lo[j];
                total += 2.0 * area[i];
            }
            double pick = rng.uniform01() * total;
            int axis = 0;
            bool high = false;
            for (int i = 0; i < d; ++i) {
                if (pick < area[i]) {
                    axis = i;
                    high = false;
                    break;
                }
                pick -= area[i];
                if (pick < area[i]) {
                    axis = i;
                    high = true;
                    break;
                }
                pick -= area[i];
                if (i == d - 1) {
                    axis = i;
                    high = true;
                }
            }
            for (int i = 0; i < d; ++i)
                out[i] = lo[i] + rng.uniform01() * (hi[i] - lo[i]);
            out[axis] = high ? hi[axis] : lo[axis];
            return;
        }
        case DomainKind::annulus: {
            const double a = std::pow(dom.inner_radius(), d - 1);
            const double b = std::pow(dom.outer_radius(), d - 1);
            const double r =
                rng.uniform01() * (a + b) < b ? dom.outer_radius() : dom.inner_radius();
            detail::sphere_direction(rng, out);
            for (int i = 0; i < d; ++i) out[i] = dom.center()[i] + r * out[i];
            return;
        }
        case DomainKind::convex_polytope: {
            const Point x0 = detail::polytope_interior_point(dom);
            std::vector<double> u(static_cast<std::size_t>(d));
            for (int attempt = 0; attempt < 1000; ++attempt) {
                detail::sphere_direction(rng, u);
                double t_hit = std::numeric_limits<double>::infinity();
                for (const auto& f : dom.faces()) {
                    const double du = detail::dot(u, f.normal);
                    if (du < -1e-14) {
                        const double t =
                            (f.offset - detail::dot(x0, f.normal)) / du;
                        if (t > 0.0) t_hit = std::min(t_hit, t);
                    }
                }
                if (std::isfinite(t_hit)) {
                    for (int i = 0; i < d; ++i) out[i] = x0[i] + t_hit * u[i];
                    return;
                }
                // Unbounded direction: resample.
            }
            throw NumericalError("sample_boundary: no boundary hit (polytope)");
        }
        case DomainKind::cusp_union: {
            const auto& centers = dom.ball_centers();
            const auto& radii = dom.ball_radii();
            double total = 0.0;
            for (double r : radii) total += std::pow(r, d - 1);
            double pick = rng.uniform01() * total;
            std::size_t which = radii.size() - 1;
            for (std::size_t i = 0; i < radii.size(); ++i) {
                const double w = std::pow(radii[i], d - 1);
                if (pick < w) {
                    which = i;
                    break;
                }
                pick -= w;
            }
            detail::sphere_direction(rng, out);
            for (int i = 0; i < d; ++i)
                out[i] = centers[which][i] + radii[which] * out[i];
            return;
        }
    }
    throw InputError("sample_boundary: unknown kind");
}

struct UebcReport {
    bool pass = false;
    double delta = 0.0;
    // Worst observed penetration of a witness ball into the closure
    // (delta - min distance); <= tol when the condition holds.
    double worst_margin = 0.0;
    int n_witnesses = 0;
};

// Statistical validation of the uniform exterior-ball condition at radius
// delta: sample boundary points, build witness balls, and verify that no
// sampled closure point (including the exact nearest-closure projection of
// each witness center, which is itself a closure point) penetrates a witness
// ball.  Inadmissible radii are deliberately *measured* rather than refused,
// so the check doubles as a negative-fixture detector.
inline UebcReport check_uebc(const Domain& dom, double delta,
                             int n_boundary_samples = 256,
                             uint64_t seed = 0x5eedULL, double tol = 1e-9) {
    if (n_boundary_samples < 1) throw InputError("check_uebc: need >= 1 sample");
    if (!(delta > 0)) throw InputError("check_uebc: delta must be positive");
    const int d = dom.dim();
    std::vector<Point> cloud;
    cloud.reserve(static_cast<std::size_t>(n_boundary_samples));
    {
        CounterRng rng(seed, 0, 0);
        Point y(static_cast<std::size_t>(d));
        for (int i = 0; i < n_boundary_samples; ++i) {
            sample_boundary(dom, rng, y);
            cloud.push_back(y);
        }
    }
    UebcReport rep;
    rep.delta = delta;
    rep.n_witnesses = n_boundary_samples;
    rep.worst_margin = -std::numeric_limits<double>::infinity();
    Point proj(static_cast<std::size_t>(d));
    for (const auto& y : cloud) {
        const auto w = detail::witness_unchecked(dom, y, delta);
        double min_dist = std::numeric_limits<double>::infinity();
        for (const auto& x : cloud)
            min_dist = std::min(min_dist, detail::dist(x, w.z));
        dom.project_to_closure(w.z, proj);
        min_dist = std::min(min_dist, detail::dist(proj, w.z));
        rep.worst_margin = std::max(rep.worst_margin, delta - min_dist);
    }
    rep.pass = rep.worst_margin <= tol;
    return rep;
}

}  // namespace pathmc
