#include "segavd/capsule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "segavd/tensors.hpp"

namespace segavd {

bool Capsule::contains(const Vec& z, double lambda) const {
    const Vec w = sub(z, center);
    const double rel = Tolerances::global().membership_rel;
    for (const ConcentricConstraint& c : constraints) {
        const double t = lambda * c.threshold;
        if (c.form(w) > t * t * (1.0 + rel)) return false;
    }
    return true;
}

double Capsule::min_ball_threshold() const {
    double t = std::numeric_limits<double>::infinity();
    for (const ConcentricConstraint& c : constraints)
        if (c.kind == ConcentricConstraint::Kind::Ball) t = std::min(t, c.threshold);
    return t;
}

Capsule Capsule::pruned() const {
    Capsule out;
    out.center = center;
    out.r = r;
    const double tb = min_ball_threshold();
    bool kept_min_ball = false;
    for (const ConcentricConstraint& c : constraints) {
        if (c.kind == ConcentricConstraint::Kind::Ball) {
            if (!kept_min_ball && c.threshold == tb) {
                out.constraints.push_back(c);
                kept_min_ball = true;
            }
            // any other ball is implied by the tightest one
        } else if (c.threshold < tb) {
            out.constraints.push_back(c);
        }
        // a cylinder with threshold >= tb is implied by the tightest ball,
        // because (I - vv^T) <= I as quadratic forms
    }
    return out;
}

double Capsule::Box::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= (hi[i] - lo[i]);
    return v;
}

Capsule::Box Capsule::bounding_box(double lambda) const {
    const double tb = lambda * min_ball_threshold();
    Box box;
    box.lo = center;
    box.hi = center;
    for (std::size_t i = 0; i < center.size(); ++i) {
        box.lo[i] -= tb;
        box.hi[i] += tb;
    }
    return box;
}

Capsule build_capsule(const SegmentSet& s, const Vec& x, double r) {
    if (r < 0.0) throw UsageError("build_capsule: r must be nonnegative");
    check_dims(x, s[0].a, "build_capsule");

    Capsule c;
    c.center = x;
    c.r = r;
    c.constraints.reserve(2 * s.size());
    for (const Segment& seg : s.segments()) {
        const DistanceTriple t = distance_triple(x, seg);
        const double seg_dist = std::sqrt(2.0 * t.d_seg);
        if (t.interior_foot && !seg.degenerate()) {
            ConcentricConstraint cyl;
            cyl.kind = ConcentricConstraint::Kind::Cylinder;
            cyl.axis = seg.direction();
            cyl.threshold = std::max(r, seg_dist);
            cyl.segment = seg.id;
            c.constraints.push_back(std::move(cyl));

            ConcentricConstraint ball;
            ball.kind = ConcentricConstraint::Kind::Ball;
            ball.threshold = std::max(r, std::sqrt(2.0 * t.d_endpoint));
            ball.segment = seg.id;
            c.constraints.push_back(std::move(ball));
        } else {
            ConcentricConstraint ball;
            ball.kind = ConcentricConstraint::Kind::Ball;
            ball.threshold = std::max(r, seg_dist);
            ball.segment = seg.id;
            c.constraints.push_back(std::move(ball));
        }
    }
    return c;
}

Vec capsule_boundary_point(const Capsule& c, double lambda, const Vec& direction) {
    const double dn = norm(direction);
    if (dn == 0.0) throw UsageError("capsule_boundary_point: zero direction");
    Vec u = scaled(direction, 1.0 / dn);

    double rho = std::numeric_limits<double>::infinity();
    for (const ConcentricConstraint& cc : c.constraints) {
        const double t = lambda * cc.threshold;
        if (cc.kind == ConcentricConstraint::Kind::Ball) {
            rho = std::min(rho, t);
        } else {
            const double along = dot(u, cc.axis);
            const double perp2 = std::max(1.0 - along * along, 0.0);
            if (perp2 > 1e-24) rho = std::min(rho, t / std::sqrt(perp2));
        }
    }
    Vec z = c.center;
    axpy(z, rho, u);
    return z;
}

namespace {

/// Projects z onto one scaled constraint (centered at `center`). Closed form:
/// balls rescale the radial part, cylinders rescale the part orthogonal to
/// the axis.
void project_onto(Vec& z, const Vec& center, const ConcentricConstraint& c, double lambda) {
    const double t = lambda * c.threshold;
    Vec w = sub(z, center);
    if (c.kind == ConcentricConstraint::Kind::Ball) {
        const double n = norm(w);
        if (n > t) {
            const double f = t / n;
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = center[i] + w[i] * f;
        }
    } else {
        const double along = dot(w, c.axis);
        Vec perp = w;
        axpy(perp, -along, c.axis);
        const double n = norm(perp);
        if (n > t) {
            const double f = t / n;
            for (std::size_t i = 0; i < z.size(); ++i)
                z[i] = center[i] + along * c.axis[i] + perp[i] * f;
        }
    }
}

}  // namespace

std::optional<Vec> shrunken_intersection_witness(const Capsule& c1, const Capsule& c2,
                                                 double lambda, int max_iter,
                                                 double convergence) {
    check_dims(c1.center, c2.center, "shrunken_intersection_witness");

    Vec z(c1.center.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = 0.5 * (c1.center[i] + c2.center[i]);

    const double scale = 1.0 + dist(c1.center, c2.center);
    for (int it = 0; it < max_iter; ++it) {
        Vec prev = z;
        for (const ConcentricConstraint& c : c1.constraints) project_onto(z, c1.center, c, lambda);
        for (const ConcentricConstraint& c : c2.constraints) project_onto(z, c2.center, c, lambda);
        if (c1.contains(z, lambda) && c2.contains(z, lambda)) return z;
        if (dist(prev, z) < convergence * scale) break;
    }
    if (c1.contains(z, lambda) && c2.contains(z, lambda)) return z;
    return std::nullopt;
}

// ---- sandwich bodies ---------------------------------------------------------

bool BoundingVolumes::inner_contains(const Vec& z) const {
    const Vec w = sub(z, center);
    if (degenerate) return norm(w) <= base_radius * (1.0 + 1e-12);
    const double along = std::abs(dot(w, axis));
    if (along > half_height * (1.0 + 1e-12)) return false;
    Vec perp = w;
    axpy(perp, -dot(w, axis), axis);
    const double allowed = base_radius * (1.0 - along / half_height);
    return norm(perp) <= allowed + 1e-12 * base_radius;
}

bool BoundingVolumes::outer_contains(const Vec& z) const {
    const Vec w = sub(z, center);
    if (degenerate) return norm(w) <= base_radius * (1.0 + 1e-12);
    const double along = std::abs(dot(w, axis));
    if (along > outer_half_height * (1.0 + 1e-12)) return false;
    Vec perp = w;
    axpy(perp, -dot(w, axis), axis);
    return norm(perp) <= base_radius * (1.0 + 1e-12);
}

double BoundingVolumes::inner_volume() const {
    const int d = static_cast<int>(center.size());
    if (degenerate) return std::pow(base_radius, d) * segavd::unit_ball_volume(d);
    // double cone: 2 * (base area * height / d)
    return 2.0 * unit_ball_volume * std::pow(base_radius, d - 1) * half_height / d;
}

double BoundingVolumes::outer_volume() const {
    const int d = static_cast<int>(center.size());
    if (degenerate) return std::pow(base_radius, d) * segavd::unit_ball_volume(d);
    return unit_ball_volume * std::pow(base_radius, d - 1) * 2.0 * outer_half_height;
}

BoundingVolumes bounding_volumes(const SegmentSet& s, const Vec& x, double r) {
    if (s.size() < 2) throw UsageError("bounding_volumes: needs at least two segments");
    const Capsule cap = build_capsule(s, x, r);
    const FeatureSize fs = nearest_segments(x, s);

    BoundingVolumes bv;
    bv.center = x;
    bv.unit_ball_volume = unit_ball_volume(static_cast<int>(x.size()) - 1);

    // Locate s1's constraints.
    const ConcentricConstraint* cyl1 = nullptr;
    for (const ConcentricConstraint& c : cap.constraints)
        if (c.segment == fs.nearest && c.kind == ConcentricConstraint::Kind::Cylinder) cyl1 = &c;

    if (cyl1 == nullptr) {
        // nearest point is an endpoint: the capsule term for s1 is a ball
        bv.degenerate = true;
        for (const ConcentricConstraint& c : cap.constraints)
            if (c.segment == fs.nearest) bv.base_radius = c.threshold;
        bv.axis = Vec(x.size(), 0.0);
        bv.half_height = bv.outer_half_height = bv.base_radius;
        return bv;
    }

    bv.axis = cyl1->axis;
    bv.base_radius = cyl1->threshold;  // t1 = max(r, dist(x, s1))

    // Nearest positive-side crossing of l_x with any other constraint boundary.
    double best_tau = std::numeric_limits<double>::infinity();
    double best_sin = 1.0, best_cos = 0.0, best_t2 = 0.0;
    int best_seg = -1;
    double s1_ball = std::numeric_limits<double>::infinity();
    for (const ConcentricConstraint& c : cap.constraints) {
        if (c.segment == fs.nearest) {
            if (c.kind == ConcentricConstraint::Kind::Ball) s1_ball = c.threshold;
            continue;
        }
        double tau, sin_t = 1.0, cos_t = 0.0;
        if (c.kind == ConcentricConstraint::Kind::Ball) {
            tau = c.threshold;
        } else {
            const double ca = std::abs(dot(bv.axis, c.axis));
            const double sin2 = std::max(1.0 - ca * ca, 0.0);
            if (sin2 < 1e-24) continue;  // parallel: the line never crosses this cylinder
            sin_t = std::sqrt(sin2);
            cos_t = ca;
            tau = c.threshold / sin_t;
        }
        if (tau < best_tau) {
            best_tau = tau;
            best_sin = sin_t;
            best_cos = cos_t;
            best_t2 = c.threshold;
            best_seg = c.segment;
        }
    }

    bool apex_from_cylinder = false;
    if (!std::isfinite(best_tau)) {
        // no other constraint crosses: cap by s1's own ball
        best_tau = s1_ball;
        best_seg = fs.nearest;
    } else {
        // determine whether the apex constraint was a cylinder
        for (const ConcentricConstraint& c : cap.constraints)
            if (c.segment == best_seg && c.kind == ConcentricConstraint::Kind::Cylinder &&
                std::abs(c.threshold - best_t2) == 0.0) {
                const double ca = std::abs(dot(bv.axis, c.axis));
                if (1.0 - ca * ca >= 1e-24 && c.threshold / std::sqrt(1.0 - ca * ca) == best_tau)
                    apex_from_cylinder = true;
            }
    }

    bv.half_height = best_tau;
    bv.apex_segment = best_seg;
    bv.angle = apex_from_cylinder ? std::asin(std::min(best_sin, 1.0)) : 1.5707963267948966;

    // V+ height: projection of Cyl1 inter Cyl2 onto l_x, capped by every ball.
    double outer = std::numeric_limits<double>::infinity();
    if (apex_from_cylinder)
        outer = (best_t2 + bv.base_radius * best_cos) / best_sin;
    for (const ConcentricConstraint& c : cap.constraints)
        if (c.kind == ConcentricConstraint::Kind::Ball) outer = std::min(outer, c.threshold);
    bv.outer_half_height = std::max(outer, bv.half_height);
    return bv;
}

McVolume mc_volume(const std::function<bool(const Vec&)>& member, const Capsule::Box& box,
                   std::size_t samples, std::uint64_t seed) {
    if (samples == 0) throw UsageError("mc_volume: needs at least one sample");
    Rng rng(seed);
    const std::size_t d = box.lo.size();
    std::size_t hits = 0;
    Vec p(d);
    for (std::size_t i = 0; i < samples; ++i) {
        for (std::size_t k = 0; k < d; ++k) p[k] = rng.uniform(box.lo[k], box.hi[k]);
        if (member(p)) ++hits;
    }
    McVolume out;
    out.hits = hits;
    out.samples = samples;
    const double vol_box = box.volume();
    const double frac = static_cast<double>(hits) / static_cast<double>(samples);
    out.estimate = frac * vol_box;
    out.std_error = vol_box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(samples));
    out.flagged = (hits == 0);
    return out;
}

}  // namespace segavd
