#include "segavd/geometry.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "segavd/linalg.hpp"

namespace segavd {

Vec Segment::direction() const {
    const double len = length();
    if (len == 0.0) throw UsageError("Segment::direction: degenerate segment");
    Vec v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = (b[i] - a[i]) / len;
    return v;
}

PointSegmentResult dist_point_segment(const Vec& q, const Segment& s) {
    check_dims(q, s.a, "dist_point_segment");
    PointSegmentResult res;
    const double len2 = dist2(s.a, s.b);
    if (len2 == 0.0) {
        res.t = 0.0;
        res.interior = false;
        res.closest = s.a;
        res.distance = dist(q, s.a);
        return res;
    }
    double t_raw = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) t_raw += (q[i] - s.a[i]) * (s.b[i] - s.a[i]);
    t_raw /= len2;
    res.interior = (t_raw > 0.0 && t_raw < 1.0);
    res.t = std::clamp(t_raw, 0.0, 1.0);
    res.closest.resize(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        res.closest[i] = s.a[i] + res.t * (s.b[i] - s.a[i]);
    res.distance = dist(q, res.closest);
    return res;
}

double dist_segment_segment(const Segment& s1, const Segment& s2) {
    check_dims(s1.a, s2.a, "dist_segment_segment");

    const std::size_t d = s1.a.size();
    Vec u(d), v(d), w(d);
    for (std::size_t i = 0; i < d; ++i) {
        u[i] = s1.b[i] - s1.a[i];
        v[i] = s2.b[i] - s2.a[i];
        w[i] = s1.a[i] - s2.a[i];
    }
    const double uu = dot(u, u);
    const double vv = dot(v, v);
    const double uv = dot(u, v);
    const double det = uu * vv - uv * uv;

    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](double s, double t) {
        s = std::clamp(s, 0.0, 1.0);
        t = std::clamp(t, 0.0, 1.0);
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double diff = (s1.a[i] + s * u[i]) - (s2.a[i] + t * v[i]);
            acc += diff * diff;
        }
        best = std::min(best, std::sqrt(acc));
    };

    // Interior critical point when the segments are not near-parallel.
    if (det > 1e-12 * uu * vv) {
        const double uw = dot(u, w);
        const double vw = dot(v, w);
        const double s = (uv * vw - vv * uw) / det;
        const double t = (uu * vw - uv * uw) / det;
        consider(s, t);
    }

    // Boundary candidates: fix each parameter at its endpoints and minimize
    // the other in closed form (also covers parallel/collinear/degenerate cases).
    if (vv > 0.0) {
        consider(0.0, dot(w, v) / vv);
        consider(1.0, dot(sub(s1.b, s2.a), v) / vv);
    } else {
        consider(0.0, 0.0);
        consider(1.0, 0.0);
    }
    if (uu > 0.0) {
        consider(dot(sub(s2.a, s1.a), u) / uu, 0.0);
        consider(dot(sub(s2.b, s1.a), u) / uu, 1.0);
    } else {
        consider(0.0, 0.0);
        consider(0.0, 1.0);
    }
    return best;
}

SegmentSet::SegmentSet(std::vector<Segment> segments, bool allow_degenerate)
    : segments_(std::move(segments)) {
    if (segments_.empty()) throw UsageError("SegmentSet: needs at least one segment");
    dim_ = segments_[0].a.size();
    if (dim_ < 2) throw UsageError("SegmentSet: dimension must be at least 2");

    for (std::size_t i = 0; i < segments_.size(); ++i) {
        Segment& s = segments_[i];
        s.id = static_cast<int>(i);
        if (s.a.size() != dim_ || s.b.size() != dim_)
            throw UsageError("SegmentSet: inconsistent dimensions at segment " + std::to_string(i));
        if (!all_finite(s.a) || !all_finite(s.b))
            throw InvalidInstanceError("SegmentSet: non-finite coordinate at segment " +
                                       std::to_string(i));
        if (s.degenerate() && !allow_degenerate)
            throw InvalidInstanceError("SegmentSet: zero-length segment " + std::to_string(i) +
                                       " (enable degenerate sites to allow points)");
    }

    // diameter over endpoints (segments are convex hulls of their endpoints)
    std::vector<const Vec*> pts;
    pts.reserve(2 * segments_.size());
    for (const Segment& s : segments_) {
        pts.push_back(&s.a);
        pts.push_back(&s.b);
    }
    double diam2 = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            diam2 = std::max(diam2, dist2(*pts[i], *pts[j]));
    stats_.diam = std::sqrt(diam2);

    if (segments_.size() >= 2) {
        double min_gap = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < segments_.size(); ++i)
            for (std::size_t j = i + 1; j < segments_.size(); ++j)
                min_gap = std::min(min_gap, dist_segment_segment(segments_[i], segments_[j]));
        if (min_gap <= 0.0)
            throw InvalidInstanceError("SegmentSet: segments intersect or touch (min gap = 0)");
        stats_.min_gap = min_gap;
        stats_.spread = stats_.diam / min_gap;
    } else {
        stats_.min_gap = 0.0;
        stats_.spread = 0.0;
    }
}

FeatureSize nearest_segments(const Vec& x, const SegmentSet& s) {
    FeatureSize fs;
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    int i1 = -1, i2 = -1;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double di = dist_point_segment(x, s[i]).distance;
        if (di < d1) {
            d2 = d1;
            i2 = i1;
            d1 = di;
            i1 = static_cast<int>(i);
        } else if (di < d2) {
            d2 = di;
            i2 = static_cast<int>(i);
        }
    }
    fs.nearest_dist = d1;
    fs.nearest = i1;
    fs.second = i2;
    fs.phi = d2;
    return fs;
}

FeatureSize local_feature_size(const Vec& x, const SegmentSet& s) {
    if (s.size() < 2)
        throw UsageError("local_feature_size: not defined for fewer than two segments");
    return nearest_segments(x, s);
}

// ---- minimum enclosing ball (Welzl, move-to-front) ---------------------------

namespace {

// Smallest ball with all of `support` on its boundary (support affinely
// independent, |support| <= d+1): solve the Gram system for the circumcenter
// in the affine hull of the support points.
Ball circumball(const std::vector<Vec>& support) {
    Ball b;
    if (support.empty()) {
        b.radius = -1.0;
        return b;
    }
    const std::size_t k = support.size() - 1;
    const Vec& p0 = support[0];
    if (k == 0) {
        b.center = p0;
        b.radius = 0.0;
        return b;
    }
    SymMat gram(k);
    Vec rhs(k);
    for (std::size_t i = 0; i < k; ++i) {
        const Vec qi = sub(support[i + 1], p0);
        for (std::size_t j = 0; j < k; ++j) {
            const Vec qj = sub(support[j + 1], p0);
            gram(i, j) = dot(qi, qj);
        }
        rhs[i] = 0.5 * dot(qi, qi);
    }
    Vec beta;
    try {
        beta = solve_spd(gram, rhs);
    } catch (const UsageError&) {
        // affinely dependent support; treat as degenerate
        b.center = p0;
        b.radius = -1.0;
        return b;
    }
    b.center = p0;
    for (std::size_t i = 0; i < k; ++i) axpy(b.center, beta[i], sub(support[i + 1], p0));
    b.radius = dist(b.center, p0);
    return b;
}

Ball welzl(std::vector<const Vec*>& pts, std::size_t n, std::vector<Vec>& support,
           std::size_t dim) {
    if (n == 0 || support.size() == dim + 1) return circumball(support);
    Ball b = welzl(pts, n - 1, support, dim);
    const Vec& p = *pts[n - 1];
    if (b.radius >= 0.0 && b.contains(p, 1e-12 * (1.0 + b.radius))) return b;

    support.push_back(p);
    Ball b2 = welzl(pts, n - 1, support, dim);
    support.pop_back();

    // move-to-front
    const Vec* tmp = pts[n - 1];
    for (std::size_t i = n - 1; i > 0; --i) pts[i] = pts[i - 1];
    pts[0] = tmp;
    return b2;
}

}  // namespace

Ball min_enclosing_ball(const std::vector<Vec>& points) {
    if (points.empty()) throw UsageError("min_enclosing_ball: empty point set");
    const std::size_t dim = points[0].size();

    std::vector<const Vec*> pts(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) pts[i] = &points[i];

    // Deterministic shuffle for the expected-linear bound.
    Rng rng(1);
    for (std::size_t i = pts.size(); i > 1; --i)
        std::swap(pts[i - 1], pts[rng.below(i)]);

    std::vector<Vec> support;
    Ball b = welzl(pts, pts.size(), support, dim);

    // Guard: expand to cover any numerically outside point.
    double rmax = b.radius;
    for (const Vec& p : points) rmax = std::max(rmax, dist(p, b.center));
    b.radius = rmax;
    return b;
}

DomainBall domain_ball(const SegmentSet& s, double epsilon) {
    if (epsilon <= 0.0) throw UsageError("domain_ball: epsilon must be positive");
    std::vector<Vec> pts;
    pts.reserve(2 * s.size());
    for (const Segment& seg : s.segments()) {
        pts.push_back(seg.a);
        pts.push_back(seg.b);
    }
    const Ball inner = min_enclosing_ball(pts);
    DomainBall db;
    db.center = inner.center;
    db.inner_radius = inner.radius;
    db.radius = (1.0 + 2.0 / epsilon) * inner.radius;
    return db;
}

// ---- instance JSON ------------------------------------------------------------

SegmentSet parse_instance(const std::string& json_text, bool allow_degenerate) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInstanceError(std::string("instance parse error: ") + e.what());
    }
    if (!j.contains("dim") || !j.contains("segments"))
        throw InvalidInstanceError("instance parse error: missing 'dim' or 'segments'");
    const std::size_t d = j["dim"].get<std::size_t>();
    std::vector<Segment> segs;
    for (const auto& js : j["segments"]) {
        if (!js.is_array() || js.size() != 2)
            throw InvalidInstanceError("instance parse error: segment must be [[a],[b]]");
        Segment s;
        s.a = js[0].get<Vec>();
        s.b = js[1].get<Vec>();
        if (s.a.size() != d || s.b.size() != d)
            throw InvalidInstanceError("instance parse error: endpoint dimension != dim");
        segs.push_back(std::move(s));
    }
    return SegmentSet(std::move(segs), allow_degenerate);
}

SegmentSet load_instance(const std::string& path, bool allow_degenerate) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open instance file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_instance(buf.str(), allow_degenerate);
}

std::string instance_to_json(const SegmentSet& s) {
    nlohmann::json j;
    j["dim"] = s.dim();
    nlohmann::json arr = nlohmann::json::array();
    for (const Segment& seg : s.segments()) arr.push_back({seg.a, seg.b});
    j["segments"] = arr;
    return j.dump(2) + "\n";
}

void save_instance(const SegmentSet& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write instance file: " + path);
    out << instance_to_json(s);
}

}  // namespace segavd
