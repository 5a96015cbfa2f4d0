#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "segavd/geometry.hpp"
#include "segavd/workbench.hpp"

using namespace segavd;

namespace {

// Independent oracle: dense sweep of the segment parameter.
double sweep_point_segment(const Vec& q, const Segment& s, double step) {
    const long n = std::lround(1.0 / step);
    double best = 1e300;
    for (long i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n);
        Vec p(q.size());
        for (std::size_t k = 0; k < q.size(); ++k) p[k] = s.a[k] + t * (s.b[k] - s.a[k]);
        best = std::min(best, dist(q, p));
    }
    return best;
}

// Independent oracle: grid sweep over both parameters.
double sweep_segment_segment(const Segment& s1, const Segment& s2, double step) {
    const long n = std::lround(1.0 / step);
    double best = 1e300;
    for (long a = 0; a <= n; ++a) {
        const double u = static_cast<double>(a) / static_cast<double>(n);
        Vec p(s1.a.size());
        for (std::size_t k = 0; k < p.size(); ++k) p[k] = s1.a[k] + u * (s1.b[k] - s1.a[k]);
        for (long b = 0; b <= n; ++b) {
            const double v = static_cast<double>(b) / static_cast<double>(n);
            double acc = 0.0;
            for (std::size_t k = 0; k < p.size(); ++k) {
                const double diff = p[k] - (s2.a[k] + v * (s2.b[k] - s2.a[k]));
                acc += diff * diff;
            }
            best = std::min(best, std::sqrt(acc));
        }
    }
    return best;
}

// Exact-enough oracle for seeded pairs: the squared distance is jointly convex
// over the parameter square, so nested ternary search converges.
double ternary_segment_segment(const Segment& s1, const Segment& s2) {
    auto dist_at = [&](double u, double v) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s1.a.size(); ++i) {
            const double diff =
                (s1.a[i] + u * (s1.b[i] - s1.a[i])) - (s2.a[i] + v * (s2.b[i] - s2.a[i]));
            acc += diff * diff;
        }
        return acc;
    };
    auto min_over_v = [&](double u) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 100; ++it) {
            const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if (dist_at(u, m1) < dist_at(u, m2))
                hi = m2;
            else
                lo = m1;
        }
        return dist_at(u, 0.5 * (lo + hi));
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 100; ++it) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (min_over_v(m1) < min_over_v(m2))
            hi = m2;
        else
            lo = m1;
    }
    return std::sqrt(min_over_v(0.5 * (lo + hi)));
}

Segment seg2(double ax, double ay, double bx, double by) { return {{ax, ay}, {bx, by}, 0}; }

}  // namespace

TEST_CASE("point-segment distance basics") {
    const Segment s = seg2(-1, 0, 1, 0);

    auto r1 = dist_point_segment({0.0, 1.0}, s);
    CHECK(r1.distance == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r1.interior);

    auto r2 = dist_point_segment({2.0, 0.0}, s);
    CHECK(r2.distance == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(r2.interior);
    CHECK(r2.t == doctest::Approx(1.0));
}

TEST_CASE("point-segment distance matches the dense-sweep oracle") {
    const Segment s{{0.0, 0.0}, {0.0, 1.0}, 0};
    const Vec q{3.0, 4.0};
    const double expect = sweep_point_segment(q, s, 1e-6);
    CHECK(dist_point_segment(q, s).distance == doctest::Approx(expect).epsilon(1e-9));
    CHECK(dist_point_segment(q, s).distance == doctest::Approx(std::sqrt(18.0)).epsilon(1e-12));
}

TEST_CASE("point on segment has zero distance") {
    const Segment s = seg2(0, 0, 1, 1);
    for (double t : {0.0, 0.25, 0.5, 1.0}) {
        const Vec q{t, t};
        CHECK(dist_point_segment(q, s).distance <= 1e-12);
    }
    CHECK(dist_point_segment({0.5, 0.5 + 1e-6}, s).distance > 1e-7);
}

TEST_CASE("segment-segment distance basics") {
    CHECK(dist_segment_segment(seg2(0, 0, 1, 0), seg2(0, 1, 1, 1)) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dist_segment_segment(seg2(0, 0, 1, 0), seg2(2, 0, 3, 0)) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("skew 3-D segments match the grid-sweep oracle") {
    const Segment s1{{0, 0, 0}, {1, 0, 0}, 0};
    const Segment s2{{0, 0, 1}, {0, 1, 1}, 1};
    const double expect = sweep_segment_segment(s1, s2, 1e-4);
    CHECK(dist_segment_segment(s1, s2) == doctest::Approx(expect).epsilon(1e-6));
    CHECK(dist_segment_segment(s1, s2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("segment-segment distance: 100 seeded pairs vs oracle, symmetric") {
    Rng rng(7);
    for (int k = 0; k < 100; ++k) {
        const std::size_t d = (k % 2 == 0) ? 2 : 3;
        Segment s1, s2;
        s1.a.resize(d);
        s1.b.resize(d);
        s2.a.resize(d);
        s2.b.resize(d);
        for (std::size_t i = 0; i < d; ++i) {
            s1.a[i] = rng.uniform(-1, 1);
            s1.b[i] = rng.uniform(-1, 1);
            s2.a[i] = rng.uniform(-1, 1);
            s2.b[i] = rng.uniform(-1, 1);
        }
        const double got = dist_segment_segment(s1, s2);
        const double sym = dist_segment_segment(s2, s1);
        CHECK(got == doctest::Approx(sym).epsilon(1e-12));
        const double oracle = ternary_segment_segment(s1, s2);
        CHECK(got == doctest::Approx(oracle).epsilon(1e-6));
    }
}

TEST_CASE("local feature size on the two-parallel fixture") {
    std::vector<Segment> segs{seg2(0, 0, 10, 0), seg2(0, 2, 10, 2)};
    const SegmentSet s(std::move(segs));

    CHECK(local_feature_size({5.0, 0.5}, s).phi == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(local_feature_size({5.0, 1.0}, s).phi == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("local feature size is the second order statistic") {
    Rng rng(11);
    RandomInstanceOptions opts;
    opts.min_gap = 0.05;
    const SegmentSet s = gen_random(3, 2, 42, opts);
    for (int k = 0; k < 50; ++k) {
        Vec x{rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5)};
        std::vector<double> dists;
        for (const Segment& seg : s.segments())
            dists.push_back(dist_point_segment(x, seg).distance);
        std::sort(dists.begin(), dists.end());
        CHECK(local_feature_size(x, s).phi == doctest::Approx(dists[1]).epsilon(1e-12));
    }
}

TEST_CASE("feature size requires two segments") {
    std::vector<Segment> segs{seg2(0, 0, 1, 0)};
    const SegmentSet s(std::move(segs));
    CHECK_THROWS_AS(local_feature_size({0.0, 1.0}, s), UsageError);
}

TEST_CASE("instance stats on a unit pair") {
    std::vector<Segment> segs{seg2(0, 0, 1, 0), seg2(0, 1, 1, 1)};
    const SegmentSet s(std::move(segs));

    // brute-force oracle over endpoint pairs and parameter grids
    double diam = 0.0;
    std::vector<Vec> pts{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    for (const Vec& p : pts)
        for (const Vec& q : pts) diam = std::max(diam, dist(p, q));
    const double gap = sweep_segment_segment(s[0], s[1], 1e-3);

    CHECK(s.diam() == doctest::Approx(diam).epsilon(1e-12));
    CHECK(s.min_gap() == doctest::Approx(gap).epsilon(1e-6));
    CHECK(s.spread() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("translated copies at distance 10") {
    std::vector<Segment> segs{seg2(0, 0, 1, 0), seg2(0, 10, 1, 10)};
    const SegmentSet s(std::move(segs));
    CHECK(s.min_gap() == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("touching segments are rejected") {
    std::vector<Segment> segs{seg2(0, 0, 1, 0), seg2(1, 0, 2, 0)};
    CHECK_THROWS_AS(SegmentSet(std::move(segs)), InvalidInstanceError);
}

TEST_CASE("zero-length segments rejected unless degenerate sites enabled") {
    std::vector<Segment> bad{seg2(0, 0, 0, 0), seg2(0, 1, 1, 1)};
    CHECK_THROWS_AS(SegmentSet(std::move(bad)), InvalidInstanceError);
    std::vector<Segment> ok{seg2(0, 0, 0, 0), seg2(0, 1, 1, 1)};
    CHECK_NOTHROW(SegmentSet(std::move(ok), true));
}

TEST_CASE("diameter via endpoints equals dense segment sampling") {
    RandomInstanceOptions opts;
    opts.min_gap = 0.02;
    const SegmentSet s = gen_random(8, 2, 5, opts);
    double dense = 0.0;
    const int steps = 400;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = i; j < s.size(); ++j)
            for (int a = 0; a <= steps; ++a)
                for (int b = 0; b <= steps; ++b) {
                    Vec p(2), q(2);
                    const double ta = static_cast<double>(a) / steps;
                    const double tb = static_cast<double>(b) / steps;
                    for (int k = 0; k < 2; ++k) {
                        p[k] = s[i].a[k] + ta * (s[i].b[k] - s[i].a[k]);
                        q[k] = s[j].a[k] + tb * (s[j].b[k] - s[j].a[k]);
                    }
                    dense = std::max(dense, dist(p, q));
                }
    CHECK(s.diam() == doctest::Approx(dense).epsilon(1e-6));
}

TEST_CASE("minimum enclosing ball") {
    SUBCASE("two points") {
        const Ball b = min_enclosing_ball({{0, 0}, {2, 0}});
        CHECK(b.center[0] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(b.radius == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("square corners") {
        const Ball b = min_enclosing_ball({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
        CHECK(b.radius == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
    }
    SUBCASE("random point sets stay enclosed and tight") {
        Rng rng(3);
        for (int rep = 0; rep < 20; ++rep) {
            const std::size_t d = 2 + rep % 2;
            std::vector<Vec> pts;
            for (int k = 0; k < 40; ++k) {
                Vec p(d);
                for (auto& x : p) x = rng.uniform(-1, 1);
                pts.push_back(std::move(p));
            }
            const Ball b = min_enclosing_ball(pts);
            double maxd = 0.0;
            for (const Vec& p : pts) maxd = std::max(maxd, dist(p, b.center));
            CHECK(maxd <= b.radius * (1 + 1e-12) + 1e-12);
            // minimality: some point is on the boundary
            CHECK(maxd == doctest::Approx(b.radius).epsilon(1e-9));
        }
    }
}

TEST_CASE("domain ball") {
    SUBCASE("single segment, eps 2") {
        std::vector<Segment> segs{seg2(0, 0, 10, 0)};
        const SegmentSet s(std::move(segs));
        const DomainBall db = domain_ball(s, 2.0);
        CHECK(db.center[0] == doctest::Approx(5.0).epsilon(1e-9));
        CHECK(db.center[1] == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(db.inner_radius == doctest::Approx(5.0).epsilon(1e-9));
        CHECK(db.radius == doctest::Approx(10.0).epsilon(1e-9));
    }
    SUBCASE("eps 0.1 expands by 21") {
        std::vector<Segment> segs{seg2(0, 0, 10, 0)};
        const SegmentSet s(std::move(segs));
        const DomainBall db = domain_ball(s, 0.1);
        CHECK(db.radius == doctest::Approx(21.0 * db.inner_radius).epsilon(1e-12));
    }
    SUBCASE("random instance endpoints inside with slack") {
        RandomInstanceOptions opts;
        opts.min_gap = 0.02;
        const SegmentSet s = gen_random(10, 2, 9, opts);
        const DomainBall db = domain_ball(s, 0.5);
        for (const Segment& seg : s.segments()) {
            CHECK(dist(seg.a, db.center) <= db.inner_radius * (1 + 1e-9));
            CHECK(dist(seg.b, db.center) <= db.inner_radius * (1 + 1e-9));
        }
        CHECK(db.radius == doctest::Approx((1 + 2 / 0.5) * db.inner_radius));
    }
}

TEST_CASE("feature size is 1-Lipschitz on seeded pairs") {
    RandomInstanceOptions opts;
    opts.min_gap = 0.05;
    const SegmentSet s = gen_random(5, 2, 13, opts);
    Rng rng(17);
    for (int k = 0; k < 10000; ++k) {
        Vec x{rng.uniform(-1, 2), rng.uniform(-1, 2)};
        Vec y{rng.uniform(-1, 2), rng.uniform(-1, 2)};
        const double px = local_feature_size(x, s).phi;
        const double py = local_feature_size(y, s).phi;
        CHECK(std::abs(px - py) <= dist(x, y) + 1e-9);
    }
}

TEST_CASE("instance JSON round trip and validation") {
    RandomInstanceOptions opts;
    opts.min_gap = 0.05;
    const SegmentSet s = gen_random(4, 3, 21, opts);
    const std::string text = instance_to_json(s);
    const SegmentSet back = parse_instance(text);
    CHECK(back.size() == s.size());
    CHECK(back.dim() == s.dim());
    CHECK(instance_to_json(back) == text);

    CHECK_THROWS_AS(parse_instance("{not json"), InvalidInstanceError);
    CHECK_THROWS_AS(parse_instance("{\"dim\":2,\"segments\":[[[0,0],[0,0,1]]]}"),
                    InvalidInstanceError);
}
