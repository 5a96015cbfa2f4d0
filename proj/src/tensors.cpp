#include "segavd/tensors.hpp"

#include <cmath>
#include <stdexcept>

namespace segavd {

DistanceTriple distance_triple(const Vec& x, const Segment& s) {
    check_dims(x, s.a, "distance_triple");
    DistanceTriple t;
    const double da2 = dist2(x, s.a);
    const double db2 = dist2(x, s.b);
    t.d_endpoint = 0.5 * std::min(da2, db2);

    if (s.degenerate()) {
        t.d_line = t.d_endpoint;
        t.d_seg = t.d_endpoint;
        t.interior_foot = false;
        return t;
    }

    const Vec v = s.direction();
    const Vec w = sub(x, s.a);
    const double along = dot(w, v);
    t.d_line = 0.5 * std::max(norm2(w) - along * along, 0.0);
    t.interior_foot = (along > 0.0 && along < s.length());
    t.d_seg = t.interior_foot ? t.d_line : t.d_endpoint;
    return t;
}

SymMat hessian_line(const Vec& v) {
    const double n = norm(v);
    if (std::abs(n - 1.0) > 1e-12) throw UsageError("hessian_line: axis must be a unit vector");
    SymMat m = SymMat::identity(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) m(i, j) -= v[i] * v[j];
    return m;
}

LocalTensor local_tensor(const Vec& x, const Segment& s) {
    const DistanceTriple t = distance_triple(x, s);
    if (t.d_seg <= 0.0)
        throw std::domain_error("local_tensor: point lies on the segment (singular tensor)");

    LocalTensor lt;
    lt.eigen_small = 1.0 / t.d_endpoint;
    lt.eigen_large = 1.0 / t.d_seg;

    if (s.degenerate()) {
        lt.axis = Vec(x.size(), 0.0);
        lt.matrix = SymMat::identity(x.size()) * lt.eigen_small;
        return lt;
    }

    lt.axis = s.direction();
    lt.matrix = hessian_line(lt.axis) * (1.0 / t.d_seg);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j)
            lt.matrix(i, j) += lt.axis[i] * lt.axis[j] / t.d_endpoint;
    return lt;
}

bool local_ellipsoid_membership(const Vec& x, const Segment& s, const Vec& y) {
    const LocalTensor lt = local_tensor(x, s);
    const double form = 0.5 * lt.matrix.quad_form(sub(y, x));
    return form <= 1.0 + Tolerances::global().membership_rel;
}

BlendedTensor blended_tensor(const Vec& x, const SegmentSet& s) {
    BlendedTensor h;
    h.matrix = SymMat(x.size());
    for (const Segment& seg : s.segments()) h.matrix += local_tensor(x, seg).matrix;
    return h;
}

bool metric_ball_membership(const Vec& x, const BlendedTensor& h, const Vec& y) {
    const double form = 0.5 * h.matrix.quad_form(sub(y, x));
    return form <= 1.0 + Tolerances::global().membership_rel;
}

bool metric_ball_membership(const Vec& x, const SegmentSet& s, const Vec& y) {
    return metric_ball_membership(x, blended_tensor(x, s), y);
}

bool cell_membership(const Vec& x, const SegmentSet& s, const Vec& y) {
    for (const Segment& seg : s.segments())
        if (!local_ellipsoid_membership(x, seg, y)) return false;
    return true;
}

}  // namespace segavd
