#pragma once

#include "segavd/geometry.hpp"
#include "segavd/linalg.hpp"

namespace segavd {

/// The three half-squared distances from a point to a segment: to the segment
/// itself, to its supporting line, and to the nearer endpoint. All values are
/// (distance^2)/2, which keeps the Hessians of the underlying functions clean.
struct DistanceTriple {
    double d_seg = 0.0;      ///< D_i(x)
    double d_line = 0.0;     ///< distance to the supporting line
    double d_endpoint = 0.0; ///< min over the two endpoints
    bool interior_foot = false;
};

DistanceTriple distance_triple(const Vec& x, const Segment& s);

/// I - v v^T for a unit vector v. Throws UsageError when ||v|| deviates from 1
/// by more than 1e-12.
SymMat hessian_line(const Vec& v);

/// The per-segment anisotropic tensor
///   H_i(x) = (1/D_i) (I - v v^T) + (1/D_endpoint) v v^T,
/// with one eigenvalue 1/D_endpoint (eigenvector v) and d-1 eigenvalues 1/D_i.
struct LocalTensor {
    SymMat matrix;
    double eigen_small = 0.0; ///< 1/D_endpoint
    double eigen_large = 0.0; ///< 1/D_seg
    Vec axis;                 ///< segment direction v (zero for point sites)
};

/// Throws std::domain_error when x lies on the segment (singular tensor).
LocalTensor local_tensor(const Vec& x, const Segment& s);

/// Membership in the per-segment ellipsoid: (1/2) (y-x)^T H_i(x) (y-x) <= 1.
bool local_ellipsoid_membership(const Vec& x, const Segment& s, const Vec& y);

/// Sum of per-segment tensors; acts as the shape of a metric ball at x.
struct BlendedTensor {
    SymMat matrix;
};

BlendedTensor blended_tensor(const Vec& x, const SegmentSet& s);

/// (1/2) (y-x)^T H(x) (y-x) <= 1 for the blended tensor.
bool metric_ball_membership(const Vec& x, const SegmentSet& s, const Vec& y);
bool metric_ball_membership(const Vec& x, const BlendedTensor& h, const Vec& y);

/// Membership in the cell: intersection over all per-segment ellipsoids.
bool cell_membership(const Vec& x, const SegmentSet& s, const Vec& y);

}  // namespace segavd
