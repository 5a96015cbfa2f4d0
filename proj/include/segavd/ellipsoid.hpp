#pragma once

#include <memory>
#include <utility>

#include "segavd/capsule.hpp"
#include "segavd/linalg.hpp"

namespace segavd {

/// An ellipsoid { y : (y - c)^T A (y - c) <= 1 } with symmetric positive
/// definite shape A. Scaling by lambda about the center divides A by lambda^2.
class Ellipsoid {
public:
    Ellipsoid() = default;
    Ellipsoid(Vec center, SymMat shape);

    const Vec& center() const { return center_; }
    const SymMat& shape() const { return shape_; }
    std::size_t dim() const { return center_.size(); }

    double form(const Vec& y) const { return shape_.quad_form(sub(y, center_)); }
    bool contains(const Vec& y) const {
        return form(y) <= 1.0 + Tolerances::global().membership_rel;
    }

    Ellipsoid scaled(double lambda) const;

    /// Eigenpairs of the shape matrix (computed on first use).
    const EigenSym& axes() const;

    double max_semiaxis() const;
    double min_semiaxis() const;
    double volume() const;
    double log_det_shape() const;

    /// y = c + L u with ||u|| = 1 uniform on the sphere (boundary) or
    /// ||u|| <= 1 uniform in the ball (interior), where L L^T = A^{-1}.
    Vec sample_boundary(Rng& rng) const;
    Vec sample_interior(Rng& rng) const;

    /// Frees the lazily computed eigen/whitener caches.
    void drop_caches() const {
        axes_cache_.reset();
        whitener_cache_.reset();
    }

private:
    const SymMat& whitener() const;  // L = Q diag(1/sqrt(eig))

    Vec center_;
    SymMat shape_;
    mutable std::shared_ptr<EigenSym> axes_cache_;
    mutable std::shared_ptr<SymMat> whitener_cache_;
};

/// Exact containment of a concentric ellipsoid in one quadratic constraint:
/// true iff lambda_max(L^T M L) <= t^2, with near-boundary decisions resolving
/// to "not contained". The ellipsoid center must coincide with the constraint
/// center (the capsule center).
bool concentric_containment(const Ellipsoid& e, const ConcentricConstraint& c,
                            const Vec& constraint_center);

/// Largest value of the constraint form over the ellipsoid (the quantity the
/// containment test thresholds against t^2).
double concentric_support(const Ellipsoid& e, const ConcentricConstraint& c);

/// True iff e is contained in the scaled capsule, certified constraint by
/// constraint.
bool ellipsoid_in_capsule(const Ellipsoid& e, const Capsule& c, double lambda);

struct InscribedResult {
    Ellipsoid ellipsoid;
    std::vector<double> log_det_trace;  ///< log det(L L^T), nondecreasing
};

/// Maximum-volume-inscribed-ellipsoid proxy for a scaled capsule. The result
/// is concentric with the capsule, certified inscribed for every constraint,
/// and deterministic. Exact for capsules whose active constraints share an
/// eigenbasis (single segment); otherwise a monotone ascent from a feasible
/// tensor-sum initializer.
InscribedResult inscribed_ellipsoid_detailed(const Capsule& c, double lambda);
Ellipsoid inscribed_ellipsoid(const Capsule& c, double lambda);

/// E' = inscribed(C(x,r), lambda') and E'' = E' rescaled to lambda''.
std::pair<Ellipsoid, Ellipsoid> proxy_pair(const SegmentSet& s, const Vec& x, double r,
                                           const ScaleConstants& consts);

/// Minimum of e2's quadratic form over e1 (exact trust-region solve).
double min_form_over(const Ellipsoid& e1, const Ellipsoid& e2);

/// Euclidean projection of a point onto the (closed) ellipsoid.
Vec project_point(const Ellipsoid& e, const Vec& p);

/// Conservative disjointness: true iff the minimum of either form over the
/// other ellipsoid exceeds 1. Touching ellipsoids count as not disjoint.
bool ellipsoids_disjoint(const Ellipsoid& e1, const Ellipsoid& e2);

}  // namespace segavd
