#pragma once

#include <functional>
#include <optional>

#include "segavd/geometry.hpp"
#include "segavd/linalg.hpp"

namespace segavd {

/// One quadratic constraint concentric with a capsule center x:
/// membership is (y-x)^T M (y-x) <= t^2 with M = I (ball) or I - v v^T
/// (infinite cylinder with axis direction v through x).
struct ConcentricConstraint {
    enum class Kind { Ball, Cylinder };
    Kind kind = Kind::Ball;
    Vec axis;             ///< unit direction, cylinders only
    double threshold = 0.0;
    int segment = -1;     ///< originating segment id

    /// Constraint form value (y-x)^T M (y-x) for offset w = y - x.
    double form(const Vec& w) const {
        const double n2 = norm2(w);
        if (kind == Kind::Ball) return n2;
        const double along = dot(w, axis);
        return std::max(n2 - along * along, 0.0);
    }

    SymMat matrix(std::size_t d) const {
        if (kind == Kind::Ball) return SymMat::identity(d);
        SymMat m = SymMat::identity(d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) m(i, j) -= axis[i] * axis[j];
        return m;
    }
};

/// A capsule C(x, r): the intersection over all segments of per-segment
/// cylinder/ball constraints centered at x. Convex and centrally symmetric;
/// the scaled capsule C^lambda is obtained by scaling every threshold.
struct Capsule {
    Vec center;
    double r = 0.0;
    std::vector<ConcentricConstraint> constraints;

    std::size_t dim() const { return center.size(); }

    bool contains(const Vec& z, double lambda = 1.0) const;

    /// Smallest ball-constraint threshold; every capsule has at least one ball.
    double min_ball_threshold() const;

    /// Equivalent capsule with constraints implied by the tightest ball removed.
    /// Membership is unchanged; this keeps downstream ellipsoid work small.
    Capsule pruned() const;

    /// Axis-aligned bounding box of the scaled capsule, from its ball
    /// constraints (every capsule carries at least one).
    struct Box {
        Vec lo, hi;
        double volume() const;
    };
    Box bounding_box(double lambda = 1.0) const;
};

/// Builds C(x, r) for the whole set: per segment, a single ball when the
/// nearest point is an endpoint, otherwise a cylinder plus an endpoint ball.
Capsule build_capsule(const SegmentSet& s, const Vec& x, double r);

/// Boundary point of the scaled capsule along `direction` from the center
/// (exact ray cast against every constraint).
Vec capsule_boundary_point(const Capsule& c, double lambda, const Vec& direction);

/// Scale constants for the data structure. alpha is the expansion-containment
/// factor at lambda, beta_lfs the feature-size variant.
struct ScaleConstants {
    double lambda_prime = 0.5;
    double lambda_double_prime = 0.0;

    static double alpha(double lambda) { return (3.0 + lambda) / (1.0 - lambda); }
    static double beta_lfs(double lambda) {
        return (3.0 + lambda) * (1.0 + lambda) / ((1.0 - lambda) * (1.0 - lambda));
    }

    /// lambda'' = lambda' sqrt(d) / alpha(lambda').
    static ScaleConstants defaults(std::size_t d, double lambda_prime = 0.5) {
        ScaleConstants c;
        c.lambda_prime = lambda_prime;
        c.lambda_double_prime = lambda_prime * std::sqrt(static_cast<double>(d)) /
                                alpha(lambda_prime);
        return c;
    }
};

/// Tries to find a point in C1^lambda inter C2^lambda by cyclic projection
/// onto the constraint sets (each admits a closed-form projection). Returns
/// the witness, or nullopt when none is found within the iteration cap.
/// Absence of a witness does not certify disjointness.
std::optional<Vec> shrunken_intersection_witness(const Capsule& c1, const Capsule& c2,
                                                 double lambda, int max_iter = 200,
                                                 double convergence = 1e-10);

/// The sandwich bodies of a capsule: a double cone V- and a cylinder V+
/// aligned with the nearest segment's direction.
struct BoundingVolumes {
    Vec center;            ///< x
    Vec axis;              ///< direction of the nearest segment s1
    double base_radius = 0.0;   ///< t1, radius of Cyl_1
    double half_height = 0.0;   ///< ||p2 - x|| (cone apex distance)
    double outer_half_height = 0.0; ///< half the V+ cylinder height
    double angle = 0.0;         ///< acute angle between s1 and the apex segment
    double unit_ball_volume = 0.0;  ///< volume of the unit ball in R^(d-1)
    bool degenerate = false;    ///< ball-case capsule: V- = V+ = the ball
    int apex_segment = -1;      ///< segment whose constraint generated p2 (-1: ball cap)

    bool inner_contains(const Vec& z) const;
    bool outer_contains(const Vec& z) const;
    double inner_volume() const;
    double outer_volume() const;
};

BoundingVolumes bounding_volumes(const SegmentSet& s, const Vec& x, double r);

/// Monte Carlo volume of a region given by a membership callable and an
/// enclosing box. Reports the standard error of the estimate.
struct McVolume {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t hits = 0;
    std::size_t samples = 0;
    bool flagged = false;  ///< zero hits
};

McVolume mc_volume(const std::function<bool(const Vec&)>& member, const Capsule::Box& box,
                   std::size_t samples, std::uint64_t seed);

}  // namespace segavd
