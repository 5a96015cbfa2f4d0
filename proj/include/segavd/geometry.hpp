#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "segavd/common.hpp"

namespace segavd {

/// A line segment between two endpoints, tagged with its index in the set.
struct Segment {
    Vec a;
    Vec b;
    int id = -1;

    std::size_t dim() const { return a.size(); }
    double length() const { return dist(a, b); }
    bool degenerate() const { return dist2(a, b) == 0.0; }

    /// Unit direction (b - a) / ||b - a||; throws for degenerate segments.
    Vec direction() const;
};

/// Result of projecting a point onto a segment.
struct PointSegmentResult {
    double distance = 0.0;
    double t = 0.0;        ///< clamped parameter in [0, 1]
    bool interior = false; ///< true iff the unclamped foot lies strictly inside
    Vec closest;
};

PointSegmentResult dist_point_segment(const Vec& q, const Segment& s);

/// Minimum distance between two closed segments (handles parallel, collinear
/// and skew configurations by minimizing over the boundary candidates).
double dist_segment_segment(const Segment& s1, const Segment& s2);

/// Local feature size: distance to the second-nearest segment, with the ids
/// of the two nearest segments (ties broken by lowest id).
struct FeatureSize {
    double phi = 0.0;         ///< distance to second-nearest segment
    double nearest_dist = 0.0;
    int nearest = -1;
    int second = -1;
};

struct InstanceStats {
    double diam = 0.0;
    double min_gap = 0.0;
    double spread = 0.0;
};

/// Immutable set of disjoint segments with cached instance statistics.
class SegmentSet {
public:
    /// Builds the set and computes diameter / minimum gap / spread.
    /// Throws InvalidInstanceError when segments intersect or touch, and
    /// UsageError for dimension mismatches. Zero-length segments are rejected
    /// unless `allow_degenerate` downgrades them to point sites.
    explicit SegmentSet(std::vector<Segment> segments, bool allow_degenerate = false);

    std::size_t size() const { return segments_.size(); }
    std::size_t dim() const { return dim_; }
    const Segment& operator[](std::size_t i) const { return segments_[i]; }
    const std::vector<Segment>& segments() const { return segments_; }

    const InstanceStats& stats() const { return stats_; }
    double diam() const { return stats_.diam; }
    double min_gap() const { return stats_.min_gap; }
    double spread() const { return stats_.spread; }

private:
    std::vector<Segment> segments_;
    std::size_t dim_ = 0;
    InstanceStats stats_;
};

/// Distance from x to its second-nearest segment (Eq-12-style second order
/// statistic). Requires n >= 2.
FeatureSize local_feature_size(const Vec& x, const SegmentSet& s);

/// Nearest segment to x with ties broken by lowest id.
FeatureSize nearest_segments(const Vec& x, const SegmentSet& s);

/// A ball with known center/radius.
struct Ball {
    Vec center;
    double radius = 0.0;
    bool contains(const Vec& p, double slack = 0.0) const {
        return dist(p, center) <= radius + slack;
    }
};

/// Minimum enclosing ball of a point set (Welzl move-to-front; exact support
/// solve for up to d+1 points). Deterministic for a fixed input order.
Ball min_enclosing_ball(const std::vector<Vec>& points);

/// Query domain B+(S): the minimum enclosing ball of all segment endpoints
/// expanded about its center by 1 + 2/epsilon.
struct DomainBall {
    Vec center;
    double radius = 0.0;       ///< r+ = (1 + 2/eps) * inner_radius
    double inner_radius = 0.0; ///< radius of B(S)

    bool contains(const Vec& p, double slack = 0.0) const {
        return dist(p, center) <= radius + slack;
    }
};

DomainBall domain_ball(const SegmentSet& s, double epsilon);

// ---- instance file format ---------------------------------------------------
// JSON: {"dim": d, "segments": [[[a1..ad],[b1..bd]], ...]}

SegmentSet load_instance(const std::string& path, bool allow_degenerate = false);
SegmentSet parse_instance(const std::string& json_text, bool allow_degenerate = false);
std::string instance_to_json(const SegmentSet& s);
void save_instance(const SegmentSet& s, const std::string& path);

}  // namespace segavd
