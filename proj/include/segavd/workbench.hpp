#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "segavd/avd.hpp"
#include "segavd/geometry.hpp"

namespace segavd {

/// Exact nearest segment by linear scan; ties go to the lowest id.
std::pair<int, double> brute_force_nn(const SegmentSet& s, const Vec& q);

struct RandomInstanceOptions {
    double min_gap = 0.01;
    double min_length = 0.05;
    double max_length = 0.5;
    /// optional spread band; 0 disables the post-filter
    double spread_min = 0.0;
    double spread_max = 0.0;
    std::size_t max_rejections = 1000000;
};

/// Seeded rejection sampling of disjoint segments in the unit cube.
SegmentSet gen_random(std::size_t n, std::size_t d, std::uint64_t seed,
                      const RandomInstanceOptions& opts = {});

/// The grid-of-segments lower-bound family: n+1 "vertical" segments in the
/// z=0 plane crossed by n+1 "horizontal" segments at height delta, plus the
/// query points that force distinct cover elements.
struct GriddleInstance {
    std::size_t n = 0;
    double epsilon = 0.0;
    double delta = 0.0;
    SegmentSet segments;  ///< ids 0..n vertical, n+1..2n+1 horizontal

    /// q_j = (i, j/2, delta) for vertical i and j = 0..2n.
    Vec query_point(std::size_t vertical, std::size_t j) const;
    std::size_t vertical_id(std::size_t i) const { return i; }
    std::size_t horizontal_id(std::size_t j) const { return n + 1 + j; }
};

/// delta defaults to 80% of the validity bound 1/(2(1+eps)).
GriddleInstance gen_griddle(std::size_t n, double epsilon, double delta = 0.0);

struct GriddleReport {
    std::size_t odd_points_checked = 0;
    std::size_t witness_count = 0;  ///< points forcing distinct cover elements
    std::size_t violations = 0;
    double max_violation = 0.0;
    bool passed() const { return violations == 0; }
};

/// Checks, for every vertical and every odd query point: distance to the
/// vertical is exactly delta, every other segment is at distance >= 1/2, and
/// the relative error of any other segment exceeds eps. Cross-checks the
/// brute-force oracle.
GriddleReport verify_griddle(const GriddleInstance& g);

// ---- validation suites -----------------------------------------------------------

struct SuiteReport {
    std::string name;
    std::size_t checks = 0;
    std::size_t violations = 0;
    double max_violation = 0.0;
    std::uint64_t seed = 0;
    std::string detail;
    bool passed() const { return violations == 0; }
};

/// Knobs for the validation suites. Defaults match the acceptance criteria.
struct SuiteParams {
    std::uint64_t seed = 20240915;
    std::size_t configs = 100;       ///< seeded (S, x[, r]) configurations
    std::size_t samples = 1000;      ///< samples per configuration
    std::size_t pairs = 500;         ///< seeded pairs for expansion-containment
    std::size_t lipschitz_pairs = 10000;
    std::size_t exact_points = 10000;  ///< points for the exact scaling identities
    std::size_t mc_samples = 1000000;  ///< Monte Carlo volume samples
    /// fixtures for structure-level suites (packing/coverage/correctness)
    std::size_t queries = 1000;
};

/// Known suite names: lipschitz, tensor, lemma1, eq8, lemma2, lemma4, cor6,
/// lemma7, lemma8, lemma10, sec5, packing, coverage, correctness.
/// Throws UsageError for an unknown name.
SuiteReport run_suite(const std::string& name, const SuiteParams& params);

std::vector<std::string> all_suite_names();

/// Runs the named suites (all of them when `names` is empty) and returns the
/// reports in suite-name order.
std::vector<SuiteReport> run_validation(const std::vector<std::string>& names,
                                        const SuiteParams& params);

// ---- benchmark -------------------------------------------------------------------

struct BenchRow {
    std::string fixture;
    std::size_t n = 0;
    std::size_t d = 0;
    double epsilon = 0.0;
    double build_seconds = 0.0;
    std::size_t node_count = 0;
    int levels = 0;
    std::size_t max_out_degree = 0;
    std::size_t max_pair_charge = 0;
    std::size_t queries = 0;
    double correct_rate = 0.0;
    double query_p50_us = 0.0;
    double query_p95_us = 0.0;
    double query_p99_us = 0.0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::string to_json() const;
    std::string to_csv() const;
};

/// Builds each instance at each epsilon, times warm queries against the
/// brute-force oracle, and reports shape statistics.
BenchReport run_bench(const std::vector<std::pair<std::string, SegmentSet>>& fixtures,
                      const std::vector<double>& epsilons, std::size_t query_count,
                      std::uint64_t seed);

}  // namespace segavd
