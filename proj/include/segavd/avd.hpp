#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "segavd/ellipsoid.hpp"
#include "segavd/geometry.hpp"

namespace segavd {

enum class NodeKind { Internal, BasicLeaf, FinalLeaf };

/// One DAG node. The outer ellipsoid is E'(x, r_i) scaled by 2^-j, where j is
/// the refinement exponent (0 during the level phase). The inner ellipsoid
/// used for packing is the outer scaled by lambda''/lambda'.
struct AvdNode {
    int id = -1;
    Vec center;
    int level = 0;            ///< distance-parameter level i (r_i = r+ / 2^i)
    int refine_exponent = 0;  ///< j; 0 for pre-basic nodes
    double distance_param = 0.0;
    Ellipsoid outer;
    NodeKind kind = NodeKind::Internal;
    std::vector<int> children;
    int representative = -1;  ///< nearest segment to center (final leaves)
    bool adaptive_fill = false;
};

struct BuildStats {
    int levels = 0;  ///< longest root-to-leaf path (level + exponent steps)
    std::size_t node_count = 0;
    std::size_t basic_leaf_count = 0;
    std::size_t final_leaf_count = 0;
    std::size_t max_out_degree = 0;
    std::size_t root_count = 0;
    std::size_t adaptive_fill_count = 0;
    double uncovered_sample_rate = 0.0;  ///< after adaptive fill
    std::map<std::pair<int, int>, std::size_t> per_pair_charges;

    std::size_t max_pair_charge() const {
        std::size_t m = 0;
        for (const auto& [k, v] : per_pair_charges) m = std::max(m, v);
        return m;
    }
};

struct BuildConfig {
    double epsilon = 0.5;
    std::uint64_t seed = 0;
    double lambda_prime = 0.5;
    std::size_t root_audit_samples = 100000;
    std::size_t node_audit_samples = 1000;
    std::size_t candidates_per_parent = 0;  ///< 0: pick 12 * 2^d automatically
    int max_fill_rounds = 8;
};

struct QueryResult {
    int segment = -1;
    double distance = 0.0;
    int path_length = 0;
    bool fallback = false;
};

/// The built search structure. Immutable after construction; queries are
/// safe from many concurrent threads.
class AvdDag {
public:
    const std::vector<AvdNode>& nodes() const { return nodes_; }
    const std::vector<int>& roots() const { return roots_; }
    const BuildStats& stats() const { return stats_; }
    const DomainBall& domain() const { return domain_; }
    const SegmentSet& source() const { return *source_; }
    const BuildConfig& config() const { return config_; }
    const ScaleConstants& consts() const { return consts_; }

    Ellipsoid inner_of(const AvdNode& n) const {
        return n.outer.scaled(consts_.lambda_double_prime / consts_.lambda_prime);
    }

    QueryResult query(const Vec& q) const;

private:
    friend AvdDag build(const SegmentSet&, const BuildConfig&);
    friend AvdDag deserialize(const std::string&);

    std::vector<AvdNode> nodes_;
    std::vector<int> roots_;
    BuildStats stats_;
    DomainBall domain_;
    std::shared_ptr<const SegmentSet> source_;
    BuildConfig config_;
    ScaleConstants consts_;
};

/// Builds the leveled DAG cover of B+(S).
AvdDag build(const SegmentSet& s, const BuildConfig& config);

QueryResult query(const AvdDag& dag, const Vec& q);

/// Structure file (JSON). The instance is embedded so the structure is
/// self-contained for queries.
std::string serialize(const AvdDag& dag);
void save_structure(const AvdDag& dag, const std::string& path);
AvdDag deserialize(const std::string& json_text);
AvdDag load_structure(const std::string& path);

}  // namespace segavd
