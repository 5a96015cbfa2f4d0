#include "segavd/avd.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "segavd/tensors.hpp"

namespace segavd {

namespace {

// ---- spatial hash grid -------------------------------------------------------
//
// Buckets item centers by cell; queries gather every item whose ball
// (center, radius) can reach the query ball. When the gather box would span
// too many cells (mixed scales), falls back to a linear scan.

class BallGrid {
public:
    explicit BallGrid(double cell = 1.0) : cell_(std::max(cell, 1e-300)) {}

    void insert(int id, const Vec& c, double radius) {
        cells_[cell_key(c)].push_back(static_cast<int>(items_.size()));
        items_.push_back({id, c, radius});
        max_radius_ = std::max(max_radius_, radius);
    }

    template <typename F>
    void for_near(const Vec& c, double radius, F&& fn) const {
        if (items_.empty()) return;
        const double reach = radius + max_radius_;
        const std::size_t d = c.size();
        const double span = 2.0 * reach / cell_ + 1.0;
        if (std::pow(span, static_cast<double>(d)) > 4096.0) {
            for (const Item& item : items_)
                if (dist(item.center, c) <= radius + item.radius) fn(item.id);
            return;
        }
        std::vector<long> lo(d), hi(d), cur(d);
        for (std::size_t k = 0; k < d; ++k) {
            lo[k] = static_cast<long>(std::floor((c[k] - reach) / cell_));
            hi[k] = static_cast<long>(std::floor((c[k] + reach) / cell_));
            cur[k] = lo[k];
        }
        while (true) {
            auto it = cells_.find(hash_cell(cur));
            if (it != cells_.end()) {
                for (int idx : it->second) {
                    const Item& item = items_[idx];
                    if (dist(item.center, c) <= radius + item.radius) fn(item.id);
                }
            }
            std::size_t k = 0;
            while (k < d && ++cur[k] > hi[k]) {
                cur[k] = lo[k];
                ++k;
            }
            if (k == d) break;
        }
    }

    std::size_t size() const { return items_.size(); }

private:
    struct Item {
        int id;
        Vec center;
        double radius;
    };

    std::uint64_t cell_key(const Vec& c) const {
        std::vector<long> cell(c.size());
        for (std::size_t k = 0; k < c.size(); ++k)
            cell[k] = static_cast<long>(std::floor(c[k] / cell_));
        return hash_cell(cell);
    }

    static std::uint64_t hash_cell(const std::vector<long>& cell) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (long v : cell) {
            h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ULL;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    double cell_;
    double max_radius_ = 0.0;
    std::vector<Item> items_;
    std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

// Cached per-node semiaxis bounds for cheap disjointness/overlap pruning.
struct NodeBounds {
    double outer_max = 0.0, outer_min = 0.0;
    double inner_max = 0.0, inner_min = 0.0;
};

struct Builder {
    const SegmentSet& set;
    BuildConfig cfg;
    ScaleConstants consts;
    DomainBall dom;
    double inner_ratio;   // lambda'' / lambda'
    int final_exponent;   // j*

    std::vector<AvdNode> nodes;
    std::vector<NodeBounds> bounds;
    std::vector<int> roots;

    // basic-leaf membership grids, one per level (for candidate rejection)
    std::map<int, BallGrid> leaf_grids;

    // coverage bookkeeping from the final audit round of every parent group
    std::size_t final_audit_samples = 0;
    std::size_t final_audit_uncovered = 0;
    std::size_t fill_count = 0;

    Builder(const SegmentSet& s, const BuildConfig& c)
        : set(s), cfg(c), consts(ScaleConstants::defaults(s.dim(), c.lambda_prime)) {
        dom = domain_ball(s, cfg.epsilon);
        inner_ratio = consts.lambda_double_prime / consts.lambda_prime;
        // Final leaves once 2^-j <= eps_eff (1 - lambda') / (3 lambda'). The
        // approximation argument needs eps <= 1; larger eps is clamped.
        const double eps_eff = std::min(cfg.epsilon, 1.0);
        const double target = eps_eff * (1.0 - consts.lambda_prime) / (3.0 * consts.lambda_prime);
        final_exponent = 0;
        while (std::pow(0.5, final_exponent) > target) ++final_exponent;
        if (cfg.candidates_per_parent == 0)
            cfg.candidates_per_parent = std::size_t{12} << s.dim();
    }

    // One pass over the segments: capsule constraints plus nearest/second ids.
    struct LocalGeom {
        Capsule capsule;
        FeatureSize fs;
    };

    LocalGeom local_geom(const Vec& y, double r) const {
        LocalGeom g;
        g.capsule.center = y;
        g.capsule.r = r;
        g.capsule.constraints.reserve(2 * set.size());
        double d1 = std::numeric_limits<double>::infinity();
        double d2 = std::numeric_limits<double>::infinity();
        int i1 = -1, i2 = -1;
        for (const Segment& seg : set.segments()) {
            const DistanceTriple t = distance_triple(y, seg);
            const double seg_dist = std::sqrt(2.0 * t.d_seg);
            if (t.interior_foot && !seg.degenerate()) {
                ConcentricConstraint cyl;
                cyl.kind = ConcentricConstraint::Kind::Cylinder;
                cyl.axis = seg.direction();
                cyl.threshold = std::max(r, seg_dist);
                cyl.segment = seg.id;
                g.capsule.constraints.push_back(std::move(cyl));
                ConcentricConstraint ball;
                ball.kind = ConcentricConstraint::Kind::Ball;
                ball.threshold = std::max(r, std::sqrt(2.0 * t.d_endpoint));
                ball.segment = seg.id;
                g.capsule.constraints.push_back(std::move(ball));
            } else {
                ConcentricConstraint ball;
                ball.kind = ConcentricConstraint::Kind::Ball;
                ball.threshold = std::max(r, seg_dist);
                ball.segment = seg.id;
                g.capsule.constraints.push_back(std::move(ball));
            }
            if (seg_dist < d1) {
                d2 = d1;
                i2 = i1;
                d1 = seg_dist;
                i1 = seg.id;
            } else if (seg_dist < d2) {
                d2 = seg_dist;
                i2 = seg.id;
            }
        }
        g.fs.nearest_dist = d1;
        g.fs.nearest = i1;
        g.fs.second = i2;
        g.fs.phi = d2;
        return g;
    }

    int add_node(const Vec& y, int level, int exponent, double r, bool fill,
                 const LocalGeom& geom) {
        AvdNode n;
        n.id = static_cast<int>(nodes.size());
        n.center = y;
        n.level = level;
        n.refine_exponent = exponent;
        n.distance_param = r;
        n.adaptive_fill = fill;

        Ellipsoid full = inscribed_ellipsoid(geom.capsule, consts.lambda_prime);
        n.outer = (exponent == 0) ? std::move(full) : full.scaled(std::pow(0.5, exponent));

        if (exponent == 0)
            n.kind = (r <= geom.fs.phi) ? NodeKind::BasicLeaf : NodeKind::Internal;
        else
            n.kind = (exponent >= final_exponent) ? NodeKind::FinalLeaf : NodeKind::Internal;
        if (n.kind == NodeKind::FinalLeaf) n.representative = geom.fs.nearest;

        NodeBounds b;
        b.outer_max = n.outer.max_semiaxis();
        b.outer_min = n.outer.min_semiaxis();
        b.inner_max = b.outer_max * inner_ratio;
        b.inner_min = b.outer_min * inner_ratio;

        nodes.push_back(std::move(n));
        bounds.push_back(b);
        return nodes.back().id;
    }

    // Packing state for one (level, exponent) group: accepted centers in a
    // grid plus their inner ellipsoids with warm eigen caches.
    struct PackSet {
        explicit PackSet(double cell) : grid(cell) {}
        BallGrid grid;
        std::unordered_map<int, Ellipsoid> inner;
    };

    bool outers_overlap(int a_id, int b_id) const {
        const AvdNode& a = nodes[a_id];
        const AvdNode& b = nodes[b_id];
        const NodeBounds& ba = bounds[a_id];
        const NodeBounds& bb = bounds[b_id];
        const double cd = dist(a.center, b.center);
        if (cd >= ba.outer_max + bb.outer_max) return false;
        if (cd <= ba.outer_min + bb.outer_min) return true;
        return !ellipsoids_disjoint(a.outer, b.outer);
    }

    bool in_any_leaf(const Vec& y) const {
        for (const auto& entry : leaf_grids) {
            bool found = false;
            entry.second.for_near(y, 0.0, [&](int id) {
                if (!found && nodes[id].outer.contains(y)) found = true;
            });
            if (found) return true;
        }
        return false;
    }

    void note_leaf(int id) {
        const AvdNode& n = nodes[id];
        auto it = leaf_grids.find(n.level);
        if (it == leaf_grids.end())
            it = leaf_grids.emplace(n.level, BallGrid(std::max(bounds[id].outer_max, 1e-300)))
                     .first;
        it->second.insert(id, n.center, bounds[id].outer_max);
    }

    BallGrid grid_of(const std::vector<int>& ids) const {
        double typical = 1e-300;
        for (int id : ids) typical = std::max(typical, bounds[id].outer_max);
        BallGrid grid(typical);
        for (int id : ids) grid.insert(id, nodes[id].center, bounds[id].outer_max);
        return grid;
    }

    bool in_region(const BallGrid& region, const Vec& y) const {
        bool found = false;
        region.for_near(y, 0.0, [&](int id) {
            if (!found && nodes[id].outer.contains(y)) found = true;
        });
        return found;
    }

    // Greedy packing acceptance: the candidate's inner ellipsoid must be
    // disjoint from every accepted inner ellipsoid in the same group.
    bool try_accept(const Vec& y, int level, int exponent, double r,
                    std::vector<int>& accepted, PackSet& pack) {
        // cheap reject: y inside an accepted inner ellipsoid means the two
        // inner ellipsoids intersect at y itself
        bool hit = false;
        pack.grid.for_near(y, 0.0, [&](int oid) {
            if (!hit && pack.inner.at(oid).contains(y)) hit = true;
        });
        if (hit) return false;

        const LocalGeom g = local_geom(y, r);
        const int id = add_node(y, level, exponent, r, false, g);
        const NodeBounds& bc = bounds[id];
        Ellipsoid cand_inner = nodes[id].outer.scaled(inner_ratio);

        bool disjoint = true;
        pack.grid.for_near(y, bc.inner_max, [&](int oid) {
            if (!disjoint) return;
            const NodeBounds& bo = bounds[oid];
            const double cd = dist(y, nodes[oid].center);
            if (cd >= bc.inner_max + bo.inner_max) return;       // enclosing balls disjoint
            if (cd <= bc.inner_min + bo.inner_min) {             // inscribed balls intersect
                disjoint = false;
                return;
            }
            if (!ellipsoids_disjoint(cand_inner, pack.inner.at(oid))) disjoint = false;
        });
        if (!disjoint) {
            nodes.pop_back();
            bounds.pop_back();
            return false;
        }
        accepted.push_back(id);
        pack.grid.insert(id, y, bc.inner_max);
        pack.inner.emplace(id, std::move(cand_inner));
        if (exponent == 0 && nodes[id].kind == NodeKind::BasicLeaf) note_leaf(id);
        return true;
    }

    // ---- level phase -------------------------------------------------------------

    void build_levels() {
        std::vector<int> current = build_root_level();
        roots = current;

        int level = 0;
        double r = dom.radius;
        while (true) {
            std::vector<int> parents;
            for (int id : current)
                if (nodes[id].kind == NodeKind::Internal) parents.push_back(id);
            if (parents.empty()) break;
            if (++level > 200)
                throw std::runtime_error("avd build: level cap exceeded");
            r *= 0.5;
            current = populate_level(parents, level, r);
        }
    }

    std::vector<int> build_root_level() {
        const double r = dom.radius;
        std::vector<int> accepted;
        PackSet pack(dom.radius * consts.lambda_double_prime);

        Rng rng = Rng::fork(cfg.seed, 1);
        const std::size_t pool_cap = 4096 + 64 * cfg.candidates_per_parent;
        std::size_t consecutive_rejects = 0;
        for (std::size_t k = 0; k < pool_cap && consecutive_rejects < 256; ++k) {
            Vec y = dom.center;
            axpy(y, dom.radius, rng.in_unit_ball(set.dim()));
            if (try_accept(y, 0, 0, r, accepted, pack))
                consecutive_rejects = 0;
            else
                ++consecutive_rejects;
        }

        // audit: uniform samples of B+ must land in some root outer
        for (int round = 0; round < cfg.max_fill_rounds; ++round) {
            BallGrid root_grid = grid_of(accepted);
            Rng audit_rng = Rng::fork(cfg.seed, 2, static_cast<std::uint64_t>(round));
            std::size_t uncovered = 0;
            for (std::size_t k = 0; k < cfg.root_audit_samples; ++k) {
                Vec y = dom.center;
                axpy(y, dom.radius, audit_rng.in_unit_ball(set.dim()));
                bool covered = false;
                root_grid.for_near(y, 0.0, [&](int id) {
                    if (!covered && nodes[id].outer.contains(y)) covered = true;
                });
                if (!covered) {
                    ++uncovered;
                    const LocalGeom g = local_geom(y, r);
                    const int id = add_node(y, 0, 0, r, true, g);
                    ++fill_count;
                    if (nodes[id].kind == NodeKind::BasicLeaf) note_leaf(id);
                    accepted.push_back(id);
                    root_grid.insert(id, y, bounds[id].outer_max);
                }
            }
            if (uncovered == 0 || round + 1 == cfg.max_fill_rounds) {
                final_audit_samples += cfg.root_audit_samples;
                final_audit_uncovered += (round + 1 == cfg.max_fill_rounds) ? uncovered : 0;
                break;
            }
        }
        return accepted;
    }

    std::vector<int> populate_level(const std::vector<int>& parents, int level, double r) {
        std::vector<int> created;
        PackSet pack(std::max(r * consts.lambda_double_prime, 1e-300));

        for (int pid : parents) {
            Rng rng = Rng::fork(cfg.seed, 3, static_cast<std::uint64_t>(pid));
            for (std::size_t k = 0; k < cfg.candidates_per_parent; ++k) {
                const Vec y = nodes[pid].outer.sample_interior(rng);
                if (!dom.contains(y)) continue;
                if (in_any_leaf(y)) continue;
                try_accept(y, level, 0, r, created, pack);
            }
        }

        BallGrid parent_grid = grid_of(parents);
        link_children(parent_grid, created);
        audit_and_fill(parents, parent_grid, level, r, nullptr, created, 0);

        for (int pid : parents) nodes[pid].outer.drop_caches();
        return created;
    }

    void link_children(const BallGrid& parent_grid, const std::vector<int>& children) {
        for (int cid : children) {
            std::vector<int> cand;
            parent_grid.for_near(nodes[cid].center, bounds[cid].outer_max,
                                 [&](int pid) { cand.push_back(pid); });
            std::sort(cand.begin(), cand.end());
            for (int pid : cand)
                if (outers_overlap(pid, cid)) nodes[pid].children.push_back(cid);
        }
    }

    // Samples every parent's outer (restricted to B+ in the level phase, or to
    // the basic-leaf region in the refinement phase); uncovered samples become
    // adaptive-fill children. `child_exponent` distinguishes the two phases.
    void audit_and_fill(const std::vector<int>& parents, const BallGrid& parent_grid,
                        int child_level, double r, const BallGrid* refine_region,
                        std::vector<int>& created, int child_exponent) {
        std::size_t last_round_samples = 0;
        std::size_t last_round_uncovered = 0;
        for (int round = 0; round < cfg.max_fill_rounds; ++round) {
            last_round_samples = 0;
            last_round_uncovered = 0;
            for (int pid : parents) {
                Rng rng = Rng::fork(cfg.seed, 4,
                                    (static_cast<std::uint64_t>(pid) << 8) |
                                        static_cast<std::uint64_t>(round));
                std::size_t taken = 0;
                std::size_t tries = 0;
                const std::size_t max_tries = cfg.node_audit_samples * 16;
                while (taken < cfg.node_audit_samples && tries < max_tries) {
                    ++tries;
                    const Vec y = nodes[pid].outer.sample_interior(rng);
                    if (refine_region == nullptr) {
                        if (!dom.contains(y)) continue;
                    } else if (!in_region(*refine_region, y)) {
                        continue;
                    }
                    ++taken;
                    ++last_round_samples;
                    bool covered = false;
                    for (int cid : nodes[pid].children)
                        if (nodes[cid].outer.contains(y)) {
                            covered = true;
                            break;
                        }
                    if (covered) continue;
                    ++last_round_uncovered;

                    const LocalGeom g = local_geom(y, r);
                    const int id = add_node(y, child_level, child_exponent, r, true, g);
                    ++fill_count;
                    if (child_exponent == 0 && nodes[id].kind == NodeKind::BasicLeaf)
                        note_leaf(id);
                    created.push_back(id);
                    std::vector<int> cand;
                    parent_grid.for_near(nodes[id].center, bounds[id].outer_max,
                                         [&](int qid) { cand.push_back(qid); });
                    std::sort(cand.begin(), cand.end());
                    for (int qid : cand)
                        if (outers_overlap(qid, id)) nodes[qid].children.push_back(id);
                }
                nodes[pid].outer.drop_caches();
            }
            if (last_round_uncovered == 0) break;
        }
        final_audit_samples += last_round_samples;
        final_audit_uncovered += last_round_uncovered;
    }

    // ---- refinement phase ----------------------------------------------------------

    void refine() {
        std::map<int, std::vector<int>> by_level;
        for (const AvdNode& n : nodes)
            if (n.kind == NodeKind::BasicLeaf) by_level[n.level].push_back(n.id);

        for (const auto& [level, leaves] : by_level) {
            const double r = dom.radius * std::pow(0.5, level);
            BallGrid region = grid_of(leaves);

            std::vector<int> parents = leaves;
            for (int j = 1; j <= final_exponent; ++j) {
                const double scale = std::pow(0.5, j);
                std::vector<int> created;
                PackSet pack(std::max(r * scale * consts.lambda_double_prime, 1e-300));

                for (int pid : parents) {
                    Rng rng = Rng::fork(cfg.seed, 5,
                                        (static_cast<std::uint64_t>(pid) << 8) |
                                            static_cast<std::uint64_t>(j));
                    for (std::size_t k = 0; k < cfg.candidates_per_parent; ++k) {
                        const Vec y = nodes[pid].outer.sample_interior(rng);
                        if (!in_region(region, y)) continue;
                        try_accept(y, level, j, r, created, pack);
                    }
                }

                BallGrid parent_grid = grid_of(parents);
                link_children(parent_grid, created);
                audit_and_fill(parents, parent_grid, level, r, &region, created, j);

                for (int pid : parents) nodes[pid].outer.drop_caches();
                parents = std::move(created);
            }
        }
    }

    // ---- assembly -------------------------------------------------------------------

    BuildStats compute_stats() {
        BuildStats st;
        st.node_count = nodes.size();
        st.root_count = roots.size();
        st.adaptive_fill_count = fill_count;
        st.uncovered_sample_rate =
            final_audit_samples == 0
                ? 0.0
                : static_cast<double>(final_audit_uncovered) /
                      static_cast<double>(final_audit_samples);
        int max_depth = 0;
        for (const AvdNode& n : nodes) {
            n.outer.drop_caches();
            max_depth = std::max(max_depth, n.level + n.refine_exponent);
            st.max_out_degree = std::max(st.max_out_degree, n.children.size());
            if (n.kind == NodeKind::BasicLeaf) {
                ++st.basic_leaf_count;
                const FeatureSize fs = nearest_segments(n.center, set);
                ++st.per_pair_charges[{fs.nearest, fs.second}];
            } else if (n.kind == NodeKind::FinalLeaf) {
                ++st.final_leaf_count;
            }
        }
        st.levels = max_depth + 1;
        return st;
    }
};

}  // namespace

AvdDag build(const SegmentSet& s, const BuildConfig& config) {
    if (config.epsilon <= 0.0) throw UsageError("build: epsilon must be positive");

    if (s.size() == 1) {
        // trivial structure: one final leaf whose outer ball covers B+
        AvdDag dag;
        dag.domain_ = domain_ball(s, config.epsilon);
        dag.config_ = config;
        dag.consts_ = ScaleConstants::defaults(s.dim(), config.lambda_prime);
        AvdNode n;
        n.id = 0;
        n.center = dag.domain_.center;
        n.level = 0;
        n.refine_exponent = 0;
        n.distance_param = dag.domain_.radius;
        n.kind = NodeKind::FinalLeaf;
        n.representative = 0;
        const double rr = dag.domain_.radius;
        n.outer = Ellipsoid(dag.domain_.center, SymMat::identity(s.dim()) * (1.0 / (rr * rr)));
        dag.nodes_.push_back(std::move(n));
        dag.roots_ = {0};
        dag.stats_.node_count = 1;
        dag.stats_.final_leaf_count = 1;
        dag.stats_.root_count = 1;
        dag.stats_.levels = 1;
        dag.source_ = std::make_shared<SegmentSet>(s);
        return dag;
    }

    Builder b(s, config);
    b.build_levels();
    b.refine();

    AvdDag dag;
    dag.domain_ = b.dom;
    dag.config_ = b.cfg;
    dag.consts_ = b.consts;
    dag.roots_ = b.roots;
    dag.stats_ = b.compute_stats();
    dag.nodes_ = std::move(b.nodes);
    dag.source_ = std::make_shared<SegmentSet>(s);
    return dag;
}

namespace {

int nearest_final_leaf_below(const AvdDag& dag, const Vec& q, int from) {
    std::deque<int> queue{from};
    std::vector<char> seen(dag.nodes().size(), 0);
    seen[from] = 1;
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    while (!queue.empty()) {
        const int id = queue.front();
        queue.pop_front();
        const AvdNode& n = dag.nodes()[id];
        if (n.kind == NodeKind::FinalLeaf) {
            const double d = dist(q, n.center);
            if (d < best_d) {
                best_d = d;
                best = id;
            }
            continue;
        }
        for (int c : n.children)
            if (!seen[c]) {
                seen[c] = 1;
                queue.push_back(c);
            }
    }
    return best;
}

int nearest_final_leaf_global(const AvdDag& dag, const Vec& q) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (const AvdNode& n : dag.nodes())
        if (n.kind == NodeKind::FinalLeaf) {
            const double d = dist(q, n.center);
            if (d < best_d) {
                best_d = d;
                best = n.id;
            }
        }
    return best;
}

}  // namespace

QueryResult AvdDag::query(const Vec& q) const {
    check_dims(q, domain_.center, "query");
    QueryResult res;

    auto finish_with = [&](int segment, bool fallback, int path) {
        res.segment = segment;
        res.fallback = fallback;
        res.path_length = path;
        res.distance = dist_point_segment(q, source()[segment]).distance;
        return res;
    };

    // outside the domain any segment is a valid answer
    if (!domain_.contains(q)) return finish_with(0, true, 0);

    int cur = -1;
    for (int rid : roots_)
        if (nodes_[rid].outer.contains(q)) {
            cur = rid;
            break;
        }
    if (cur < 0) {
        const int leaf = nearest_final_leaf_global(*this, q);
        return finish_with(nodes_[leaf].representative, true, 0);
    }

    int path = 1;
    while (nodes_[cur].kind != NodeKind::FinalLeaf) {
        int next = -1;
        for (int cid : nodes_[cur].children)
            if ((next < 0 || cid < next) && nodes_[cid].outer.contains(q)) next = cid;
        if (next < 0) {
            const int leaf = nearest_final_leaf_below(*this, q, cur);
            if (leaf < 0) {
                const int any = nearest_final_leaf_global(*this, q);
                return finish_with(nodes_[any].representative, true, path);
            }
            return finish_with(nodes_[leaf].representative, true, path);
        }
        cur = next;
        ++path;
    }
    return finish_with(nodes_[cur].representative, false, path);
}

QueryResult query(const AvdDag& dag, const Vec& q) { return dag.query(q); }

// ---- serialization -----------------------------------------------------------------

namespace {

nlohmann::json ellipsoid_to_json(const Ellipsoid& e) {
    nlohmann::json j;
    j["center"] = e.center();
    const std::size_t d = e.dim();
    std::vector<std::vector<double>> rows(d, std::vector<double>(d));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k) rows[i][k] = e.shape()(i, k);
    j["shape"] = rows;
    return j;
}

Ellipsoid ellipsoid_from_json(const nlohmann::json& j) {
    Vec c = j.at("center").get<Vec>();
    const auto rows = j.at("shape").get<std::vector<std::vector<double>>>();
    SymMat m(c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t k = 0; k < c.size(); ++k) m(i, k) = rows.at(i).at(k);
    return Ellipsoid(std::move(c), std::move(m));
}

const char* kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::Internal: return "internal";
        case NodeKind::BasicLeaf: return "basic_leaf";
        case NodeKind::FinalLeaf: return "final_leaf";
    }
    return "internal";
}

NodeKind kind_from(const std::string& s) {
    if (s == "internal") return NodeKind::Internal;
    if (s == "basic_leaf") return NodeKind::BasicLeaf;
    if (s == "final_leaf") return NodeKind::FinalLeaf;
    throw std::runtime_error("unknown node kind '" + s + "'");
}

}  // namespace

std::string serialize(const AvdDag& dag) {
    nlohmann::json j;
    j["header"] = {{"version", 1},
                   {"dim", dag.source().dim()},
                   {"epsilon", dag.config().epsilon},
                   {"lambda_prime", dag.consts().lambda_prime},
                   {"lambda_double_prime", dag.consts().lambda_double_prime},
                   {"seed", dag.config().seed},
                   {"root_audit_samples", dag.config().root_audit_samples},
                   {"node_audit_samples", dag.config().node_audit_samples},
                   {"candidates_per_parent", dag.config().candidates_per_parent}};
    j["domain"] = {{"center", dag.domain().center},
                   {"radius", dag.domain().radius},
                   {"inner_radius", dag.domain().inner_radius}};
    j["instance"] = nlohmann::json::parse(instance_to_json(dag.source()));
    j["roots"] = dag.roots();

    nlohmann::json arr = nlohmann::json::array();
    for (const AvdNode& n : dag.nodes()) {
        nlohmann::json nj;
        nj["id"] = n.id;
        nj["center"] = n.center;
        nj["level"] = n.level;
        nj["refine_exponent"] = n.refine_exponent;
        nj["distance_param"] = n.distance_param;
        nj["kind"] = kind_name(n.kind);
        nj["children"] = n.children;
        nj["representative"] = n.representative;
        nj["adaptive_fill"] = n.adaptive_fill;
        nj["outer"] = ellipsoid_to_json(n.outer);
        nj["inner"] = ellipsoid_to_json(dag.inner_of(n));
        arr.push_back(std::move(nj));
    }
    j["nodes"] = arr;

    const BuildStats& st = dag.stats();
    nlohmann::json charges = nlohmann::json::array();
    for (const auto& [pair, count] : st.per_pair_charges)
        charges.push_back({pair.first, pair.second, count});
    j["stats"] = {{"levels", st.levels},
                  {"node_count", st.node_count},
                  {"basic_leaf_count", st.basic_leaf_count},
                  {"final_leaf_count", st.final_leaf_count},
                  {"max_out_degree", st.max_out_degree},
                  {"root_count", st.root_count},
                  {"adaptive_fill_count", st.adaptive_fill_count},
                  {"uncovered_sample_rate", st.uncovered_sample_rate},
                  {"per_pair_charges", charges}};
    return j.dump(2) + "\n";
}

void save_structure(const AvdDag& dag, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write structure file: " + path);
    out << serialize(dag);
}

AvdDag deserialize(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("structure parse error: ") + e.what());
    }

    AvdDag dag;
    try {
        const auto& h = j.at("header");
        dag.config_.epsilon = h.at("epsilon").get<double>();
        dag.config_.seed = h.at("seed").get<std::uint64_t>();
        dag.config_.lambda_prime = h.at("lambda_prime").get<double>();
        dag.config_.root_audit_samples = h.at("root_audit_samples").get<std::size_t>();
        dag.config_.node_audit_samples = h.at("node_audit_samples").get<std::size_t>();
        dag.config_.candidates_per_parent = h.at("candidates_per_parent").get<std::size_t>();
        dag.consts_.lambda_prime = h.at("lambda_prime").get<double>();
        dag.consts_.lambda_double_prime = h.at("lambda_double_prime").get<double>();

        const auto& dj = j.at("domain");
        dag.domain_.center = dj.at("center").get<Vec>();
        dag.domain_.radius = dj.at("radius").get<double>();
        dag.domain_.inner_radius = dj.at("inner_radius").get<double>();

        dag.source_ = std::make_shared<SegmentSet>(parse_instance(j.at("instance").dump()));
        dag.roots_ = j.at("roots").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("structure parse error in header: ") + e.what());
    }

    for (const auto& nj : j.at("nodes")) {
        int id = -1;
        try {
            AvdNode n;
            id = nj.at("id").get<int>();
            n.id = id;
            n.center = nj.at("center").get<Vec>();
            n.level = nj.at("level").get<int>();
            n.refine_exponent = nj.at("refine_exponent").get<int>();
            n.distance_param = nj.at("distance_param").get<double>();
            n.kind = kind_from(nj.at("kind").get<std::string>());
            n.children = nj.at("children").get<std::vector<int>>();
            n.representative = nj.at("representative").get<int>();
            n.adaptive_fill = nj.at("adaptive_fill").get<bool>();
            n.outer = ellipsoid_from_json(nj.at("outer"));
            dag.nodes_.push_back(std::move(n));
        } catch (const std::exception& e) {
            throw std::runtime_error("structure parse error at node " + std::to_string(id) +
                                     ": " + e.what());
        }
    }

    try {
        const auto& st = j.at("stats");
        dag.stats_.levels = st.at("levels").get<int>();
        dag.stats_.node_count = st.at("node_count").get<std::size_t>();
        dag.stats_.basic_leaf_count = st.at("basic_leaf_count").get<std::size_t>();
        dag.stats_.final_leaf_count = st.at("final_leaf_count").get<std::size_t>();
        dag.stats_.max_out_degree = st.at("max_out_degree").get<std::size_t>();
        dag.stats_.root_count = st.at("root_count").get<std::size_t>();
        dag.stats_.adaptive_fill_count = st.at("adaptive_fill_count").get<std::size_t>();
        dag.stats_.uncovered_sample_rate = st.at("uncovered_sample_rate").get<double>();
        for (const auto& row : st.at("per_pair_charges"))
            dag.stats_.per_pair_charges[{row.at(0).get<int>(), row.at(1).get<int>()}] =
                row.at(2).get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("structure parse error in stats: ") + e.what());
    }

    if (dag.nodes_.empty()) throw std::runtime_error("structure parse error: no nodes");
    for (int rid : dag.roots_)
        if (rid < 0 || rid >= static_cast<int>(dag.nodes_.size()))
            throw std::runtime_error("structure parse error: root id out of range");
    for (const AvdNode& n : dag.nodes_)
        for (int c : n.children)
            if (c < 0 || c >= static_cast<int>(dag.nodes_.size()))
                throw std::runtime_error("structure parse error at node " + std::to_string(n.id) +
                                         ": child id out of range");
    return dag;
}

AvdDag load_structure(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open structure file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

}  // namespace segavd
