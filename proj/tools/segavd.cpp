#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "segavd/avd.hpp"
#include "segavd/capsule.hpp"
#include "segavd/ellipsoid.hpp"
#include "segavd/svg.hpp"
#include "segavd/tensors.hpp"
#include "segavd/workbench.hpp"

namespace {

using namespace segavd;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

std::uint64_t effective_seed(std::uint64_t flag_seed) {
    if (const char* env = std::getenv("SEGAVD_SEED")) return std::strtoull(env, nullptr, 10);
    return flag_seed;
}

Vec parse_point(const std::string& text) {
    Vec p;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        p.push_back(std::stod(tok));
    }
    if (p.empty()) throw UsageError("empty point '" + text + "'");
    return p;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write file: " + path);
    out << content;
}

nlohmann::json instance_summary(const SegmentSet& s) {
    nlohmann::json j;
    j["n"] = s.size();
    j["dim"] = s.dim();
    j["diam"] = s.diam();
    j["min_gap"] = s.min_gap();
    j["spread"] = s.spread();
    return j;
}

int cmd_gen_random(std::size_t n, std::size_t d, std::uint64_t seed, double min_gap,
                   const std::string& output) {
    RandomInstanceOptions opts;
    opts.min_gap = min_gap;
    const SegmentSet s = gen_random(n, d, seed, opts);
    save_instance(s, output);
    std::cout << instance_summary(s).dump() << "\n";
    return kExitOk;
}

int cmd_gen_griddle(std::size_t n, double eps, double delta, const std::string& output) {
    const GriddleInstance g = gen_griddle(n, eps, delta);
    save_instance(g.segments, output);
    nlohmann::json j = instance_summary(g.segments);
    j["delta"] = g.delta;
    j["epsilon"] = g.epsilon;
    std::cout << j.dump() << "\n";
    return kExitOk;
}

int cmd_build(const std::string& input, double eps, std::uint64_t seed,
              const std::string& output) {
    const SegmentSet s = load_instance(input);
    BuildConfig cfg;
    cfg.epsilon = eps;
    cfg.seed = seed;
    const AvdDag dag = build(s, cfg);
    save_structure(dag, output);

    const BuildStats& st = dag.stats();
    nlohmann::json j;
    j["node_count"] = st.node_count;
    j["levels"] = st.levels;
    j["basic_leaf_count"] = st.basic_leaf_count;
    j["final_leaf_count"] = st.final_leaf_count;
    j["max_out_degree"] = st.max_out_degree;
    j["root_count"] = st.root_count;
    j["adaptive_fill_count"] = st.adaptive_fill_count;
    j["uncovered_sample_rate"] = st.uncovered_sample_rate;
    j["max_pair_charge"] = st.max_pair_charge();
    std::cout << j.dump() << "\n";
    return kExitOk;
}

int cmd_query(const std::string& ds_path, const std::string& point_flag,
              const std::string& points_file) {
    const AvdDag dag = load_structure(ds_path);
    std::vector<Vec> queries;
    if (!point_flag.empty()) queries.push_back(parse_point(point_flag));
    if (!points_file.empty()) {
        std::ifstream in(points_file);
        if (!in) throw UsageError("cannot open points file: " + points_file);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            queries.push_back(parse_point(line));
        }
    }
    if (queries.empty()) throw UsageError("query: need --point or --points");
    for (const Vec& q : queries) {
        const QueryResult res = dag.query(q);
        nlohmann::json j;
        j["segment"] = res.segment;
        j["distance"] = res.distance;
        j["path_length"] = res.path_length;
        j["fallback"] = res.fallback;
        std::cout << j.dump() << "\n";
    }
    return kExitOk;
}

int cmd_validate(const std::vector<std::string>& suites, std::uint64_t seed, bool quick,
                 const std::string& json_out) {
    SuiteParams params;
    params.seed = seed;
    if (quick) {
        params.configs = 20;
        params.samples = 200;
        params.pairs = 100;
        params.lipschitz_pairs = 2000;
        params.exact_points = 2000;
        params.mc_samples = 100000;
        params.queries = 200;
    }
    const std::vector<SuiteReport> reports = run_validation(suites, params);

    bool all_pass = true;
    nlohmann::json arr = nlohmann::json::array();
    for (const SuiteReport& r : reports) {
        all_pass = all_pass && r.passed();
        std::cout << (r.passed() ? "[PASS] " : "[FAIL] ") << r.name << ": checks=" << r.checks
                  << " violations=" << r.violations << " max_violation=" << r.max_violation
                  << (r.detail.empty() ? "" : (" " + r.detail)) << "\n";
        arr.push_back({{"name", r.name},
                       {"checks", r.checks},
                       {"violations", r.violations},
                       {"max_violation", r.max_violation},
                       {"seed", r.seed},
                       {"detail", r.detail},
                       {"passed", r.passed()}});
    }
    if (!json_out.empty()) write_file(json_out, nlohmann::json{{"suites", arr}}.dump(2) + "\n");
    return all_pass ? kExitOk : kExitValidation;
}

int cmd_bench(const std::vector<std::string>& inputs, const std::vector<double>& eps_list,
              std::size_t queries, std::uint64_t seed, const std::string& json_out,
              const std::string& csv_out) {
    std::vector<std::pair<std::string, SegmentSet>> fixtures;
    for (const std::string& path : inputs) fixtures.emplace_back(path, load_instance(path));
    const BenchReport report = run_bench(fixtures, eps_list, queries, seed);
    std::cout << report.to_json();
    if (!json_out.empty()) write_file(json_out, report.to_json());
    if (!csv_out.empty()) write_file(csv_out, report.to_csv());
    return kExitOk;
}

int cmd_probe(const std::string& input, const std::string& point_flag, double r) {
    const SegmentSet s = load_instance(input);
    const Vec x = parse_point(point_flag);
    nlohmann::json j;

    const auto [nn, nd] = brute_force_nn(s, x);
    j["nearest_segment"] = nn;
    j["nearest_distance"] = nd;
    if (s.size() >= 2) j["local_feature_size"] = local_feature_size(x, s).phi;

    if (nd > 0.0) {
        const BlendedTensor bt = blended_tensor(x, s);
        std::vector<std::vector<double>> rows(s.dim(), std::vector<double>(s.dim()));
        for (std::size_t i = 0; i < s.dim(); ++i)
            for (std::size_t k = 0; k < s.dim(); ++k) rows[i][k] = bt.matrix(i, k);
        j["blended_tensor"] = rows;
    }

    const double rr = (r > 0.0) ? r : (s.size() >= 2 ? local_feature_size(x, s).phi : nd);
    const Capsule cap = build_capsule(s, x, rr);
    nlohmann::json constraints = nlohmann::json::array();
    for (const ConcentricConstraint& c : cap.constraints) {
        nlohmann::json cj;
        cj["kind"] = (c.kind == ConcentricConstraint::Kind::Ball) ? "ball" : "cylinder";
        cj["threshold"] = c.threshold;
        cj["segment"] = c.segment;
        if (c.kind == ConcentricConstraint::Kind::Cylinder) cj["axis"] = c.axis;
        constraints.push_back(std::move(cj));
    }
    j["capsule"] = {{"r", rr}, {"constraints", constraints}};

    if (nd > 0.0) {
        const ScaleConstants consts = ScaleConstants::defaults(s.dim());
        const auto [outer, inner] = proxy_pair(s, x, rr, consts);
        const EigenSym& eig = outer.axes();
        Vec semi(eig.values.size());
        for (std::size_t k = 0; k < semi.size(); ++k) semi[k] = 1.0 / std::sqrt(eig.values[k]);
        j["outer_ellipsoid_semiaxes"] = semi;
        j["lambda_prime"] = consts.lambda_prime;
        j["lambda_double_prime"] = consts.lambda_double_prime;
    }
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_render(const std::string& ds_path, const std::string& output, int width, int level,
               double stroke_scale) {
    const AvdDag dag = load_structure(ds_path);
    RenderOptions opts;
    opts.width = width;
    opts.level = level;
    opts.stroke_scale = stroke_scale;
    write_file(output, render_svg(dag, opts));
    std::cout << "{\"svg\":\"" << output << "\"}\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anisotropic segment approximate-nearest-neighbor workbench"};
    app.require_subcommand(1);

    // gen-random
    auto* gen_r = app.add_subcommand("gen-random", "generate a random disjoint-segment instance");
    std::size_t gr_n = 10, gr_d = 2;
    std::uint64_t gr_seed = 1;
    double gr_min_gap = 0.01;
    std::string gr_out = "instance.json";
    gen_r->add_option("--n", gr_n, "number of segments");
    gen_r->add_option("--d", gr_d, "dimension");
    gen_r->add_option("--seed", gr_seed, "random seed");
    gen_r->add_option("--min-gap", gr_min_gap, "minimum pairwise distance");
    gen_r->add_option("--output", gr_out, "instance file");

    // gen-griddle
    auto* gen_g = app.add_subcommand("gen-griddle", "generate the crossing-grid instance");
    std::size_t gg_n = 8;
    double gg_eps = 1.0, gg_delta = 0.0;
    std::string gg_out = "griddle.json";
    gen_g->add_option("--n", gg_n, "grid parameter");
    gen_g->add_option("--epsilon", gg_eps, "target epsilon");
    gen_g->add_option("--delta", gg_delta, "height offset (default 0.8/(2(1+eps)))");
    gen_g->add_option("--output", gg_out, "instance file");

    // build
    auto* bd = app.add_subcommand("build", "build the search structure");
    std::string bd_in, bd_out = "structure.json";
    double bd_eps = 0.5;
    std::uint64_t bd_seed = 1;
    bd->add_option("--input", bd_in, "instance file")->required();
    bd->add_option("--epsilon", bd_eps, "approximation parameter");
    bd->add_option("--seed", bd_seed, "build seed");
    bd->add_option("--output", bd_out, "structure file");

    // query
    auto* qr = app.add_subcommand("query", "answer nearest-neighbor queries");
    std::string qr_ds, qr_point, qr_points;
    qr->add_option("--ds", qr_ds, "structure file")->required();
    qr->add_option("--point", qr_point, "comma-separated coordinates");
    qr->add_option("--points", qr_points, "file with one point per line");

    // validate
    auto* vl = app.add_subcommand("validate", "run invariant suites");
    std::vector<std::string> vl_suites;
    std::uint64_t vl_seed = 20240915;
    bool vl_quick = false;
    std::string vl_json;
    vl->add_option("--suite", vl_suites, "suite names (default: all)");
    vl->add_option("--seed", vl_seed, "suite seed");
    vl->add_flag("--quick", vl_quick, "reduced sample counts");
    vl->add_option("--json", vl_json, "write a JSON report");

    // bench
    auto* bn = app.add_subcommand("bench", "build/query benchmark");
    std::vector<std::string> bn_inputs;
    std::vector<double> bn_eps{0.5};
    std::size_t bn_queries = 1000;
    std::uint64_t bn_seed = 1;
    std::string bn_json, bn_csv;
    bn->add_option("--input", bn_inputs, "instance files")->required();
    bn->add_option("--epsilon", bn_eps, "epsilon values");
    bn->add_option("--queries", bn_queries, "queries per build");
    bn->add_option("--seed", bn_seed, "bench seed");
    bn->add_option("--json", bn_json, "JSON output file");
    bn->add_option("--csv", bn_csv, "CSV output file");

    // probe
    auto* pr = app.add_subcommand("probe", "inspect tensors/capsule at a point");
    std::string pr_in, pr_point;
    double pr_r = 0.0;
    pr->add_option("--input", pr_in, "instance file")->required();
    pr->add_option("--point", pr_point, "comma-separated coordinates")->required();
    pr->add_option("--r", pr_r, "distance parameter (default: local feature size)");

    // render
    auto* rd = app.add_subcommand("render", "render a 2-D structure as SVG");
    std::string rd_ds, rd_out = "structure.svg";
    int rd_width = 800, rd_level = -1;
    double rd_stroke = 1.0;
    rd->add_option("--ds", rd_ds, "structure file")->required();
    rd->add_option("--output", rd_out, "SVG file");
    rd->add_option("--width", rd_width, "image width in pixels");
    rd->add_option("--level", rd_level, "level to draw (-1: basic leaves)");
    rd->add_option("--stroke-scale", rd_stroke, "stroke width multiplier");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen_r->parsed())
            return cmd_gen_random(gr_n, gr_d, effective_seed(gr_seed), gr_min_gap, gr_out);
        if (gen_g->parsed()) return cmd_gen_griddle(gg_n, gg_eps, gg_delta, gg_out);
        if (bd->parsed()) return cmd_build(bd_in, bd_eps, effective_seed(bd_seed), bd_out);
        if (qr->parsed()) return cmd_query(qr_ds, qr_point, qr_points);
        if (vl->parsed()) return cmd_validate(vl_suites, effective_seed(vl_seed), vl_quick, vl_json);
        if (bn->parsed())
            return cmd_bench(bn_inputs, bn_eps, bn_queries, effective_seed(bn_seed), bn_json,
                             bn_csv);
        if (pr->parsed()) return cmd_probe(pr_in, pr_point, pr_r);
        if (rd->parsed()) return cmd_render(rd_ds, rd_out, rd_width, rd_level, rd_stroke);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InvalidInstanceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitUsage;
}
