#include "segavd/svg.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace segavd {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

std::string render_svg(const AvdDag& dag, const RenderOptions& opts) {
    if (dag.source().dim() != 2)
        throw UsageError("render_svg: only 2-dimensional structures are supported");

    // world bounds: instance bounding box with a margin
    double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
    for (const Segment& s : dag.source().segments()) {
        lo_x = std::min({lo_x, s.a[0], s.b[0]});
        lo_y = std::min({lo_y, s.a[1], s.b[1]});
        hi_x = std::max({hi_x, s.a[0], s.b[0]});
        hi_y = std::max({hi_y, s.a[1], s.b[1]});
    }
    const double margin = 0.2 * std::max(hi_x - lo_x, hi_y - lo_y) + 1e-9;
    lo_x -= margin;
    lo_y -= margin;
    hi_x += margin;
    hi_y += margin;

    const double world_w = hi_x - lo_x;
    const double world_h = hi_y - lo_y;
    const int width = opts.width;
    const int height = static_cast<int>(std::lround(width * world_h / world_w));
    const double sx = width / world_w;

    auto px = [&](double x) { return (x - lo_x) * sx; };
    auto py = [&](double y) { return (hi_y - y) * sx; };  // flip y for screen coords

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    const double stroke = 1.2 * opts.stroke_scale;

    // selected nodes' outer ellipsoids
    for (const AvdNode& n : dag.nodes()) {
        const bool selected = (opts.level < 0)
                                  ? (n.kind == NodeKind::BasicLeaf)
                                  : (n.level == opts.level && n.refine_exponent == 0);
        if (!selected) continue;
        const EigenSym& eig = n.outer.axes();
        const double r0 = 1.0 / std::sqrt(eig.values[0]);  // larger semiaxis
        const double r1 = 1.0 / std::sqrt(eig.values[1]);
        // rotation of the first eigenvector, in screen coords (y flipped)
        const double ang = -std::atan2(eig.vectors(1, 0), eig.vectors(0, 0)) * 180.0 /
                           3.14159265358979323846;
        out << "<ellipse cx=\"" << fmt(px(n.center[0])) << "\" cy=\"" << fmt(py(n.center[1]))
            << "\" rx=\"" << fmt(r0 * sx) << "\" ry=\"" << fmt(r1 * sx) << "\" transform=\"rotate("
            << fmt(ang) << " " << fmt(px(n.center[0])) << " " << fmt(py(n.center[1]))
            << ")\" fill=\"none\" stroke=\"#1f77b4\" stroke-opacity=\"0.55\" stroke-width=\""
            << fmt(stroke * 0.7) << "\"/>\n";
        n.outer.drop_caches();
    }

    // segments on top
    for (const Segment& s : dag.source().segments()) {
        out << "<line x1=\"" << fmt(px(s.a[0])) << "\" y1=\"" << fmt(py(s.a[1])) << "\" x2=\""
            << fmt(px(s.b[0])) << "\" y2=\"" << fmt(py(s.b[1]))
            << "\" stroke=\"#d62728\" stroke-width=\"" << fmt(2.0 * stroke)
            << "\" stroke-linecap=\"round\"/>\n";
    }

    out << "</svg>\n";
    return out.str();
}

}  // namespace segavd
