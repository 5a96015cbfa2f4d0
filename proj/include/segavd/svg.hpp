#pragma once

#include <string>

#include "segavd/avd.hpp"

namespace segavd {

struct RenderOptions {
    int width = 800;
    double stroke_scale = 1.0;
    int level = -1;  ///< -1: basic leaves; otherwise draw nodes at this level (exponent 0)
};

/// Renders a 2-D structure: segments as lines, the selected nodes' outer
/// ellipsoids as rotated ellipse elements. Deterministic element order.
/// Throws UsageError when the structure is not 2-dimensional.
std::string render_svg(const AvdDag& dag, const RenderOptions& opts = {});

}  // namespace segavd
