#pragma once

#include "confplane/field.hpp"

#include <string>

namespace confplane {

/// Standalone SVG heatmap of a grid, written directly — batch output, no
/// display loop. Diverging blue-white-red scale over [min, max] of the valid
/// nodes (white pinned to 0 when the range straddles it); invalid border
/// nodes render gray. Grids wider than 128 cells per axis are subsampled at
/// a uniform stride. Output is deterministic for identical inputs.
void write_svg_heatmap(const ScalarGrid& g, const std::string& title,
                       const std::string& path);

} // namespace confplane
