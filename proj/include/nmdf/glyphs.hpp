#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nmdf/manifold.hpp"

namespace nmdf {

struct GlyphLayout {
    int rows = 0;
    int cols = 0;
};

/// Renders SPD-valued points as grids of ellipse glyphs (one <g> per point,
/// laid out left to right). Each component is drawn as the ellipse of its
/// leading 2x2 principal submatrix, colored by fractional anisotropy on a
/// fixed blue-to-red ramp. Without an explicit layout the component count must
/// be a perfect square. Output is a deterministic function of the inputs;
/// `command_comment`, when nonempty, is embedded as an SVG comment.
std::string render_glyphs(const std::vector<Point>& points, std::optional<GlyphLayout> layout,
                          double scale, const std::string& command_comment = {});

/// Fractional anisotropy sqrt(3/2) ||lambda - mean|| / ||lambda|| of an SPD
/// matrix's eigenvalues.
double fractional_anisotropy(const SymMatrix& m);

}  // namespace nmdf
