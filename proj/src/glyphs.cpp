#include "nmdf/glyphs.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace nmdf {

double fractional_anisotropy(const SymMatrix& m) {
    const EigDecomp e = eig_sym(m);
    const double norm = e.values.norm();
    if (norm == 0.0) return 0.0;
    const Eigen::VectorXd centered = e.values.array() - e.values.mean();
    return std::sqrt(1.5) * centered.norm() / norm;
}

namespace {

constexpr double kCell = 40.0;     // px per glyph cell
constexpr double kUnit = 14.0;     // px per unit semi-axis at scale 1
constexpr double kFactorGap = 24.0;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string fa_color(double fa) {
    const double t = std::clamp(fa, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(255.0 * t));
    const int b = static_cast<int>(std::lround(255.0 * (1.0 - t)));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x00%02x", r, b);
    return buf;
}

}  // namespace

std::string render_glyphs(const std::vector<Point>& points, std::optional<GlyphLayout> layout,
                          double scale, const std::string& command_comment) {
    if (points.empty()) throw InvalidInput("render_glyphs: no points");
    const Manifold& m = points.front().manifold;
    if (m.flat() || m.spd_order() < 2)
        throw InvalidInput("render_glyphs: points must be SPD-valued with order >= 2");
    for (const Point& p : points)
        if (!(p.manifold == m)) throw ShapeMismatch("render_glyphs: manifold mismatch");

    const int comps = m.copies();
    GlyphLayout grid;
    if (layout) {
        grid = *layout;
        if (grid.rows < 1 || grid.cols < 1 || grid.rows * grid.cols != comps)
            throw InvalidLayout("render_glyphs: layout does not cover " + std::to_string(comps) +
                                " components");
    } else {
        const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(comps))));
        if (side * side != comps)
            throw InvalidLayout("render_glyphs: component count " + std::to_string(comps) +
                                " is not a perfect square; pass an explicit layout");
        grid = {side, side};
    }

    const double panel_w = grid.cols * kCell;
    const double panel_h = grid.rows * kCell;
    const double width =
        static_cast<double>(points.size()) * panel_w +
        static_cast<double>(points.size() - 1) * kFactorGap;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(width)
        << "\" height=\""
        << fmt(panel_h) << "\" viewBox=\"0 0 " << fmt(width) << ' ' << fmt(panel_h) << "\">\n";
    if (!command_comment.empty()) svg << "<!-- " << command_comment << " -->\n";

    for (size_t pi = 0; pi < points.size(); ++pi) {
        const double x_off = static_cast<double>(pi) * (panel_w + kFactorGap);
        svg << "<g id=\"factor-" << pi << "\">\n";
        for (int c = 0; c < comps; ++c) {
            const SymMatrix& vox = points[pi].mats[static_cast<size_t>(c)];
            const int row = c / grid.cols;
            const int col = c % grid.cols;
            const double cx = x_off + (col + 0.5) * kCell;
            const double cy = (row + 0.5) * kCell;

            SymMatrix lead(2);
            lead.set(0, 0, vox(0, 0));
            lead.set(0, 1, vox(0, 1));
            lead.set(1, 1, vox(1, 1));
            const EigDecomp e2 = eig_sym(lead);
            const double rx = std::sqrt(std::max(0.0, e2.values(0))) * scale * kUnit;
            const double ry = std::sqrt(std::max(0.0, e2.values(1))) * scale * kUnit;
            const double angle =
                std::atan2(e2.vectors(1, 0), e2.vectors(0, 0)) * 180.0 / M_PI;

            svg << "<ellipse cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy) << "\" rx=\"" << fmt(rx)
                << "\" ry=\"" << fmt(ry) << "\" transform=\"rotate(" << fmt(angle) << ' '
                << fmt(cx) << ' ' << fmt(cy) << ")\" fill=\"" << fa_color(fractional_anisotropy(vox))
                << "\"/>\n";
        }
        svg << "</g>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace nmdf
