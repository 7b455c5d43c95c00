#include "nmdf/tensor_field.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

namespace nmdf {

namespace {

bool voxel_is_pd(const SymMatrix& m) {
    if (!m.is_finite()) return false;
    const EigDecomp e = eig_sym(m);
    return e.values(m.order() - 1) > pd_tol(e.values(0));
}

}  // namespace

TensorField parse_tfld(std::istream& in) {
    std::string line;
    int lineno = 0;

    if (!std::getline(in, line)) throw ParseError(1, "empty input");
    ++lineno;
    {
        std::istringstream ls(line);
        std::string magic;
        int version = 0;
        if (!(ls >> magic >> version) || magic != "TFLD")
            throw VersionError("not a TFLD file (bad magic line)");
        if (version != 1)
            throw VersionError("unsupported TFLD version " + std::to_string(version));
    }

    TensorField field;
    if (!std::getline(in, line)) throw ParseError(2, "missing dims line");
    ++lineno;
    {
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag >> field.nx >> field.ny >> field.nz >> field.order) || tag != "dims")
            throw ParseError(2, "expected 'dims X Y Z n'");
        if (field.nx < 1 || field.ny < 1 || field.nz < 1 || field.order < 1)
            throw ParseError(2, "dims must be positive");
    }

    const int p = SymMatrix::packed_size(field.order);
    field.voxels.assign(static_cast<size_t>(field.voxel_count()), SymMatrix(field.order));
    field.mask.assign(static_cast<size_t>(field.voxel_count()), 0);
    std::vector<std::uint8_t> present(field.mask.size(), 0);

    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;  // blank line
        if (tag != "voxel") throw ParseError(lineno, "expected 'voxel', got '" + tag + "'");
        int x = 0, y = 0, z = 0;
        if (!(ls >> x >> y >> z)) throw ParseError(lineno, "bad voxel coordinates");
        if (x < 0 || x >= field.nx || y < 0 || y >= field.ny || z < 0 || z >= field.nz)
            throw ParseError(lineno, "voxel coordinates out of range");
        std::vector<double> vals(static_cast<size_t>(p));
        for (int i = 0; i < p; ++i) {
            if (!(ls >> vals[static_cast<size_t>(i)]))
                throw ParseError(lineno, "expected " + std::to_string(p) + " matrix entries");
            if (!std::isfinite(vals[static_cast<size_t>(i)]))
                throw ParseError(lineno, "non-finite matrix entry");
        }
        double extra;
        if (ls >> extra) throw ParseError(lineno, "trailing values on voxel line");
        const auto idx = static_cast<size_t>(field.index(x, y, z));
        if (present[idx]) throw ParseError(lineno, "duplicate voxel");
        present[idx] = 1;
        field.voxels[idx] = SymMatrix::from_packed(field.order, std::move(vals));
        field.mask[idx] = voxel_is_pd(field.voxels[idx]) ? 1 : 0;
    }
    return field;
}

void write_tfld(const TensorField& field, std::ostream& out) {
    out << "TFLD 1\n";
    out << "dims " << field.nx << ' ' << field.ny << ' ' << field.nz << ' ' << field.order << '\n';
    char buf[64];
    for (int x = 0; x < field.nx; ++x) {
        for (int y = 0; y < field.ny; ++y) {
            for (int z = 0; z < field.nz; ++z) {
                const auto idx = static_cast<size_t>(field.index(x, y, z));
                if (!field.mask[idx]) continue;
                out << "voxel " << x << ' ' << y << ' ' << z;
                for (double v : field.voxels[idx].packed()) {
                    std::snprintf(buf, sizeof(buf), "%.17g", v);
                    out << ' ' << buf;
                }
                out << '\n';
            }
        }
    }
    if (!out) throw IoError("write_tfld: stream failure");
}

BlockDataset extract_blocks(const TensorField& field, std::array<int, 3> block) {
    const auto [bx, by, bz] = block;
    if (bx < 1 || by < 1 || bz < 1) throw InvalidInput("extract_blocks: block dims must be >= 1");

    BlockDataset out;
    out.block = block;
    const int m = bx * by * bz;
    out.manifold = Manifold::power(Manifold::spd(field.order), m);

    for (int x0 = 0; x0 + bx <= field.nx; x0 += bx) {
        for (int y0 = 0; y0 + by <= field.ny; y0 += by) {
            for (int z0 = 0; z0 + bz <= field.nz; z0 += bz) {
                bool valid = true;
                for (int dx = 0; dx < bx && valid; ++dx)
                    for (int dy = 0; dy < by && valid; ++dy)
                        for (int dz = 0; dz < bz && valid; ++dz)
                            valid = field.mask[static_cast<size_t>(
                                        field.index(x0 + dx, y0 + dy, z0 + dz))] != 0;
                if (!valid) continue;

                std::vector<SymMatrix> comps;
                comps.reserve(static_cast<size_t>(m));
                for (int dx = 0; dx < bx; ++dx)
                    for (int dy = 0; dy < by; ++dy)
                        for (int dz = 0; dz < bz; ++dz)
                            comps.push_back(field.voxels[static_cast<size_t>(
                                field.index(x0 + dx, y0 + dy, z0 + dz))]);
                out.points.push_back(point_from_mats(out.manifold, std::move(comps)));
                out.origins.push_back({x0, y0, z0});
            }
        }
    }
    return out;
}

}  // namespace nmdf
