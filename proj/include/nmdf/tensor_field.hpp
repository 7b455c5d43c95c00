#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <vector>

#include "nmdf/manifold.hpp"

namespace nmdf {

/// 3-D grid of symmetric matrices with a validity mask. Voxels are stored in
/// lexicographic (x, y, z) order, z fastest. Mask-true voxels are positive
/// definite.
struct TensorField {
    int nx = 0, ny = 0, nz = 0;
    int order = 0;  // matrix order per voxel (3 for DTI)
    std::vector<SymMatrix> voxels;
    std::vector<std::uint8_t> mask;

    int index(int x, int y, int z) const { return (x * ny + y) * nz + z; }
    long voxel_count() const { return static_cast<long>(nx) * ny * nz; }
};

/// Parses TFLD v1 text:
///   TFLD 1
///   dims X Y Z n
///   voxel x y z a11 a12 ... (upper triangle, row-major)
/// Absent voxels and present voxels failing the PD check get mask = false.
TensorField parse_tfld(std::istream& in);

/// Writes TFLD v1 with values at 17 significant digits; only mask-true voxels
/// are emitted, in lexicographic order.
void write_tfld(const TensorField& field, std::ostream& out);

/// Non-overlapping axis-aligned blocks of a tensor field, each unfolded into
/// one point on Power(SPD(n), bx*by*bz). Component order within a block is
/// lexicographic (x, y, z), z fastest; this order is part of the public
/// contract.
struct BlockDataset {
    std::array<int, 3> block{};
    Manifold manifold;
    std::vector<Point> points;
    std::vector<std::array<int, 3>> origins;
};

/// Tiles the grid at multiples of the block dims. Blocks containing any
/// masked-out voxel are dropped, as are partial edge blocks.
BlockDataset extract_blocks(const TensorField& field, std::array<int, 3> block);

}  // namespace nmdf
