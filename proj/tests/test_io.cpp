#include <sstream>

#include "doctest.h"
#include "nmdf/glyphs.hpp"
#include "nmdf/serialize.hpp"
#include "nmdf/tensor_field.hpp"
#include "test_support.hpp"

using namespace nmdf;
using namespace nmdf::testing;

namespace {

TensorField synthetic_field(int nx, int ny, int nz, std::uint64_t seed) {
    TensorField f;
    f.nx = nx;
    f.ny = ny;
    f.nz = nz;
    f.order = 3;
    f.voxels.assign(static_cast<size_t>(f.voxel_count()), SymMatrix(3));
    f.mask.assign(static_cast<size_t>(f.voxel_count()), 1);
    Rng rng(seed);
    for (auto& v : f.voxels) v = random_spd(3, rng, 1.0);
    return f;
}

}  // namespace

TEST_CASE("parse_tfld: minimal field") {
    std::istringstream in("TFLD 1\ndims 1 1 1 3\nvoxel 0 0 0 1 0 0 1 0 1\n");
    const TensorField f = parse_tfld(in);
    CHECK(f.nx == 1);
    CHECK(f.order == 3);
    REQUIRE(f.voxels.size() == 1);
    CHECK(f.mask[0] == 1);
    CHECK(f.voxels[0](0, 0) == 1.0);
    CHECK(f.voxels[0](0, 1) == 0.0);
}

TEST_CASE("parse_tfld: non-PD voxel is masked out without error") {
    std::istringstream in("TFLD 1\ndims 2 1 1 2\nvoxel 0 0 0 1 0 0\nvoxel 1 0 0 1 0 1\n");
    const TensorField f = parse_tfld(in);
    CHECK(f.mask[static_cast<size_t>(f.index(0, 0, 0))] == 0);  // eigenvalue 0
    CHECK(f.mask[static_cast<size_t>(f.index(1, 0, 0))] == 1);
}

TEST_CASE("parse_tfld: absent voxels are masked out") {
    std::istringstream in("TFLD 1\ndims 2 1 1 1\nvoxel 1 0 0 4\n");
    const TensorField f = parse_tfld(in);
    CHECK(f.mask[static_cast<size_t>(f.index(0, 0, 0))] == 0);
    CHECK(f.mask[static_cast<size_t>(f.index(1, 0, 0))] == 1);
}

TEST_CASE("parse_tfld error cases carry line numbers") {
    {
        std::istringstream in("TFXX 1\n");
        CHECK_THROWS_AS(parse_tfld(in), VersionError);
    }
    {
        std::istringstream in("TFLD 2\ndims 1 1 1 3\n");
        CHECK_THROWS_AS(parse_tfld(in), VersionError);
    }
    {
        std::istringstream in("TFLD 1\ndims 0 1 1 3\n");
        CHECK_THROWS_AS(parse_tfld(in), ParseError);
    }
    {
        std::istringstream in("TFLD 1\ndims 1 1 1 3\nvoxel 5 0 0 1 0 0 1 0 1\n");
        try {
            parse_tfld(in);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
    }
    {
        std::istringstream in("TFLD 1\ndims 1 1 1 3\nvoxel 0 0 0 1 0 0\n");
        CHECK_THROWS_AS(parse_tfld(in), ParseError);  // too few entries
    }
    {
        std::istringstream in(
            "TFLD 1\ndims 1 1 1 1\nvoxel 0 0 0 1\nvoxel 0 0 0 2\n");
        CHECK_THROWS_AS(parse_tfld(in), ParseError);  // duplicate
    }
    {
        std::istringstream in("TFLD 1\ndims 1 1 1 1\nvoxel 0 0 0 nan\n");
        CHECK_THROWS_AS(parse_tfld(in), ParseError);
    }
}

TEST_CASE("write_tfld golden output for a single identity voxel") {
    TensorField f;
    f.nx = f.ny = f.nz = 1;
    f.order = 3;
    f.voxels = {SymMatrix::identity(3)};
    f.mask = {1};
    std::ostringstream out;
    write_tfld(f, out);
    CHECK(out.str() == "TFLD 1\ndims 1 1 1 3\nvoxel 0 0 0 1 0 0 1 0 1\n");
}

TEST_CASE("write_tfld with an empty mask emits only the header") {
    TensorField f;
    f.nx = 2;
    f.ny = 1;
    f.nz = 1;
    f.order = 2;
    f.voxels.assign(2, SymMatrix::identity(2));
    f.mask.assign(2, 0);
    std::ostringstream out;
    write_tfld(f, out);
    CHECK(out.str() == "TFLD 1\ndims 2 1 1 2\n");
}

TEST_CASE("TFLD round trip is bit exact and writes are deterministic") {
    const TensorField f = synthetic_field(8, 8, 8, 21);
    std::ostringstream out1, out2;
    write_tfld(f, out1);
    write_tfld(f, out2);
    CHECK(out1.str() == out2.str());

    std::istringstream in(out1.str());
    const TensorField g = parse_tfld(in);
    CHECK(g.nx == f.nx);
    CHECK(g.mask == f.mask);
    REQUIRE(g.voxels.size() == f.voxels.size());
    for (size_t i = 0; i < f.voxels.size(); ++i) CHECK(g.voxels[i] == f.voxels[i]);

    std::ostringstream out3;
    write_tfld(g, out3);
    CHECK(out3.str() == out1.str());
}

TEST_CASE("extract_blocks: full 4x4x4 field is one power point") {
    const TensorField f = synthetic_field(4, 4, 4, 22);
    const BlockDataset d = extract_blocks(f, {4, 4, 4});
    REQUIRE(d.points.size() == 1);
    CHECK(d.manifold == Manifold::power(Manifold::spd(3), 64));
    CHECK(d.origins[0] == std::array<int, 3>{0, 0, 0});
    // Component order is lexicographic (x, y, z) with z fastest.
    const int dx = 1, dy = 2, dz = 3;
    const int comp = (dx * 4 + dy) * 4 + dz;
    CHECK(d.points[0].mats[static_cast<size_t>(comp)] ==
          f.voxels[static_cast<size_t>(f.index(dx, dy, dz))]);
}

TEST_CASE("extract_blocks drops partial edge blocks") {
    const TensorField f = synthetic_field(5, 4, 4, 23);
    const BlockDataset d = extract_blocks(f, {4, 4, 4});
    CHECK(d.points.size() == 1);
}

TEST_CASE("extract_blocks drops blocks containing invalid voxels") {
    TensorField f = synthetic_field(8, 8, 8, 24);
    f.mask[static_cast<size_t>(f.index(5, 2, 1))] = 0;  // contaminates block (1,0,0)
    const BlockDataset d = extract_blocks(f, {4, 4, 4});
    CHECK(d.points.size() == 7);
    for (const auto& o : d.origins) CHECK(o != std::array<int, 3>{4, 0, 0});
}

TEST_CASE("extract_blocks point count matches the analytic formula") {
    const TensorField f = synthetic_field(9, 7, 5, 25);
    const BlockDataset d = extract_blocks(f, {2, 3, 1});
    CHECK(d.points.size() == static_cast<size_t>((9 / 2) * (7 / 3) * (5 / 1)));
}

TEST_CASE("fractional_anisotropy: isotropic zero, known anisotropic value") {
    CHECK(fractional_anisotropy(SymMatrix::identity(3)) == doctest::Approx(0.0));
    // lambda = (4, 1, 1): FA = sqrt(3/2) * ||(2,-1,-1)|| / ||(4,1,1)|| = 3/sqrt(18) * sqrt(... )
    const SymMatrix a = SymMatrix::diagonal(Eigen::Vector3d(4.0, 1.0, 1.0));
    const double expected = std::sqrt(1.5) * std::sqrt(6.0) / std::sqrt(18.0);
    CHECK(fractional_anisotropy(a) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("render_glyphs: circles for identity voxels, axis ratios, determinism") {
    const Manifold m = Manifold::power(Manifold::spd(3), 4);
    std::vector<SymMatrix> comps(4, SymMatrix::identity(3));
    const Point p = point_from_mats(m, comps);
    const std::string svg = render_glyphs({p}, std::nullopt, 1.0, "cmd");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("<!-- cmd -->") != std::string::npos);
    CHECK(svg.find("<g id=\"factor-0\">") != std::string::npos);
    // Identity voxel: rx == ry and pure blue (FA = 0).
    CHECK(svg.find("rx=\"14.0000\" ry=\"14.0000\"") != std::string::npos);
    CHECK(svg.find("fill=\"#0000ff\"") != std::string::npos);

    // diag(4,1,1): leading 2x2 eigenvalues (4,1) -> 2:1 axis ratio.
    std::vector<SymMatrix> aniso(4, SymMatrix::diagonal(Eigen::Vector3d(4.0, 1.0, 1.0)));
    const Point pa = point_from_mats(m, aniso);
    const std::string svg2 = render_glyphs({pa}, std::nullopt, 1.0);
    CHECK(svg2.find("rx=\"28.0000\" ry=\"14.0000\"") != std::string::npos);

    CHECK(render_glyphs({p}, std::nullopt, 1.0, "cmd") == svg);

    // Non-square component count requires an explicit layout.
    const Manifold m3 = Manifold::power(Manifold::spd(3), 3);
    const Point p3 = point_from_mats(m3, std::vector<SymMatrix>(3, SymMatrix::identity(3)));
    CHECK_THROWS_AS(render_glyphs({p3}, std::nullopt, 1.0), InvalidLayout);
    CHECK_NOTHROW(render_glyphs({p3}, GlyphLayout{1, 3}, 1.0));
    CHECK_THROWS_AS(render_glyphs({p3}, GlyphLayout{2, 2}, 1.0), InvalidLayout);
}

TEST_CASE("descriptor JSON round trip") {
    for (const Manifold& m : {Manifold::euclidean(7), Manifold::spd(3),
                              Manifold::power(Manifold::spd(3), 64),
                              Manifold::power(Manifold::euclidean(2), 5)}) {
        CHECK(descriptor_from_json(descriptor_to_json(m)) == m);
    }
}

TEST_CASE("dataset JSON round trip preserves points bit-exactly") {
    const TensorField f = synthetic_field(4, 4, 8, 26);
    const BlockDataset d = extract_blocks(f, {4, 4, 4});
    const BlockDataset d2 = dataset_from_json(dataset_to_json(d));
    CHECK(d2.manifold == d.manifold);
    CHECK(d2.block == d.block);
    CHECK(d2.origins == d.origins);
    REQUIRE(d2.points.size() == d.points.size());
    for (size_t i = 0; i < d.points.size(); ++i)
        CHECK(same_point(d2.points[i], d.points[i]));
}

TEST_CASE("factorization JSON round trip recomputes derived fields exactly") {
    Rng rng(27);
    const Point q = random_point(Manifold::power(Manifold::spd(3), 2), rng, 0.6);
    const std::vector<Point> data = random_dataset_near(q, 8, rng, 1.0);
    CcNmdfParams params;
    params.max_iter = 8;
    const Factorization fac = cc_nmdf(data, q, 2, params);

    const nlohmann::json j = factorization_to_json(fac);
    const Factorization back = factorization_from_json(j);
    CHECK(back.h == fac.h);
    CHECK(back.f == fac.f);
    CHECK(back.method == fac.method);
    CHECK(back.rank == fac.rank);
    CHECK(back.seed == fac.seed);
    CHECK(back.objective_trace == fac.objective_trace);
    CHECK(same_point(back.q, fac.q));
    REQUIRE(back.y.size() == fac.y.size());
    for (size_t k = 0; k < fac.y.size(); ++k) CHECK(same_point(back.y[k], fac.y[k]));
    // Serialization itself is deterministic.
    CHECK(factorization_to_json(back).dump() == j.dump());
}

TEST_CASE("error_csv schema and timing policy") {
    SweepEntry e;
    e.report = {3, 1.5, 1.25, 1.75, 0.123};
    const std::string csv = error_csv({e});
    CHECK(csv == "rank,exact,tangent,cc,wall_time_s\n3,1.5,1.25,1.75,0\n");
    const std::string timed = error_csv({e}, true);
    CHECK(timed.find("0.123") != std::string::npos);
}
