#include <cmath>

#include "doctest.h"
#include "nmdf/eval.hpp"
#include "test_support.hpp"

using namespace nmdf;
using namespace nmdf::testing;

namespace {

Factorization make_fac(const Point& q, Eigen::MatrixXd h, Eigen::MatrixXd f) {
    Factorization fac;
    fac.q = q;
    fac.rank = static_cast<int>(h.cols());
    fac.h = std::move(h);
    fac.f = std::move(f);
    rebuild_derived(fac);
    return fac;
}

// Independent per-point evaluation of the exact reconstruction error through
// tangent arithmetic only.
double exact_error_oracle(const std::vector<Point>& data, const Factorization& fac) {
    double sq = 0.0;
    for (size_t i = 0; i < data.size(); ++i) {
        Tangent recon = zero_tangent(fac.q);
        for (size_t k = 0; k < fac.xi.size(); ++k)
            recon = tangent_add(
                recon, tangent_scale(fac.xi[k], fac.h(static_cast<int>(i), static_cast<int>(k))));
        const double d = dist(data[i], exp_map(fac.q, recon));
        sq += d * d;
    }
    return std::sqrt(sq);
}

double tangent_error_oracle(const std::vector<Point>& data, const Factorization& fac) {
    double sq = 0.0;
    for (size_t i = 0; i < data.size(); ++i) {
        Tangent resid = tangent_scale(log_map(fac.q, data[i]), -1.0);
        for (size_t k = 0; k < fac.xi.size(); ++k)
            resid = tangent_add(
                resid, tangent_scale(fac.xi[k], fac.h(static_cast<int>(i), static_cast<int>(k))));
        sq += inner(fac.q, resid, resid);
    }
    return std::sqrt(sq);
}

}  // namespace

TEST_CASE("errors vanish at a perfect reconstruction") {
    Rng rng(1);
    const Point q = random_point(Manifold::spd(2), rng);
    std::vector<Point> data;
    Eigen::MatrixXd h(3, 3);
    Eigen::MatrixXd f(3, 3);
    // Plant: data_i = exp_q(Xi^i), H = I.
    h.setIdentity();
    for (int k = 0; k < 3; ++k) {
        const Tangent t = random_tangent(q, rng, 0.6);
        f.row(k) = tangent_to_coords(q, t).transpose();
        data.push_back(exp_map(q, t));
    }
    const Factorization fac = make_fac(q, h, f);
    CHECK(exact_error(data, fac) <= 1e-9);
    CHECK(tangent_error(data, fac) <= 1e-9);
    CHECK(cc_error(data, fac) <= 1e-9);
}

TEST_CASE("flat manifolds: exact = tangent = cc = Frobenius residual") {
    Rng rng(2);
    const Manifold e = Manifold::euclidean(4);
    const Point q = random_point(e, rng);
    std::vector<Point> data;
    for (int i = 0; i < 7; ++i) data.push_back(random_point(e, rng));
    const Factorization fac =
        make_fac(q, random_gaussian(7, 2, rng).cwiseAbs(), random_gaussian(2, 4, rng));

    Eigen::MatrixXd m(7, 4);
    for (int i = 0; i < 7; ++i)
        m.row(i) = (data[static_cast<size_t>(i)].vec - q.vec).transpose();
    const double frob = (fac.h * fac.f - m).norm();
    CHECK(exact_error(data, fac) == doctest::Approx(frob).epsilon(1e-12));
    CHECK(tangent_error(data, fac) == doctest::Approx(frob).epsilon(1e-12));
    CHECK(cc_error(data, fac) == doctest::Approx(frob).epsilon(1e-12));
}

TEST_CASE("curved instances match the independent loops and cc dominates tangent") {
    Rng rng(3);
    for (const Manifold& m : {Manifold::spd(3), Manifold::power(Manifold::spd(2), 3)}) {
        const Point q = random_point(m, rng, 0.7);
        const std::vector<Point> data = random_dataset_near(q, 6, rng, 1.3);
        const Factorization fac =
            make_fac(q, random_gaussian(6, 2, rng).cwiseAbs(), random_gaussian(2, m.dim(), rng));

        CHECK(exact_error(data, fac) ==
              doctest::Approx(exact_error_oracle(data, fac)).epsilon(1e-10));
        CHECK(tangent_error(data, fac) ==
              doctest::Approx(tangent_error_oracle(data, fac)).epsilon(1e-10));
        // Recomputation consistency of cc_error against the workspace route.
        const CCWorkspace w = build_workspace(data, q);
        CHECK(cc_error(data, fac) ==
              doctest::Approx(std::sqrt(cc_objective(fac.h, fac.f, w))).epsilon(1e-12));
        // Non-positive curvature: beta^2 >= 1, so cc >= tangent.
        CHECK(cc_error(data, fac) >= tangent_error(data, fac) * (1.0 - 1e-12));
    }
}

TEST_CASE("t_nmdf matrix objective equals the squared tangent error") {
    Rng rng(30);
    const Point q = random_point(Manifold::spd(2), rng);
    const std::vector<Point> data = random_dataset_near(q, 10, rng, 1.2);
    const Factorization fac = t_nmdf(data, q, 2, 20, 0);
    CHECK(fac.objective_trace.back() ==
          doctest::Approx(std::pow(tangent_error(data, fac), 2)).epsilon(1e-12));
}

TEST_CASE("default_ranks reproduces the 12-step 2..35 grid") {
    const std::vector<int> expected{2, 5, 8, 11, 14, 17, 20, 23, 26, 29, 32, 35};
    CHECK(default_ranks() == expected);
    CHECK(default_ranks(2, 2, 1) == std::vector<int>{2});
    CHECK(default_ranks(1, 4, 4) == std::vector<int>{1, 2, 3, 4});
}

TEST_CASE("rank_sweep: single rank, report contents, failure recording") {
    Rng rng(4);
    const Point q = random_point(Manifold::spd(2), rng);
    const std::vector<Point> data = random_dataset_near(q, 8, rng, 1.0);
    CcNmdfParams params;
    params.max_iter = 10;

    const auto single = rank_sweep(data, q, {2}, Method::CcNmdf, params);
    REQUIRE(single.size() == 1);
    CHECK(single[0].ok);
    CHECK(single[0].report.rank == 2);
    CHECK(single[0].report.exact >= 0.0);
    CHECK(single[0].report.wall_time_s >= 0.0);

    // Rank above N fails for that rank only; the sweep continues.
    const auto mixed = rank_sweep(data, q, {20, 2}, Method::TNmdf, params);
    REQUIRE(mixed.size() == 2);
    CHECK_FALSE(mixed[0].ok);
    CHECK(std::isnan(mixed[0].report.exact));
    CHECK(!mixed[0].message.empty());
    CHECK(mixed[1].ok);
}

TEST_CASE("rank_sweep exact error is non-increasing on planted low-rank data") {
    Rng rng(5);
    const Manifold m = Manifold::power(Manifold::spd(2), 2);
    const Point q = random_point(m, rng, 0.5);
    // Planted rank-3 tangent structure with small per-point jitter.
    std::vector<Tangent> basis_dirs;
    for (int k = 0; k < 3; ++k) basis_dirs.push_back(random_tangent(q, rng, 0.5));
    std::vector<Point> data;
    for (int i = 0; i < 20; ++i) {
        Tangent t = random_tangent(q, rng, 0.02);
        for (int k = 0; k < 3; ++k)
            t = tangent_add(t, tangent_scale(basis_dirs[static_cast<size_t>(k)],
                                             0.2 + uniform01(rng)));
        data.push_back(exp_map(q, t));
    }
    CcNmdfParams params;
    params.max_iter = 20;
    const auto entries = rank_sweep(data, q, {1, 2, 3, 4}, Method::CcNmdf, params);
    for (size_t i = 1; i < entries.size(); ++i) {
        REQUIRE(entries[i].ok);
        CHECK(entries[i].report.exact <= entries[i - 1].report.exact * 1.05);
    }
}

TEST_CASE("error_scaling_scan: unscaled top row and flat degeneracy") {
    Rng rng(6);
    const Point q = random_point(Manifold::spd(2), rng, 0.6);
    const std::vector<Point> data = random_dataset_near(q, 6, rng, 0.9);
    CcNmdfParams params;
    params.max_iter = 10;
    const Factorization fac = cc_nmdf(data, q, 2, params);

    const ErrorScalingScan scan = error_scaling_scan(data, q, fac, {1.0, 0.5});
    REQUIRE(scan.rows.size() == 2);
    CHECK(scan.rows[0].scale == 1.0);
    CHECK(scan.rows[0].exact == doctest::Approx(exact_error(data, fac)).epsilon(1e-9));
    CHECK(scan.rows[0].tangent == doctest::Approx(tangent_error(data, fac)).epsilon(1e-9));
    CHECK(scan.rows[0].cc == doctest::Approx(cc_error(data, fac)).epsilon(1e-9));

    // Flat data: both gaps vanish at every scale.
    const Manifold e = Manifold::euclidean(3);
    const Point q0 = random_point(e, rng);
    std::vector<Point> flat_data;
    for (int i = 0; i < 5; ++i) flat_data.push_back(random_point(e, rng));
    const Factorization flat_fac =
        make_fac(q0, random_gaussian(5, 2, rng).cwiseAbs(), random_gaussian(2, 3, rng));
    const ErrorScalingScan flat_scan = error_scaling_scan(flat_data, q0, flat_fac, {1.0, 0.5, 0.25});
    for (const ErrorScalingRow& r : flat_scan.rows) {
        CHECK(r.gap_cc <= 1e-12);
        CHECK(r.gap_tangent <= 1e-12);
    }

    CHECK_THROWS_AS(error_scaling_scan(data, q, fac, {0.5, 1.0}), InvalidInput);
    CHECK_THROWS_AS(error_scaling_scan(data, q, fac, {1.5}), InvalidInput);
}

TEST_CASE("error_scaling_scan slopes show the higher-order curvature-corrected gap") {
    int ineq_ok = 0, slope_ok = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        Rng rng(mix_seed(777, static_cast<std::uint64_t>(t)));
        const Point q = random_point(Manifold::spd(2), rng, 0.6);
        const std::vector<Point> data = random_dataset_near(q, 10, rng, 1.0);
        CcNmdfParams params;
        params.max_iter = 10;
        params.seed = static_cast<std::uint64_t>(t);
        const Factorization fac = cc_nmdf(data, q, 2, params);
        const ErrorScalingScan scan = error_scaling_scan(data, q, fac, {1.0, 0.5, 0.25, 0.125, 0.0625});

        bool ineq = true;
        for (const ErrorScalingRow& r : scan.rows)
            if (r.gap_cc > r.gap_tangent) ineq = false;
        if (ineq) ++ineq_ok;
        if (scan.slope_cc >= 2.7) ++slope_ok;
        // Measured behavior: the tangent gap scales ~eps^4, the cc gap faster.
        CHECK(scan.slope_tangent > 3.0);
        CHECK(scan.slope_cc > scan.slope_tangent);
    }
    CHECK(ineq_ok >= trials * 9 / 10);
    CHECK(slope_ok >= trials * 9 / 10);
}
