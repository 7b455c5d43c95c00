#include "nmdf/eval.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace nmdf {

namespace {

void check_fac(const std::vector<Point>& data, const Factorization& fac, const char* what) {
    if (data.empty()) throw InvalidInput(std::string(what) + ": empty dataset");
    if (fac.h.rows() != static_cast<int>(data.size()) || fac.h.cols() != fac.f.rows() ||
        fac.f.cols() != fac.q.manifold.dim())
        throw ShapeMismatch(std::string(what) + ": factorization shapes do not match the data");
}

}  // namespace

double exact_error(const std::vector<Point>& data, const Factorization& fac) {
    check_fac(data, fac, "exact_error");
    const BasePointCache cache = make_base_cache(fac.q);
    const Eigen::MatrixXd recon_coords = fac.h * fac.f;
    double sq = 0.0;
    for (size_t i = 0; i < data.size(); ++i) {
        const Tangent v =
            tangent_from_coords(fac.q, recon_coords.row(static_cast<int>(i)).transpose(), cache);
        const double d = dist(data[i], exp_map(fac.q, v, cache));
        sq += d * d;
    }
    return std::sqrt(sq);
}

double tangent_error(const std::vector<Point>& data, const Factorization& fac) {
    check_fac(data, fac, "tangent_error");
    const Eigen::MatrixXd m = coordinate_matrix(data, fac.q).values;
    return (fac.h * fac.f - m).norm();
}

double cc_error(const std::vector<Point>& data, const Factorization& fac) {
    check_fac(data, fac, "cc_error");
    const CCWorkspace w = build_workspace(data, fac.q);
    return std::sqrt(cc_objective(fac.h, fac.f, w));
}

std::vector<int> default_ranks(int lo, int hi, int count) {
    if (count < 1 || hi < lo) throw InvalidInput("default_ranks: bad range");
    std::vector<int> ranks;
    ranks.reserve(static_cast<size_t>(count));
    if (count == 1) {
        ranks.push_back(lo);
        return ranks;
    }
    for (int i = 0; i < count; ++i) {
        const double v = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
        ranks.push_back(static_cast<int>(std::lround(v)));
    }
    return ranks;
}

std::vector<SweepEntry> rank_sweep(const std::vector<Point>& data, const Point& q,
                                   const std::vector<int>& ranks, Method method,
                                   const CcNmdfParams& params) {
    std::vector<SweepEntry> entries;
    entries.reserve(ranks.size());
    for (int k : ranks) {
        SweepEntry e;
        e.report.rank = k;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const Factorization fac = method == Method::CcNmdf
                                          ? cc_nmdf(data, q, k, params)
                                          : t_nmdf(data, q, k, params.max_iter, params.seed);
            e.report.exact = exact_error(data, fac);
            e.report.tangent = tangent_error(data, fac);
            e.report.curvature_corrected = cc_error(data, fac);
        } catch (const std::exception& ex) {
            e.ok = false;
            e.message = ex.what();
            e.report.exact = e.report.tangent = e.report.curvature_corrected =
                std::numeric_limits<double>::quiet_NaN();
        }
        e.report.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        entries.push_back(std::move(e));
    }
    return entries;
}

namespace {

// Least-squares slope of log(y) against log(x) over points with positive y.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    if (lx.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double n = static_cast<double>(lx.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / denom;
}

}  // namespace

ErrorScalingScan error_scaling_scan(const std::vector<Point>& data, const Point& q, const Factorization& fac,
                     const std::vector<double>& scales) {
    check_fac(data, fac, "error_scaling_scan");
    if (scales.empty()) throw InvalidInput("error_scaling_scan: no scales");
    for (size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0.0) || scales[i] > 1.0)
            throw InvalidInput("error_scaling_scan: scales must lie in (0, 1]");
        if (i > 0 && scales[i] >= scales[i - 1])
            throw InvalidInput("error_scaling_scan: scales must be sorted descending");
    }

    const BasePointCache cache = make_base_cache(q);
    std::vector<Tangent> logs;
    logs.reserve(data.size());
    for (const Point& x : data) logs.push_back(log_map(q, x, cache));

    ErrorScalingScan scan;
    std::vector<double> eps, gap_cc, gap_t;
    for (double s : scales) {
        std::vector<Point> scaled;
        scaled.reserve(data.size());
        for (const Tangent& v : logs) scaled.push_back(exp_map(q, tangent_scale(v, s), cache));

        Factorization fs = fac;
        fs.f *= s;

        ErrorScalingRow row;
        row.scale = s;
        row.exact = exact_error(scaled, fs);
        row.tangent = tangent_error(scaled, fs);
        row.cc = cc_error(scaled, fs);
        row.gap_cc = std::abs(row.exact * row.exact - row.cc * row.cc);
        row.gap_tangent = std::abs(row.exact * row.exact - row.tangent * row.tangent);
        scan.rows.push_back(row);
        eps.push_back(row.tangent);
        gap_cc.push_back(row.gap_cc);
        gap_t.push_back(row.gap_tangent);
    }
    scan.slope_cc = loglog_slope(eps, gap_cc);
    scan.slope_tangent = loglog_slope(eps, gap_t);
    return scan;
}

}  // namespace nmdf
