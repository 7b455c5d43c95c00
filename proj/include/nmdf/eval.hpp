#pragma once

#include <string>
#include <vector>

#include "nmdf/factorization.hpp"

namespace nmdf {

struct ErrorReport {
    int rank = 0;
    double exact = 0.0;
    double tangent = 0.0;
    double curvature_corrected = 0.0;
    double wall_time_s = 0.0;
};

/// Root-sum-square manifold distance between the data and the reconstructions
/// exp_q(sum_k H_{ik} Xi^k).
double exact_error(const std::vector<Point>& data, const Factorization& fac);

/// sqrt(sum_i ||sum_k H_{ik} Xi^k - log_q x^i||_q^2), the tangent space error.
double tangent_error(const std::vector<Point>& data, const Factorization& fac);

/// sqrt(cc_objective) with the workspace rebuilt from (data, q).
double cc_error(const std::vector<Point>& data, const Factorization& fac);

enum class Method { TNmdf, CcNmdf };

struct SweepEntry {
    ErrorReport report;
    bool ok = true;
    std::string message;
};

/// Runs the method once per rank with a fixed seed. Per-rank failures are
/// recorded (NaN errors and a message) and the sweep continues.
std::vector<SweepEntry> rank_sweep(const std::vector<Point>& data, const Point& q,
                                   const std::vector<int>& ranks, Method method,
                                   const CcNmdfParams& params = {});

/// round(linspace(lo, hi, count)); default matches ranks 2..35 in 12 steps.
std::vector<int> default_ranks(int lo = 2, int hi = 35, int count = 12);

struct ErrorScalingRow {
    double scale = 0.0;
    double exact = 0.0;
    double cc = 0.0;
    double tangent = 0.0;
    double gap_cc = 0.0;       // |exact^2 - cc^2|
    double gap_tangent = 0.0;  // |exact^2 - tangent^2|
};

struct ErrorScalingScan {
    std::vector<ErrorScalingRow> rows;
    double slope_cc = 0.0;       // fitted log-log slope of gap_cc vs tangent error
    double slope_tangent = 0.0;  // same for gap_tangent
};

/// Shrinks the dataset toward q (x^i(s) = exp_q(s log_q x^i)) and the factor
/// coordinates with it (F(s) = s F), recomputes the three errors per scale and
/// fits the log-log slopes of the squared-error gaps against the tangent
/// error. Scales must be sorted descending in (0, 1].
ErrorScalingScan error_scaling_scan(const std::vector<Point>& data, const Point& q, const Factorization& fac,
                     const std::vector<double>& scales);

}  // namespace nmdf
