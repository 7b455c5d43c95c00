#include "nmdf/euclid_factor.hpp"

#include <cmath>
#include <iostream>
#include <limits>

namespace nmdf {

CoordMatrix coordinate_matrix(const std::vector<Point>& data, const Point& q) {
    if (data.empty()) throw InvalidInput("coordinate_matrix: empty dataset");
    const int d = q.manifold.dim();
    CoordMatrix out{Eigen::MatrixXd(static_cast<int>(data.size()), d), q, kCanonicalBasisId};
    if (q.manifold.flat()) {
        for (size_t i = 0; i < data.size(); ++i) {
            if (!(data[i].manifold == q.manifold))
                throw ShapeMismatch("coordinate_matrix: manifold mismatch");
            out.values.row(static_cast<int>(i)) = (data[i].vec - q.vec).transpose();
        }
        return out;
    }
    const BasePointCache cache = make_base_cache(q);
    for (size_t i = 0; i < data.size(); ++i) {
        const Tangent v = log_map(q, data[i], cache);
        out.values.row(static_cast<int>(i)) = tangent_to_coords(q, v, cache).transpose();
    }
    return out;
}

namespace {

struct LloydResult {
    std::vector<int> assign;
    Eigen::MatrixXd centroids;
    double objective;
};

int nearest_centroid(const Eigen::MatrixXd& m, int row, const Eigen::MatrixXd& centroids) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < centroids.rows(); ++k) {
        const double d = (m.row(row) - centroids.row(k)).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

LloydResult lloyd(const Eigen::MatrixXd& m, int k, Rng& rng) {
    const int n = static_cast<int>(m.rows());
    const int d = static_cast<int>(m.cols());

    // Forgy init: k distinct random rows.
    std::vector<int> pool(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
    Eigen::MatrixXd centroids(k, d);
    for (int c = 0; c < k; ++c) {
        const auto j = static_cast<size_t>(uniform_index(rng, pool.size()));
        centroids.row(c) = m.row(pool[j]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }

    std::vector<int> assign(static_cast<size_t>(n), -1);
    const int max_rounds = 100;
    for (int round = 0; round < max_rounds; ++round) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            const int a = nearest_centroid(m, i, centroids);
            if (a != assign[static_cast<size_t>(i)]) {
                assign[static_cast<size_t>(i)] = a;
                changed = true;
            }
        }

        std::vector<int> counts(static_cast<size_t>(k), 0);
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
        for (int i = 0; i < n; ++i) {
            sums.row(assign[static_cast<size_t>(i)]) += m.row(i);
            ++counts[static_cast<size_t>(assign[static_cast<size_t>(i)])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<size_t>(c)] > 0) {
                centroids.row(c) = sums.row(c) / counts[static_cast<size_t>(c)];
            } else {
                // Re-seed to the point farthest from its current centroid.
                int far_i = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double dd =
                        (m.row(i) - centroids.row(assign[static_cast<size_t>(i)])).squaredNorm();
                    if (dd > far_d) {
                        far_d = dd;
                        far_i = i;
                    }
                }
                centroids.row(c) = m.row(far_i);
                changed = true;
            }
        }
        if (!changed && round > 0) break;
    }

    double obj = 0.0;
    for (int i = 0; i < n; ++i)
        obj += (m.row(i) - centroids.row(assign[static_cast<size_t>(i)])).squaredNorm();
    return LloydResult{std::move(assign), std::move(centroids), obj};
}

}  // namespace

namespace {

KMeansResult to_kmeans_result(LloydResult best, int n, int k) {
    KMeansResult out;
    out.assignments = Eigen::MatrixXd::Zero(n, k);
    for (int i = 0; i < n; ++i) out.assignments(i, best.assign[static_cast<size_t>(i)]) = 1.0;
    out.centroids = std::move(best.centroids);
    out.objective = best.objective;
    return out;
}

}  // namespace

KMeansResult kmeans_single(const Eigen::MatrixXd& m, int k, std::uint64_t engine_seed) {
    const int n = static_cast<int>(m.rows());
    if (k < 1 || k > n) throw InvalidInput("kmeans: k must be in [1, N]");
    if (!m.allFinite()) throw InvalidInput("kmeans: non-finite input");
    Rng rng(engine_seed);
    return to_kmeans_result(lloyd(m, k, rng), n, k);
}

KMeansResult kmeans(const Eigen::MatrixXd& m, int k, int restarts, std::uint64_t seed) {
    const int n = static_cast<int>(m.rows());
    if (k < 1 || k > n) throw InvalidInput("kmeans: k must be in [1, N]");
    if (restarts < 1) throw InvalidInput("kmeans: restarts must be >= 1");
    if (!m.allFinite()) throw InvalidInput("kmeans: non-finite input");

    LloydResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        LloydResult run = lloyd(m, k, rng);
        if (run.objective < best.objective) best = std::move(run);
    }
    return to_kmeans_result(std::move(best), n, k);
}

Eigen::MatrixXd least_squares_factor(const Eigen::MatrixXd& h, const Eigen::MatrixXd& m) {
    // (H^T H)^+ H^T M via the deterministic symmetric eigensolver.
    const Eigen::MatrixXd hth = h.transpose() * h;
    EigDecomp e = eig_sym(SymMatrix::from_dense(hth));
    const double cutoff = 1e-12 * std::max(0.0, e.values(0));
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(e.values.size());
    for (int i = 0; i < e.values.size(); ++i)
        if (e.values(i) > cutoff && e.values(i) > 0.0) inv(i) = 1.0 / e.values(i);
    const Eigen::MatrixXd pinv = e.vectors * inv.asDiagonal() * e.vectors.transpose();
    return pinv * (h.transpose() * m);
}

SemiNmfResult semi_nmf(const Eigen::MatrixXd& m, int k, int iters,
                       const std::optional<Eigen::MatrixXd>& h0, std::uint64_t seed) {
    const int n = static_cast<int>(m.rows());
    const int d = static_cast<int>(m.cols());
    if (k < 1 || k > std::min(n, d)) throw InvalidInput("semi_nmf: k must be in [1, min(N, d)]");
    if (iters < 1) throw InvalidInput("semi_nmf: iters must be >= 1");

    SemiNmfResult res;
    if (h0) {
        if (h0->rows() != n || h0->cols() != k) throw ShapeMismatch("semi_nmf: h0 has wrong shape");
        if ((h0->array() < 0.0).any()) throw InvalidInput("semi_nmf: h0 has negative entries");
        res.h = *h0;
    } else {
        res.h = kmeans(m, k, 10, seed).assignments.array() + 0.2;
    }

    bool warned_dead = false;
    res.objective_trace.reserve(static_cast<size_t>(iters));
    for (int it = 0; it < iters; ++it) {
        res.f = least_squares_factor(res.h, m);

        const Eigen::MatrixXd mft = m * res.f.transpose();            // N x K
        const Eigen::MatrixXd fft = res.f * res.f.transpose();        // K x K
        const Eigen::MatrixXd mft_p = mft.cwiseMax(0.0);
        const Eigen::MatrixXd mft_n = (-mft).cwiseMax(0.0);
        const Eigen::MatrixXd fft_p = fft.cwiseMax(0.0);
        const Eigen::MatrixXd fft_n = (-fft).cwiseMax(0.0);
        const Eigen::MatrixXd num = mft_p + res.h * fft_n;
        const Eigen::MatrixXd den = (mft_n + res.h * fft_p).cwiseMax(1e-12);
        res.h = res.h.cwiseProduct((num.cwiseQuotient(den)).cwiseSqrt());

        res.objective_trace.push_back((m - res.h * res.f).squaredNorm());

        if (!warned_dead) {
            for (int c = 0; c < k; ++c) {
                if ((res.h.col(c).array() < 1e-12).all()) {
                    std::cerr << "semi_nmf: warning: column " << c << " died at iteration " << it
                              << "\n";
                    warned_dead = true;
                    break;
                }
            }
        }
    }
    return res;
}

}  // namespace nmdf
