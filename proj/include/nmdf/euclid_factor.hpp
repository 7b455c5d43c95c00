#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "nmdf/manifold.hpp"
#include "nmdf/rng.hpp"

namespace nmdf {

/// Identifier of the canonical orthonormal_basis ordering; stored with every
/// coordinate matrix so downstream consumers can detect mismatched lifts.
inline constexpr const char* kCanonicalBasisId = "component-major/sym-upper/v1";

/// Rows are the orthonormal-basis coordinates of log_q x^i.
struct CoordMatrix {
    Eigen::MatrixXd values;  // N x d
    Point basepoint;
    std::string basis_id = kCanonicalBasisId;
};

/// M_{ij} = (log_q x^i, phi_q^j)_q. Exact (bitwise x - q) on flat manifolds.
CoordMatrix coordinate_matrix(const std::vector<Point>& data, const Point& q);

struct KMeansResult {
    Eigen::MatrixXd assignments;  // N x K, one-hot rows
    Eigen::MatrixXd centroids;    // K x d
    double objective = 0.0;       // within-cluster sum of squares
};

/// Lloyd iterations, best of `restarts` seeded runs. Empty clusters are
/// re-seeded to the point farthest from its current centroid. Restart r uses
/// the engine seed mix_seed(seed, r).
KMeansResult kmeans(const Eigen::MatrixXd& m, int k, int restarts, std::uint64_t seed);

/// One Lloyd run from a Forgy initialization drawn with the given engine seed.
KMeansResult kmeans_single(const Eigen::MatrixXd& m, int k, std::uint64_t engine_seed);

struct SemiNmfResult {
    Eigen::MatrixXd h;  // N x K, entrywise >= 0
    Eigen::MatrixXd f;  // K x d
    std::vector<double> objective_trace;  // ||M - HF||_F^2 after each iteration
};

/// Semi-NMF M ~ HF with H >= 0: alternates the pseudoinverse least-squares
/// F-step with the multiplicative H-step
///   H <- H .* sqrt(((MF^T)^+ + H(FF^T)^-) ./ ((MF^T)^- + H(FF^T)^+)),
/// denominators floored at 1e-12. Default h0 is K-means assignments + 0.2.
SemiNmfResult semi_nmf(const Eigen::MatrixXd& m, int k, int iters,
                       const std::optional<Eigen::MatrixXd>& h0, std::uint64_t seed);

/// Pseudoinverse solve F = (H^T H)^+ H^T M with relative rank cutoff 1e-12.
Eigen::MatrixXd least_squares_factor(const Eigen::MatrixXd& h, const Eigen::MatrixXd& m);

}  // namespace nmdf
