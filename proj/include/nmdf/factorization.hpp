#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nmdf/euclid_factor.hpp"
#include "nmdf/manifold.hpp"

namespace nmdf {

/// Result of a factorization run: nonnegative coefficients H, tangent factor
/// coordinates F (in orthonormal_basis(q) order), the lifted tangent factors
/// Xi^k, and the rendered manifold-valued factors Y^k.
struct Factorization {
    Eigen::MatrixXd h;  // N x K, entrywise >= 0
    Eigen::MatrixXd f;  // K x d
    Point q;
    std::vector<Tangent> xi;
    std::vector<Point> y;
    std::vector<double> objective_trace;

    std::string method;  // "t-nmdf" or "cc-nmdf"
    int rank = 0;
    std::uint64_t seed = 0;
    double delta = 0.0;
    int max_iter = 0;
    int max_sub_iter = 0;
};

/// Per-data-point curvature frames in compact block form. For each data point
/// i the frame diagonalizes Theta -> R_q(Theta, log_q x^i) log_q x^i;
/// `data_coords` holds the frame coordinates of log_q x^i and the overlap
/// blocks hold (phi^j, Theta^{(i),l})_q restricted to one power component
/// (the cross-component overlaps vanish). Flat workspaces keep no blocks: the
/// frame is the basis itself.
struct CCWorkspace {
    Point q;
    int n_data = 0;
    int dim = 0;
    int n_comp = 1;
    int comp_dim = 0;
    bool flat = true;

    Eigen::MatrixXd data_coords;  // N x d
    Eigen::MatrixXd kappas;       // N x d
    Eigen::MatrixXd beta_sq;      // N x d
    std::vector<Eigen::MatrixXd> overlap_blocks;  // N * n_comp, each comp_dim x comp_dim
    std::vector<Eigen::MatrixXd> frame_u;         // N * n_comp eigenvector matrices

    const Eigen::MatrixXd& block(int i, int c) const {
        return overlap_blocks[static_cast<size_t>(i) * static_cast<size_t>(n_comp) +
                              static_cast<size_t>(c)];
    }
    /// (phi^j, Theta^{(i),l})_q, resolving the block structure.
    double overlap(int i, int j, int l) const;
    /// Materializes the i-th curvature frame.
    CurvatureFrame frame(int i) const;
};

CCWorkspace build_workspace(const std::vector<Point>& data, const Point& q);

/// Curvature corrected approximation error
///   sum_i sum_l beta(kappa_{i,l})^2 ((sum_k H_{ik} Xi^k - log_q x^i), Theta^{(i),l})_q^2
/// evaluated in frame coordinates.
double cc_objective(const Eigen::MatrixXd& h, const Eigen::MatrixXd& f, const CCWorkspace& w);

/// Solves the normal equations of the weighted least-squares factor problem by
/// conjugate gradient on the implicitly applied PSD operator, Tikhonov-
/// regularized with `reg` (default 1e-10 * trace(A)/(K d)). The dense operator
/// is materialized only when K*d <= 4096. CG tolerance 1e-10 (relative),
/// at most 10*K*d iterations; a stalled solve throws SolverFailure.
Eigen::MatrixXd update_factors(const Eigen::MatrixXd& h, const CCWorkspace& w,
                               std::optional<double> reg = std::nullopt);

/// One multiplicative KKT step on the coefficients. Per data point i, with
/// g_i(l, k) = (Xi^k, Theta^{(i),l})_q, the objective restricted to row i is
/// the quadratic H_i S_i H_i^T - 2 V_i H_i^T with PSD Gram
/// S_i = g_i^T diag(beta^2) g_i and data term
/// V_{ik} = sum_l beta^2 (log_q x^i, Theta^{(i),l}) g_i(l, k); the step
///   H_i <- H_i .* sqrt((V_i^+ + H_i S_i^- + eps) ./ (V_i^- + H_i S_i^+ + eps)),
/// eps = 1e-12, descends the objective (the semi-NMF auxiliary-function
/// argument applies row-wise) and fixes exactly the KKT points. On flat
/// workspaces it coincides with the semi-NMF coefficient step.
Eigen::MatrixXd update_coefficients(const Eigen::MatrixXd& h, const Eigen::MatrixXd& f,
                                    const CCWorkspace& w);

struct InitCc {
    Eigen::MatrixXd h0;  // N x K, strictly positive, rows sum to 1
    Eigen::MatrixXd f0;  // K x d centroid coordinates
};

/// Tangent-space K-means, then delta-relaxation: one-hot assignments with
/// zeros replaced by delta and rows normalized to sum to one.
InitCc init_cc(const std::vector<Point>& data, const Point& q, int k, double delta,
               std::uint64_t seed, int kmeans_restarts = 10);

struct CcNmdfParams {
    double delta = 0.1;
    int max_iter = 50;
    int max_sub_iter = 5;
    std::uint64_t seed = 0;
    int kmeans_restarts = 10;
};

/// Curvature corrected nonnegative manifold data factorization: init_cc, then
/// max_iter rounds of one factor update followed by max_sub_iter coefficient
/// updates, recording cc_objective after every round. Runs the full iteration
/// budget; there is no early stopping.
Factorization cc_nmdf(const std::vector<Point>& data, const Point& q, int k,
                      const CcNmdfParams& params = {});

/// Tangent space factorization: semi-NMF of the coordinate matrix, lifted back
/// to tangent factors, with the same rendering correction as cc_nmdf.
Factorization t_nmdf(const std::vector<Point>& data, const Point& q, int k, int iters = 50,
                     std::uint64_t seed = 0);

/// Cancellation-corrected coefficients:
///   Hhat_{ik} = H_{ik} + sum_{b != k} H_{ib} min(0, (Xi^b, Xi^k)_q) / ||Xi^k||_q^2.
Eigen::MatrixXd effective_coordinates(const Eigen::MatrixXd& h, const std::vector<Tangent>& xi,
                                      const Point& q);

/// Y^k = exp_q(c_k Xi^k) with c_k = max(0, max_i Hhat_{ik}); a negative max is
/// clamped to zero with a warning.
std::vector<Point> manifold_factors(const Eigen::MatrixXd& h_eff, const std::vector<Tangent>& xi,
                                    const Point& q);

/// Recomputes xi and Y from (h, f, q): lifts the factor coordinates and
/// applies the effective-coordinate rendering correction. Used after loading
/// a serialized factorization, which stores only H, F and the base point.
void rebuild_derived(Factorization& fac);

struct BasepointCheck {
    bool ok = false;
    double min_inner = 0.0;
};

/// Full O(N^2) scan of pairwise inner products of the log-mapped data;
/// ok when the minimum is >= -1e-12.
BasepointCheck verify_basepoint(const std::vector<Point>& data, const Point& q);

}  // namespace nmdf
