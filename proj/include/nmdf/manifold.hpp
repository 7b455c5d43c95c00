#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nmdf/sym_matrix.hpp"

namespace nmdf {

enum class ManifoldKind { Euclidean, Spd, Power };

/// Algebraic description of the data domain: Euclidean(d), SPD(n) with the
/// affine-invariant metric, or an m-fold power of one of those.
class Manifold {
public:
    /// Placeholder descriptor (Euclidean(1)); reassign before use.
    Manifold() : Manifold(ManifoldKind::Euclidean, ManifoldKind::Euclidean, 1, 1) {}

    static Manifold euclidean(int d);
    static Manifold spd(int n);
    static Manifold power(const Manifold& base, int m);

    ManifoldKind kind() const { return kind_; }
    /// Intrinsic dimension: d, n(n+1)/2, or m * dim(base).
    int dim() const { return copies_ * component_dim(); }
    int copies() const { return copies_; }
    ManifoldKind component_kind() const { return comp_kind_; }
    int component_dim() const;
    /// Matrix order of the SPD component; throws if the component is Euclidean.
    int spd_order() const;
    bool flat() const { return comp_kind_ == ManifoldKind::Euclidean; }

    bool operator==(const Manifold&) const = default;

private:
    Manifold(ManifoldKind kind, ManifoldKind comp_kind, int param, int copies)
        : kind_(kind), comp_kind_(comp_kind), param_(param), copies_(copies) {}

    ManifoldKind kind_;
    ManifoldKind comp_kind_;  // same as kind_ unless Power
    int param_;               // d of a Euclidean component, n of an SPD component
    int copies_;              // 1 unless Power
};

/// A point on a manifold. Euclidean-family payloads live in `vec` (length
/// dim); SPD-family payloads live in `mats` (one positive definite matrix per
/// component).
struct Point {
    Manifold manifold;
    Eigen::VectorXd vec;
    std::vector<SymMatrix> mats;
};

/// A tangent vector anchored at `at`; payload shapes match the base point but
/// SPD-family entries are unconstrained symmetric matrices.
struct Tangent {
    Point at;
    Eigen::VectorXd vec;
    std::vector<SymMatrix> mats;
};

Point point_from_vec(const Manifold& m, Eigen::VectorXd v);
/// Checks positive definiteness of every component.
Point point_from_mats(const Manifold& m, std::vector<SymMatrix> mats);
Tangent tangent_from_vec(const Point& at, Eigen::VectorXd v);
Tangent tangent_from_mats(const Point& at, std::vector<SymMatrix> mats);
Tangent zero_tangent(const Point& at);

bool same_point(const Point& a, const Point& b);

/// Per-component q^{1/2} and q^{-1/2}, shared by everything that repeatedly
/// whitens tangents at a fixed base point. Empty for flat manifolds.
struct BasePointCache {
    std::vector<Eigen::MatrixXd> shalf;
    std::vector<Eigen::MatrixXd> sinvhalf;
};
BasePointCache make_base_cache(const Point& q);

Point exp_map(const Point& q, const Tangent& v);
Point exp_map(const Point& q, const Tangent& v, const BasePointCache& cache);
Tangent log_map(const Point& q, const Point& x);
Tangent log_map(const Point& q, const Point& x, const BasePointCache& cache);
double inner(const Point& q, const Tangent& u, const Tangent& v);
double inner(const Point& q, const Tangent& u, const Tangent& v, const BasePointCache& cache);
double tangent_norm(const Point& q, const Tangent& v);
double dist(const Point& x, const Point& y);

/// Orthonormal basis of T_q M under inner(q,.,.): the canonical basis for
/// Euclidean, q^{1/2} E q^{1/2} over sym_basis for SPD, per-component blocks
/// in component-major order for powers. The ordering is part of the public
/// contract; coordinate matrices refer to it.
std::vector<Tangent> orthonormal_basis(const Point& q);

/// Coordinates of v in orthonormal_basis(q) order, computed without
/// materializing the basis.
Eigen::VectorXd tangent_to_coords(const Point& q, const Tangent& v);
Eigen::VectorXd tangent_to_coords(const Point& q, const Tangent& v, const BasePointCache& cache);
Tangent tangent_from_coords(const Point& q, const Eigen::VectorXd& coords);
Tangent tangent_from_coords(const Point& q, const Eigen::VectorXd& coords, const BasePointCache& cache);

Tangent tangent_add(const Tangent& a, const Tangent& b);
Tangent tangent_scale(const Tangent& a, double s);

/// Curvature weight: sinh(sqrt(-k))/sqrt(-k) for k < 0, 1 at 0,
/// sin(sqrt(k))/sqrt(k) for k > 0, with a series fallback near 0.
double beta(double kappa);

/// Orthonormal tangent frame diagonalizing Theta -> R_q(Theta, v) v, with the
/// curvature-operator eigenvalues and their beta(kappa)^2 weights.
struct CurvatureFrame {
    Point at;
    std::vector<Tangent> vectors;
    Eigen::VectorXd kappas;
    Eigen::VectorXd beta_sq;
};
CurvatureFrame curvature_frame(const Point& q, const Tangent& v);

/// Frame data of one SPD component in whitened coordinates (at the identity),
/// for w = q^{-1/2} v q^{-1/2}. `overlap(j, l)` is the Frobenius inner product
/// of sym_basis element j with the frame element U E_l U^T; `coords(l)` is the
/// frame coordinate of w itself.
struct SpdFrameData {
    Eigen::MatrixXd u;
    Eigen::VectorXd theta;
    Eigen::VectorXd kappas;
    Eigen::VectorXd beta_sq;
    Eigen::MatrixXd overlap;
    Eigen::VectorXd coords;
};
SpdFrameData spd_frame_data(const SymMatrix& w);

struct BarycenterResult {
    Point point;
    bool converged = false;
    int iterations = 0;
    double mean_log_norm = 0.0;
};

/// Karcher-mean fixed-point iteration q <- exp_q(mean of log_q x^i), started
/// from data[0]. Non-convergence is reported via the flag, not an exception.
BarycenterResult barycenter(const std::vector<Point>& data, double tol = 1e-9, int max_iter = 100);

}  // namespace nmdf
