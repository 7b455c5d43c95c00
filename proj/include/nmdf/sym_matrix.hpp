#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nmdf/errors.hpp"

namespace nmdf {

/// Dense real symmetric matrix storing only the upper triangle (row-major),
/// so reconstructed matrices satisfy A = A^T exactly.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(int n);

    static SymMatrix identity(int n);
    static SymMatrix diagonal(const Eigen::VectorXd& d);
    /// Packs (m + m^T)/2 of a square matrix.
    static SymMatrix from_dense(const Eigen::MatrixXd& m);
    static SymMatrix from_packed(int n, std::vector<double> upper);

    int order() const { return n_; }
    static int packed_size(int n) { return n * (n + 1) / 2; }

    double operator()(int i, int j) const { return a_[idx(i, j)]; }
    void set(int i, int j, double v) { a_[idx(i, j)] = v; }
    void add(int i, int j, double v) { a_[idx(i, j)] += v; }

    const std::vector<double>& packed() const { return a_; }
    std::vector<double>& packed() { return a_; }

    Eigen::MatrixXd dense() const;
    bool is_finite() const;
    double max_abs() const;

    SymMatrix& operator+=(const SymMatrix& o);
    SymMatrix& operator-=(const SymMatrix& o);
    SymMatrix& operator*=(double s);
    friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
    friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
    friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
    friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

    bool operator==(const SymMatrix& o) const = default;

private:
    int idx(int i, int j) const {
        if (i > j) std::swap(i, j);
        return i * n_ - i * (i - 1) / 2 + (j - i);
    }

    int n_ = 0;
    std::vector<double> a_;
};

/// Eigendecomposition of a symmetric matrix. Eigenvalues are sorted
/// descending; each eigenvector's first component of largest magnitude is
/// nonnegative, which makes the output reproducible across runs.
struct EigDecomp {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;  // columns matched to values
};

/// Deterministic cyclic-Jacobi eigendecomposition.
EigDecomp eig_sym(const SymMatrix& a);

enum class MatFun { Sqrt, InvSqrt, Log, Exp };

/// Spectral matrix function Q f(diag(lambda)) Q^T. Sqrt/InvSqrt/Log require a
/// positive definite input (eigenvalues above pd_tol); Exp accepts any
/// symmetric matrix.
SymMatrix matfun_spd(const SymMatrix& a, MatFun f);

/// Relative positive-definiteness threshold used throughout: 1e-12 * max(1, lambda_max).
double pd_tol(double lambda_max);

/// Orthonormal basis of the n x n symmetric matrices under the Frobenius
/// inner product: E_aa = e_a e_a^T first (a ascending), then
/// E_ab = (e_a e_b^T + e_b e_a^T)/sqrt(2) for a < b in row-major order.
std::vector<SymMatrix> sym_basis(int n);

}  // namespace nmdf
