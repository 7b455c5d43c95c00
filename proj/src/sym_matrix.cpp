#include "nmdf/sym_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nmdf {

SymMatrix::SymMatrix(int n) : n_(n), a_(static_cast<size_t>(packed_size(n)), 0.0) {
    if (n < 1) throw InvalidInput("SymMatrix: order must be >= 1");
}

SymMatrix SymMatrix::identity(int n) {
    SymMatrix m(n);
    for (int i = 0; i < n; ++i) m.set(i, i, 1.0);
    return m;
}

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& d) {
    SymMatrix m(static_cast<int>(d.size()));
    for (int i = 0; i < d.size(); ++i) m.set(i, i, d(i));
    return m;
}

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw InvalidInput("SymMatrix::from_dense: matrix not square");
    SymMatrix out(static_cast<int>(m.rows()));
    for (int i = 0; i < m.rows(); ++i)
        for (int j = i; j < m.cols(); ++j) out.set(i, j, 0.5 * (m(i, j) + m(j, i)));
    return out;
}

SymMatrix SymMatrix::from_packed(int n, std::vector<double> upper) {
    if (static_cast<int>(upper.size()) != packed_size(n))
        throw InvalidInput("SymMatrix::from_packed: wrong number of entries");
    SymMatrix out(n);
    out.a_ = std::move(upper);
    return out;
}

Eigen::MatrixXd SymMatrix::dense() const {
    Eigen::MatrixXd m(n_, n_);
    for (int i = 0; i < n_; ++i)
        for (int j = i; j < n_; ++j) m(i, j) = m(j, i) = (*this)(i, j);
    return m;
}

bool SymMatrix::is_finite() const {
    return std::all_of(a_.begin(), a_.end(), [](double v) { return std::isfinite(v); });
}

double SymMatrix::max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
    if (o.n_ != n_) throw ShapeMismatch("SymMatrix: order mismatch");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
    if (o.n_ != n_) throw ShapeMismatch("SymMatrix: order mismatch");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
    for (double& v : a_) v *= s;
    return *this;
}

double pd_tol(double lambda_max) { return 1e-12 * std::max(1.0, lambda_max); }

namespace {

// One cyclic Jacobi sweep over the strict upper triangle in row-major order.
// Returns the largest |off-diagonal| seen before rotating it away.
double jacobi_sweep(Eigen::MatrixXd& m, Eigen::MatrixXd& q) {
    const int n = static_cast<int>(m.rows());
    double largest = 0.0;
    for (int p = 0; p < n - 1; ++p) {
        for (int r = p + 1; r < n; ++r) {
            const double apq = m(p, r);
            largest = std::max(largest, std::abs(apq));
            if (apq == 0.0) continue;
            const double theta = (m(r, r) - m(p, p)) / (2.0 * apq);
            const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                             (std::abs(theta) + std::sqrt(theta * theta + 1.0));
            const double c = 1.0 / std::sqrt(t * t + 1.0);
            const double s = t * c;
            for (int k = 0; k < n; ++k) {
                const double mkp = m(k, p), mkr = m(k, r);
                m(k, p) = c * mkp - s * mkr;
                m(k, r) = s * mkp + c * mkr;
            }
            for (int k = 0; k < n; ++k) {
                const double mpk = m(p, k), mrk = m(r, k);
                m(p, k) = c * mpk - s * mrk;
                m(r, k) = s * mpk + c * mrk;
            }
            for (int k = 0; k < n; ++k) {
                const double qkp = q(k, p), qkr = q(k, r);
                q(k, p) = c * qkp - s * qkr;
                q(k, r) = s * qkp + c * qkr;
            }
        }
    }
    return largest;
}

}  // namespace

EigDecomp eig_sym(const SymMatrix& a) {
    if (!a.is_finite()) throw InvalidInput("eig_sym: non-finite input");
    const int n = a.order();
    Eigen::MatrixXd m = a.dense();
    Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);

    const double tol = 1e-15 * std::max(1.0, a.max_abs());
    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (jacobi_sweep(m, q) <= tol) break;
    }

    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return m(i, i) > m(j, j); });

    EigDecomp out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (int c = 0; c < n; ++c) {
        out.values(c) = m(order[c], order[c]);
        out.vectors.col(c) = q.col(order[c]);
        // Sign convention: first component of largest magnitude is nonnegative.
        int arg = 0;
        double best = std::abs(out.vectors(0, c));
        for (int r = 1; r < n; ++r) {
            const double v = std::abs(out.vectors(r, c));
            if (v > best) {
                best = v;
                arg = r;
            }
        }
        if (out.vectors(arg, c) < 0.0) out.vectors.col(c) = -out.vectors.col(c);
    }
    return out;
}

SymMatrix matfun_spd(const SymMatrix& a, MatFun f) {
    EigDecomp e = eig_sym(a);
    const int n = a.order();
    if (f != MatFun::Exp) {
        const double tol = pd_tol(e.values(0));
        if (e.values(n - 1) <= tol)
            throw NotPositiveDefinite("matfun_spd: eigenvalue " +
                                      std::to_string(e.values(n - 1)) +
                                      " at or below pd_tol " + std::to_string(tol));
    }
    Eigen::VectorXd fv(n);
    for (int i = 0; i < n; ++i) {
        switch (f) {
            case MatFun::Sqrt: fv(i) = std::sqrt(e.values(i)); break;
            case MatFun::InvSqrt: fv(i) = 1.0 / std::sqrt(e.values(i)); break;
            case MatFun::Log: fv(i) = std::log(e.values(i)); break;
            case MatFun::Exp: fv(i) = std::exp(e.values(i)); break;
        }
    }
    const Eigen::MatrixXd out = e.vectors * fv.asDiagonal() * e.vectors.transpose();
    return SymMatrix::from_dense(out);
}

std::vector<SymMatrix> sym_basis(int n) {
    if (n < 1) throw InvalidInput("sym_basis: n must be >= 1");
    std::vector<SymMatrix> basis;
    basis.reserve(static_cast<size_t>(SymMatrix::packed_size(n)));
    for (int a = 0; a < n; ++a) {
        SymMatrix e(n);
        e.set(a, a, 1.0);
        basis.push_back(std::move(e));
    }
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            SymMatrix e(n);
            e.set(a, b, inv_sqrt2);
            basis.push_back(std::move(e));
        }
    }
    return basis;
}

}  // namespace nmdf
