#include "nmdf/manifold.hpp"

#include <cmath>

namespace nmdf {

Manifold Manifold::euclidean(int d) {
    if (d < 1) throw InvalidInput("Manifold::euclidean: d must be >= 1");
    return Manifold(ManifoldKind::Euclidean, ManifoldKind::Euclidean, d, 1);
}

Manifold Manifold::spd(int n) {
    if (n < 1) throw InvalidInput("Manifold::spd: n must be >= 1");
    return Manifold(ManifoldKind::Spd, ManifoldKind::Spd, n, 1);
}

Manifold Manifold::power(const Manifold& base, int m) {
    if (base.kind_ == ManifoldKind::Power)
        throw InvalidInput("Manifold::power: nesting depth above a power manifold is not supported");
    if (m < 1) throw InvalidInput("Manifold::power: m must be >= 1");
    return Manifold(ManifoldKind::Power, base.kind_, base.param_, m);
}

int Manifold::component_dim() const {
    return comp_kind_ == ManifoldKind::Euclidean ? param_ : SymMatrix::packed_size(param_);
}

int Manifold::spd_order() const {
    if (comp_kind_ != ManifoldKind::Spd)
        throw InvalidInput("Manifold::spd_order: component is not SPD");
    return param_;
}

namespace {

void check_common(const Manifold& a, const Manifold& b, const char* what) {
    if (!(a == b)) throw ShapeMismatch(std::string(what) + ": manifold mismatch");
}

void check_at(const Point& q, const Tangent& v, const char* what) {
    check_common(q.manifold, v.at.manifold, what);
    if (!same_point(q, v.at))
        throw ShapeMismatch(std::string(what) + ": tangent is anchored at a different point");
}

// Coordinates of a symmetric matrix in sym_basis order: diagonal entries
// first, then sqrt(2) * upper off-diagonals row-major.
Eigen::VectorXd sym_to_coords(const Eigen::MatrixXd& w) {
    const int n = static_cast<int>(w.rows());
    Eigen::VectorXd c(SymMatrix::packed_size(n));
    for (int a = 0; a < n; ++a) c(a) = w(a, a);
    const double sqrt2 = std::sqrt(2.0);
    int l = n;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) c(l++) = sqrt2 * 0.5 * (w(a, b) + w(b, a));
    return c;
}

SymMatrix coords_to_sym(int n, const Eigen::VectorXd& c) {
    SymMatrix w(n);
    for (int a = 0; a < n; ++a) w.set(a, a, c(a));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    int l = n;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) w.set(a, b, c(l++) * inv_sqrt2);
    return w;
}

Eigen::MatrixXd whiten(const Eigen::MatrixXd& sinvhalf, const SymMatrix& v) {
    return sinvhalf * v.dense() * sinvhalf;
}

void check_finite_mats(const std::vector<SymMatrix>& mats, const char* what) {
    for (const SymMatrix& m : mats)
        if (!m.is_finite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

}  // namespace

Point point_from_vec(const Manifold& m, Eigen::VectorXd v) {
    if (!m.flat()) throw ShapeMismatch("point_from_vec: manifold payload is matrix-valued");
    if (v.size() != m.dim()) throw ShapeMismatch("point_from_vec: wrong payload length");
    if (!v.allFinite()) throw InvalidInput("point_from_vec: non-finite entries");
    return Point{m, std::move(v), {}};
}

Point point_from_mats(const Manifold& m, std::vector<SymMatrix> mats) {
    if (m.flat()) throw ShapeMismatch("point_from_mats: manifold payload is vector-valued");
    if (static_cast<int>(mats.size()) != m.copies())
        throw ShapeMismatch("point_from_mats: wrong number of components");
    const int n = m.spd_order();
    for (const SymMatrix& c : mats) {
        if (c.order() != n) throw ShapeMismatch("point_from_mats: wrong component order");
        EigDecomp e = eig_sym(c);
        if (e.values(n - 1) <= pd_tol(e.values(0)))
            throw NotPositiveDefinite("point_from_mats: component is not positive definite");
    }
    return Point{m, {}, std::move(mats)};
}

Tangent tangent_from_vec(const Point& at, Eigen::VectorXd v) {
    if (!at.manifold.flat()) throw ShapeMismatch("tangent_from_vec: manifold payload is matrix-valued");
    if (v.size() != at.manifold.dim()) throw ShapeMismatch("tangent_from_vec: wrong payload length");
    return Tangent{at, std::move(v), {}};
}

Tangent tangent_from_mats(const Point& at, std::vector<SymMatrix> mats) {
    if (at.manifold.flat()) throw ShapeMismatch("tangent_from_mats: manifold payload is vector-valued");
    if (static_cast<int>(mats.size()) != at.manifold.copies())
        throw ShapeMismatch("tangent_from_mats: wrong number of components");
    for (const SymMatrix& c : mats)
        if (c.order() != at.manifold.spd_order())
            throw ShapeMismatch("tangent_from_mats: wrong component order");
    return Tangent{at, {}, std::move(mats)};
}

Tangent zero_tangent(const Point& at) {
    if (at.manifold.flat()) return Tangent{at, Eigen::VectorXd::Zero(at.manifold.dim()), {}};
    std::vector<SymMatrix> mats(static_cast<size_t>(at.manifold.copies()),
                                SymMatrix(at.manifold.spd_order()));
    return Tangent{at, {}, std::move(mats)};
}

bool same_point(const Point& a, const Point& b) {
    if (!(a.manifold == b.manifold)) return false;
    if (a.manifold.flat()) return a.vec == b.vec;
    return a.mats == b.mats;
}

BasePointCache make_base_cache(const Point& q) {
    BasePointCache cache;
    if (q.manifold.flat()) return cache;
    cache.shalf.reserve(q.mats.size());
    cache.sinvhalf.reserve(q.mats.size());
    for (const SymMatrix& c : q.mats) {
        cache.shalf.push_back(matfun_spd(c, MatFun::Sqrt).dense());
        cache.sinvhalf.push_back(matfun_spd(c, MatFun::InvSqrt).dense());
    }
    return cache;
}

Point exp_map(const Point& q, const Tangent& v) { return exp_map(q, v, make_base_cache(q)); }

Point exp_map(const Point& q, const Tangent& v, const BasePointCache& cache) {
    check_at(q, v, "exp_map");
    if (q.manifold.flat()) return Point{q.manifold, q.vec + v.vec, {}};
    std::vector<SymMatrix> out;
    out.reserve(q.mats.size());
    for (size_t c = 0; c < q.mats.size(); ++c) {
        const SymMatrix w = SymMatrix::from_dense(whiten(cache.sinvhalf[c], v.mats[c]));
        const SymMatrix e = matfun_spd(w, MatFun::Exp);
        out.push_back(SymMatrix::from_dense(cache.shalf[c] * e.dense() * cache.shalf[c]));
    }
    check_finite_mats(out, "exp_map: non-finite result (tangent too large)");
    return Point{q.manifold, {}, std::move(out)};
}

Tangent log_map(const Point& q, const Point& x) { return log_map(q, x, make_base_cache(q)); }

Tangent log_map(const Point& q, const Point& x, const BasePointCache& cache) {
    check_common(q.manifold, x.manifold, "log_map");
    if (q.manifold.flat()) return Tangent{q, x.vec - q.vec, {}};
    std::vector<SymMatrix> out;
    out.reserve(q.mats.size());
    for (size_t c = 0; c < q.mats.size(); ++c) {
        const SymMatrix a = SymMatrix::from_dense(whiten(cache.sinvhalf[c], x.mats[c]));
        const SymMatrix l = matfun_spd(a, MatFun::Log);
        out.push_back(SymMatrix::from_dense(cache.shalf[c] * l.dense() * cache.shalf[c]));
    }
    return Tangent{q, {}, std::move(out)};
}

double inner(const Point& q, const Tangent& u, const Tangent& v) {
    return inner(q, u, v, make_base_cache(q));
}

double inner(const Point& q, const Tangent& u, const Tangent& v, const BasePointCache& cache) {
    check_at(q, u, "inner");
    check_at(q, v, "inner");
    if (q.manifold.flat()) return u.vec.dot(v.vec);
    double s = 0.0;
    for (size_t c = 0; c < q.mats.size(); ++c) {
        const Eigen::MatrixXd wu = whiten(cache.sinvhalf[c], u.mats[c]);
        const Eigen::MatrixXd wv = whiten(cache.sinvhalf[c], v.mats[c]);
        s += wu.cwiseProduct(wv).sum();
    }
    return s;
}

double tangent_norm(const Point& q, const Tangent& v) {
    return std::sqrt(std::max(0.0, inner(q, v, v)));
}

double dist(const Point& x, const Point& y) {
    check_common(x.manifold, y.manifold, "dist");
    if (x.manifold.flat()) return (x.vec - y.vec).norm();
    double sq = 0.0;
    for (size_t c = 0; c < x.mats.size(); ++c) {
        const SymMatrix xinvh = matfun_spd(x.mats[c], MatFun::InvSqrt);
        const SymMatrix a = SymMatrix::from_dense(xinvh.dense() * y.mats[c].dense() * xinvh.dense());
        EigDecomp e = eig_sym(a);
        const int n = a.order();
        if (e.values(n - 1) <= pd_tol(e.values(0)))
            throw NotPositiveDefinite("dist: whitened argument is not positive definite");
        for (int i = 0; i < n; ++i) {
            const double l = std::log(e.values(i));
            sq += l * l;
        }
    }
    return std::sqrt(sq);
}

std::vector<Tangent> orthonormal_basis(const Point& q) {
    std::vector<Tangent> basis;
    const int d = q.manifold.dim();
    basis.reserve(static_cast<size_t>(d));
    if (q.manifold.flat()) {
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
            e(j) = 1.0;
            basis.push_back(Tangent{q, std::move(e), {}});
        }
        return basis;
    }
    const BasePointCache cache = make_base_cache(q);
    const int n = q.manifold.spd_order();
    const std::vector<SymMatrix> eb = sym_basis(n);
    for (int c = 0; c < q.manifold.copies(); ++c) {
        for (const SymMatrix& e : eb) {
            std::vector<SymMatrix> mats(q.mats.size(), SymMatrix(n));
            mats[static_cast<size_t>(c)] =
                SymMatrix::from_dense(cache.shalf[c] * e.dense() * cache.shalf[c]);
            basis.push_back(Tangent{q, {}, std::move(mats)});
        }
    }
    return basis;
}

Eigen::VectorXd tangent_to_coords(const Point& q, const Tangent& v) {
    return tangent_to_coords(q, v, make_base_cache(q));
}

Eigen::VectorXd tangent_to_coords(const Point& q, const Tangent& v, const BasePointCache& cache) {
    check_at(q, v, "tangent_to_coords");
    if (q.manifold.flat()) return v.vec;
    const int d0 = q.manifold.component_dim();
    Eigen::VectorXd coords(q.manifold.dim());
    for (size_t c = 0; c < q.mats.size(); ++c)
        coords.segment(static_cast<int>(c) * d0, d0) = sym_to_coords(whiten(cache.sinvhalf[c], v.mats[c]));
    return coords;
}

Tangent tangent_from_coords(const Point& q, const Eigen::VectorXd& coords) {
    return tangent_from_coords(q, coords, make_base_cache(q));
}

Tangent tangent_from_coords(const Point& q, const Eigen::VectorXd& coords, const BasePointCache& cache) {
    if (coords.size() != q.manifold.dim())
        throw ShapeMismatch("tangent_from_coords: wrong coordinate length");
    if (q.manifold.flat()) return Tangent{q, coords, {}};
    const int n = q.manifold.spd_order();
    const int d0 = q.manifold.component_dim();
    std::vector<SymMatrix> mats;
    mats.reserve(q.mats.size());
    for (int c = 0; c < q.manifold.copies(); ++c) {
        const SymMatrix s = coords_to_sym(n, coords.segment(c * d0, d0));
        mats.push_back(SymMatrix::from_dense(cache.shalf[c] * s.dense() * cache.shalf[c]));
    }
    return Tangent{q, {}, std::move(mats)};
}

Tangent tangent_add(const Tangent& a, const Tangent& b) {
    check_at(a.at, b, "tangent_add");
    Tangent out = a;
    if (a.at.manifold.flat()) {
        out.vec += b.vec;
    } else {
        for (size_t c = 0; c < out.mats.size(); ++c) out.mats[c] += b.mats[c];
    }
    return out;
}

Tangent tangent_scale(const Tangent& a, double s) {
    Tangent out = a;
    if (a.at.manifold.flat()) {
        out.vec *= s;
    } else {
        for (SymMatrix& m : out.mats) m *= s;
    }
    return out;
}

double beta(double kappa) {
    if (!std::isfinite(kappa)) throw InvalidInput("beta: non-finite curvature");
    if (std::abs(kappa) < 1e-8) return 1.0 - kappa / 6.0 + kappa * kappa / 120.0;
    if (kappa < 0.0) {
        const double r = std::sqrt(-kappa);
        return std::sinh(r) / r;
    }
    const double r = std::sqrt(kappa);
    return std::sin(r) / r;
}

SpdFrameData spd_frame_data(const SymMatrix& w) {
    const int n = w.order();
    const int d0 = SymMatrix::packed_size(n);
    SpdFrameData fd;
    EigDecomp e = eig_sym(w);
    fd.u = e.vectors;
    fd.theta = e.values;

    fd.kappas = Eigen::VectorXd::Zero(d0);
    fd.beta_sq = Eigen::VectorXd::Ones(d0);
    int l = n;
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const double diff = fd.theta(a) - fd.theta(b);
            fd.kappas(l) = -0.25 * diff * diff;
            const double bl = beta(fd.kappas(l));
            fd.beta_sq(l) = bl * bl;
            ++l;
        }
    }

    const std::vector<SymMatrix> eb = sym_basis(n);
    fd.overlap.resize(d0, d0);
    for (int j = 0; j < d0; ++j) {
        const Eigen::MatrixXd t = fd.u * eb[static_cast<size_t>(j)].dense() * fd.u.transpose();
        fd.overlap.col(j) = sym_to_coords(t);
    }
    fd.coords = sym_to_coords(fd.u.transpose() * w.dense() * fd.u);
    return fd;
}

CurvatureFrame curvature_frame(const Point& q, const Tangent& v) {
    check_at(q, v, "curvature_frame");
    const int d = q.manifold.dim();
    CurvatureFrame frame;
    frame.at = q;
    if (q.manifold.flat()) {
        frame.vectors = orthonormal_basis(q);
        frame.kappas = Eigen::VectorXd::Zero(d);
        frame.beta_sq = Eigen::VectorXd::Ones(d);
        return frame;
    }
    const BasePointCache cache = make_base_cache(q);
    const int n = q.manifold.spd_order();
    const int d0 = q.manifold.component_dim();
    const std::vector<SymMatrix> eb = sym_basis(n);
    frame.kappas.resize(d);
    frame.beta_sq.resize(d);
    frame.vectors.reserve(static_cast<size_t>(d));
    for (int c = 0; c < q.manifold.copies(); ++c) {
        const SymMatrix w = SymMatrix::from_dense(whiten(cache.sinvhalf[c], v.mats[c]));
        const SpdFrameData fd = spd_frame_data(w);
        frame.kappas.segment(c * d0, d0) = fd.kappas;
        frame.beta_sq.segment(c * d0, d0) = fd.beta_sq;
        for (int l = 0; l < d0; ++l) {
            const Eigen::MatrixXd t = fd.u * eb[static_cast<size_t>(l)].dense() * fd.u.transpose();
            std::vector<SymMatrix> mats(q.mats.size(), SymMatrix(n));
            mats[static_cast<size_t>(c)] =
                SymMatrix::from_dense(cache.shalf[c] * t * cache.shalf[c]);
            frame.vectors.push_back(Tangent{q, {}, std::move(mats)});
        }
    }
    return frame;
}

BarycenterResult barycenter(const std::vector<Point>& data, double tol, int max_iter) {
    if (data.empty()) throw InvalidInput("barycenter: empty dataset");
    for (const Point& x : data) check_common(data[0].manifold, x.manifold, "barycenter");

    BarycenterResult res;
    res.point = data[0];
    const double inv_n = 1.0 / static_cast<double>(data.size());
    for (int it = 1; it <= max_iter; ++it) {
        res.iterations = it;
        const BasePointCache cache = make_base_cache(res.point);
        Tangent mean = zero_tangent(res.point);
        for (const Point& x : data) mean = tangent_add(mean, log_map(res.point, x, cache));
        mean = tangent_scale(mean, inv_n);
        res.mean_log_norm = std::sqrt(std::max(0.0, inner(res.point, mean, mean, cache)));
        if (res.mean_log_norm <= tol) {
            res.converged = true;
            return res;
        }
        res.point = exp_map(res.point, mean, cache);
    }
    res.converged = false;
    return res;
}

}  // namespace nmdf
