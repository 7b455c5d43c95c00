#include "nmdf/factorization.hpp"

#include <cmath>
#include <functional>
#include <iostream>
#include <limits>

namespace nmdf {

double CCWorkspace::overlap(int i, int j, int l) const {
    if (flat) return j == l ? 1.0 : 0.0;
    const int cj = j / comp_dim;
    const int cl = l / comp_dim;
    if (cj != cl) return 0.0;
    return block(i, cj)(j % comp_dim, l % comp_dim);
}

CurvatureFrame CCWorkspace::frame(int i) const {
    CurvatureFrame fr;
    fr.at = q;
    fr.kappas = kappas.row(i).transpose();
    fr.beta_sq = beta_sq.row(i).transpose();
    if (flat) {
        fr.vectors = orthonormal_basis(q);
        return fr;
    }
    const BasePointCache cache = make_base_cache(q);
    const int n = q.manifold.spd_order();
    const std::vector<SymMatrix> eb = sym_basis(n);
    fr.vectors.reserve(static_cast<size_t>(dim));
    for (int c = 0; c < n_comp; ++c) {
        const Eigen::MatrixXd& u = frame_u[static_cast<size_t>(i) * static_cast<size_t>(n_comp) +
                                           static_cast<size_t>(c)];
        for (int l = 0; l < comp_dim; ++l) {
            const Eigen::MatrixXd t = u * eb[static_cast<size_t>(l)].dense() * u.transpose();
            std::vector<SymMatrix> mats(q.mats.size(), SymMatrix(n));
            mats[static_cast<size_t>(c)] =
                SymMatrix::from_dense(cache.shalf[c] * t * cache.shalf[c]);
            fr.vectors.push_back(Tangent{q, {}, std::move(mats)});
        }
    }
    return fr;
}

CCWorkspace build_workspace(const std::vector<Point>& data, const Point& q) {
    if (data.empty()) throw InvalidInput("build_workspace: empty dataset");
    CCWorkspace w;
    w.q = q;
    w.n_data = static_cast<int>(data.size());
    w.dim = q.manifold.dim();
    w.flat = q.manifold.flat();

    if (w.flat) {
        w.n_comp = 1;
        w.comp_dim = w.dim;
        w.data_coords = coordinate_matrix(data, q).values;
        w.kappas = Eigen::MatrixXd::Zero(w.n_data, w.dim);
        w.beta_sq = Eigen::MatrixXd::Ones(w.n_data, w.dim);
        return w;
    }

    w.n_comp = q.manifold.copies();
    w.comp_dim = q.manifold.component_dim();
    w.data_coords.resize(w.n_data, w.dim);
    w.kappas.resize(w.n_data, w.dim);
    w.beta_sq.resize(w.n_data, w.dim);
    w.overlap_blocks.reserve(static_cast<size_t>(w.n_data) * static_cast<size_t>(w.n_comp));
    w.frame_u.reserve(w.overlap_blocks.capacity());

    const BasePointCache cache = make_base_cache(q);
    for (int i = 0; i < w.n_data; ++i) {
        if (!(data[static_cast<size_t>(i)].manifold == q.manifold))
            throw ShapeMismatch("build_workspace: manifold mismatch");
        const Tangent v = log_map(q, data[static_cast<size_t>(i)], cache);
        for (int c = 0; c < w.n_comp; ++c) {
            const SymMatrix wmat = SymMatrix::from_dense(
                cache.sinvhalf[c] * v.mats[static_cast<size_t>(c)].dense() * cache.sinvhalf[c]);
            SpdFrameData fd = spd_frame_data(wmat);
            w.data_coords.row(i).segment(c * w.comp_dim, w.comp_dim) = fd.coords.transpose();
            w.kappas.row(i).segment(c * w.comp_dim, w.comp_dim) = fd.kappas.transpose();
            w.beta_sq.row(i).segment(c * w.comp_dim, w.comp_dim) = fd.beta_sq.transpose();
            w.overlap_blocks.push_back(std::move(fd.overlap));
            w.frame_u.push_back(std::move(fd.u));
        }
    }
    return w;
}

namespace {

void check_h_shape(const Eigen::MatrixXd& h, const CCWorkspace& w, const char* what) {
    if (h.rows() != w.n_data)
        throw ShapeMismatch(std::string(what) + ": H row count does not match the workspace");
}

void check_f_shape(const Eigen::MatrixXd& f, const Eigen::MatrixXd& h, const CCWorkspace& w,
                   const char* what) {
    if (f.cols() != w.dim || f.rows() != h.cols())
        throw ShapeMismatch(std::string(what) + ": F shape does not match H and the workspace");
}

// Frame coordinates of every factor for data point i: g(l, k) = (Xi^k, Theta^{(i),l})_q.
Eigen::MatrixXd factor_frame_coords(const Eigen::MatrixXd& f, const CCWorkspace& w, int i) {
    const int k = static_cast<int>(f.rows());
    Eigen::MatrixXd g(w.dim, k);
    for (int c = 0; c < w.n_comp; ++c)
        g.middleRows(c * w.comp_dim, w.comp_dim).noalias() =
            w.block(i, c).transpose() * f.middleCols(c * w.comp_dim, w.comp_dim).transpose();
    return g;
}

double cg_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                const Eigen::VectorXd& b, Eigen::VectorXd& x, double rel_tol, int max_iter) {
    x = Eigen::VectorXd::Zero(b.size());
    const double nb = b.norm();
    if (nb == 0.0) return 0.0;
    Eigen::VectorXd r = b;
    Eigen::VectorXd p = r;
    double rs = r.squaredNorm();
    const double target = rel_tol * nb;
    for (int it = 0; it < max_iter; ++it) {
        if (std::sqrt(rs) <= target) break;
        const Eigen::VectorXd ap = apply(p);
        const double pap = p.dot(ap);
        if (!(pap > 0.0) || !std::isfinite(pap))
            throw SolverFailure("update_factors: CG breakdown (operator not positive definite)");
        const double alpha = rs / pap;
        x += alpha * p;
        r -= alpha * ap;
        const double rs_new = r.squaredNorm();
        p = r + (rs_new / rs) * p;
        rs = rs_new;
    }
    return std::sqrt(rs) / nb;
}

}  // namespace

double cc_objective(const Eigen::MatrixXd& h, const Eigen::MatrixXd& f, const CCWorkspace& w) {
    check_h_shape(h, w, "cc_objective");
    check_f_shape(f, h, w, "cc_objective");
    const Eigen::MatrixXd p = h * f;
    if (w.flat) return (p - w.data_coords).squaredNorm();
    double obj = 0.0;
    Eigen::VectorXd r(w.comp_dim);
    for (int i = 0; i < w.n_data; ++i) {
        for (int c = 0; c < w.n_comp; ++c) {
            r.noalias() =
                w.block(i, c).transpose() * p.row(i).segment(c * w.comp_dim, w.comp_dim).transpose();
            r -= w.data_coords.row(i).segment(c * w.comp_dim, w.comp_dim).transpose();
            obj += (w.beta_sq.row(i).segment(c * w.comp_dim, w.comp_dim).transpose().array() *
                    r.array().square())
                       .sum();
        }
    }
    return obj;
}

Eigen::MatrixXd update_factors(const Eigen::MatrixXd& h, const CCWorkspace& w,
                               std::optional<double> reg) {
    check_h_shape(h, w, "update_factors");
    if ((h.array() < 0.0).any()) throw InvalidInput("update_factors: H has negative entries");
    const int k = static_cast<int>(h.cols());
    const int d = w.dim;
    const int size = k * d;
    for (int c = 0; c < k; ++c) {
        if ((h.col(c).array() == 0.0).all()) {
            std::cerr << "update_factors: warning: all-zero H column " << c
                      << "; the Tikhonov floor keeps the system solvable\n";
            break;
        }
    }

    // Right-hand side b_{kj} = sum_i H_{ik} [O_i (beta^2_i .* data_coords_i)]_j,
    // flattened column-major (index j*K + k).
    Eigen::MatrixXd bm = Eigen::MatrixXd::Zero(k, d);
    Eigen::MatrixXd weighted = w.beta_sq.cwiseProduct(w.data_coords);  // N x d
    if (!w.flat) {
        for (int i = 0; i < w.n_data; ++i)
            for (int c = 0; c < w.n_comp; ++c)
                weighted.row(i).segment(c * w.comp_dim, w.comp_dim) =
                    (w.block(i, c) *
                     weighted.row(i).segment(c * w.comp_dim, w.comp_dim).transpose())
                        .transpose();
    }
    bm.noalias() = h.transpose() * weighted;

    // trace(A) = sum_i ||H_i||^2 sum_l beta^2_{il}; the overlap columns are unit vectors.
    const double trace_a = (h.rowwise().squaredNorm().array() *
                            w.beta_sq.rowwise().sum().array())
                               .sum();
    const double reg_val = reg ? *reg : 1e-10 * trace_a / static_cast<double>(size);

    const auto as_vec = [](const Eigen::MatrixXd& m) {
        return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    };
    const auto as_mat = [k, d](const Eigen::VectorXd& v) {
        return Eigen::Map<const Eigen::MatrixXd>(v.data(), k, d);
    };

    const auto apply_blocked = [&](const Eigen::VectorXd& x) {
        const Eigen::MatrixXd fm = as_mat(x);
        Eigen::MatrixXd p = h * fm;  // N x d
        if (w.flat) {
            p = p.cwiseProduct(w.beta_sq);
        } else {
            for (int i = 0; i < w.n_data; ++i) {
                for (int c = 0; c < w.n_comp; ++c) {
                    const auto& o = w.block(i, c);
                    Eigen::VectorXd y =
                        o.transpose() * p.row(i).segment(c * w.comp_dim, w.comp_dim).transpose();
                    y.array() *= w.beta_sq.row(i).segment(c * w.comp_dim, w.comp_dim).transpose().array();
                    p.row(i).segment(c * w.comp_dim, w.comp_dim) = (o * y).transpose();
                }
            }
        }
        Eigen::MatrixXd out = h.transpose() * p;
        out += reg_val * fm;
        Eigen::VectorXd res = as_vec(out);
        return res;
    };

    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply = apply_blocked;
    Eigen::MatrixXd dense;
    if (size <= 4096) {
        dense = Eigen::MatrixXd::Zero(size, size);
        for (int i = 0; i < w.n_data; ++i) {
            const Eigen::MatrixXd hh = h.row(i).transpose() * h.row(i);  // K x K
            if (w.flat) {
                for (int j = 0; j < d; ++j)
                    dense.block(j * k, j * k, k, k) += w.beta_sq(i, j) * hh;
            } else {
                for (int c = 0; c < w.n_comp; ++c) {
                    const auto& o = w.block(i, c);
                    const Eigen::MatrixXd g =
                        o *
                        w.beta_sq.row(i).segment(c * w.comp_dim, w.comp_dim).transpose().asDiagonal() *
                        o.transpose();
                    const int base = c * w.comp_dim;
                    for (int j2 = 0; j2 < w.comp_dim; ++j2)
                        for (int j1 = 0; j1 < w.comp_dim; ++j1)
                            dense.block((base + j1) * k, (base + j2) * k, k, k) += g(j1, j2) * hh;
                }
            }
        }
        dense += reg_val * Eigen::MatrixXd::Identity(size, size);
        apply = [&dense](const Eigen::VectorXd& x) { return Eigen::VectorXd(dense * x); };
    }

    Eigen::VectorXd x;
    const double rel_residual = cg_solve(apply, as_vec(bm), x, 1e-10, 10 * size);
    if (rel_residual > 1e-2)
        throw SolverFailure("update_factors: CG stalled (relative residual " +
                            std::to_string(rel_residual) + " after max iterations)");
    return Eigen::MatrixXd(as_mat(x));
}

Eigen::MatrixXd update_coefficients(const Eigen::MatrixXd& h, const Eigen::MatrixXd& f,
                                    const CCWorkspace& w) {
    check_h_shape(h, w, "update_coefficients");
    check_f_shape(f, h, w, "update_coefficients");
    const int k = static_cast<int>(h.cols());
    constexpr double eps = 1e-12;

    Eigen::MatrixXd num(w.n_data, k);
    Eigen::MatrixXd den(w.n_data, k);
    if (w.flat) {
        const Eigen::MatrixXd s = f * f.transpose();
        const Eigen::MatrixXd v = w.data_coords * f.transpose();
        num = v.cwiseMax(0.0) + h * (-s).cwiseMax(0.0);
        den = (-v).cwiseMax(0.0) + h * s.cwiseMax(0.0);
    } else {
        for (int i = 0; i < w.n_data; ++i) {
            const Eigen::MatrixXd g = factor_frame_coords(f, w, i);  // d x K
            const Eigen::MatrixXd s =
                g.transpose() * w.beta_sq.row(i).transpose().asDiagonal() * g;  // K x K PSD
            const Eigen::RowVectorXd v =
                (w.beta_sq.row(i).cwiseProduct(w.data_coords.row(i))) * g;
            num.row(i) = v.cwiseMax(0.0) + h.row(i) * (-s).cwiseMax(0.0);
            den.row(i) = (-v).cwiseMax(0.0) + h.row(i) * s.cwiseMax(0.0);
        }
    }
    return h.cwiseProduct(((num.array() + eps) / (den.array() + eps)).sqrt().matrix());
}

InitCc init_cc(const std::vector<Point>& data, const Point& q, int k, double delta,
               std::uint64_t seed, int kmeans_restarts) {
    if (!(delta > 0.0) || delta >= 1.0)
        throw InvalidInput("init_cc: delta must be in (0, 1)");
    const CoordMatrix cm = coordinate_matrix(data, q);
    const KMeansResult km = kmeans(cm.values, k, kmeans_restarts, seed);
    InitCc out;
    out.h0 = km.assignments;
    for (int i = 0; i < out.h0.rows(); ++i) {
        for (int c = 0; c < out.h0.cols(); ++c)
            if (out.h0(i, c) == 0.0) out.h0(i, c) = delta;
        out.h0.row(i) /= out.h0.row(i).sum();
    }
    out.f0 = km.centroids;
    return out;
}

void rebuild_derived(Factorization& fac) {
    const BasePointCache cache = make_base_cache(fac.q);
    const int k = static_cast<int>(fac.f.rows());
    fac.xi.clear();
    fac.xi.reserve(static_cast<size_t>(k));
    for (int c = 0; c < k; ++c)
        fac.xi.push_back(tangent_from_coords(fac.q, fac.f.row(c).transpose(), cache));
    const Eigen::MatrixXd h_eff = effective_coordinates(fac.h, fac.xi, fac.q);
    fac.y = manifold_factors(h_eff, fac.xi, fac.q);
}

Factorization cc_nmdf(const std::vector<Point>& data, const Point& q, int k,
                      const CcNmdfParams& params) {
    if (params.max_iter < 1 || params.max_sub_iter < 1)
        throw InvalidInput("cc_nmdf: iteration counts must be >= 1");
    Factorization fac;
    fac.q = q;
    fac.method = "cc-nmdf";
    fac.rank = k;
    fac.seed = params.seed;
    fac.delta = params.delta;
    fac.max_iter = params.max_iter;
    fac.max_sub_iter = params.max_sub_iter;

    const InitCc init = init_cc(data, q, k, params.delta, params.seed, params.kmeans_restarts);
    fac.h = init.h0;
    const CCWorkspace w = build_workspace(data, q);

    fac.objective_trace.reserve(static_cast<size_t>(params.max_iter));
    for (int it = 0; it < params.max_iter; ++it) {
        fac.f = update_factors(fac.h, w);
        for (int j = 0; j < params.max_sub_iter; ++j)
            fac.h = update_coefficients(fac.h, fac.f, w);
        fac.objective_trace.push_back(cc_objective(fac.h, fac.f, w));
    }
    rebuild_derived(fac);
    return fac;
}

Factorization t_nmdf(const std::vector<Point>& data, const Point& q, int k, int iters,
                     std::uint64_t seed) {
    Factorization fac;
    fac.q = q;
    fac.method = "t-nmdf";
    fac.rank = k;
    fac.seed = seed;
    fac.max_iter = iters;

    const CoordMatrix cm = coordinate_matrix(data, q);
    SemiNmfResult res = semi_nmf(cm.values, k, iters, std::nullopt, seed);
    fac.h = std::move(res.h);
    fac.f = std::move(res.f);
    fac.objective_trace = std::move(res.objective_trace);
    rebuild_derived(fac);
    return fac;
}

Eigen::MatrixXd effective_coordinates(const Eigen::MatrixXd& h, const std::vector<Tangent>& xi,
                                      const Point& q) {
    const int k = static_cast<int>(xi.size());
    if (k == 0 || h.cols() != k)
        throw ShapeMismatch("effective_coordinates: H column count does not match the factors");
    const BasePointCache cache = make_base_cache(q);
    Eigen::MatrixXd gram(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = a; b < k; ++b)
            gram(a, b) = gram(b, a) =
                inner(q, xi[static_cast<size_t>(a)], xi[static_cast<size_t>(b)], cache);
    for (int a = 0; a < k; ++a)
        if (std::sqrt(std::max(0.0, gram(a, a))) <= 1e-12)
            throw DegenerateFactor("effective_coordinates: factor " + std::to_string(a) +
                                   " has zero norm");

    // Hhat = H * R with R_{bk} = rho((Xi^b, Xi^k)) / ||Xi^k||^2 off the
    // diagonal and R_{kk} = 1.
    Eigen::MatrixXd r = gram.cwiseMin(0.0);
    for (int c = 0; c < k; ++c) {
        r.col(c) /= gram(c, c);
        r(c, c) = 1.0;
    }
    return h * r;
}

std::vector<Point> manifold_factors(const Eigen::MatrixXd& h_eff, const std::vector<Tangent>& xi,
                                    const Point& q) {
    const int k = static_cast<int>(xi.size());
    if (h_eff.cols() != k)
        throw ShapeMismatch("manifold_factors: H column count does not match the factors");
    const BasePointCache cache = make_base_cache(q);
    std::vector<Point> y;
    y.reserve(static_cast<size_t>(k));
    for (int c = 0; c < k; ++c) {
        double ck = h_eff.col(c).maxCoeff();
        if (ck < 0.0) {
            std::cerr << "manifold_factors: warning: factor " << c
                      << " has negative max effective coefficient " << ck
                      << "; clamping to the base point\n";
            ck = 0.0;
        }
        y.push_back(exp_map(q, tangent_scale(xi[static_cast<size_t>(c)], ck), cache));
    }
    return y;
}

BasepointCheck verify_basepoint(const std::vector<Point>& data, const Point& q) {
    if (data.empty()) throw InvalidInput("verify_basepoint: empty dataset");
    const BasePointCache cache = make_base_cache(q);
    std::vector<Tangent> logs;
    logs.reserve(data.size());
    for (const Point& x : data) logs.push_back(log_map(q, x, cache));

    BasepointCheck out;
    out.min_inner = std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < logs.size(); ++a)
        for (size_t b = a; b < logs.size(); ++b)
            out.min_inner = std::min(out.min_inner, inner(q, logs[a], logs[b], cache));
    out.ok = out.min_inner >= -1e-12;
    return out;
}

}  // namespace nmdf
