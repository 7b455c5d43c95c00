#include "nmdf/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nmdf {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw InvalidInput(std::string(what) + ": expected a 2-D array");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (static_cast<int>(j[static_cast<size_t>(i)].size()) != cols)
            throw InvalidInput(std::string(what) + ": ragged rows");
        for (int c = 0; c < cols; ++c)
            m(i, c) = j[static_cast<size_t>(i)][static_cast<size_t>(c)].get<double>();
    }
    return m;
}

}  // namespace

json descriptor_to_json(const Manifold& m) {
    switch (m.kind()) {
        case ManifoldKind::Euclidean:
            return json{{"kind", "euclidean"}, {"d", m.dim()}};
        case ManifoldKind::Spd:
            return json{{"kind", "spd"}, {"n", m.spd_order()}};
        case ManifoldKind::Power: {
            const json base = m.component_kind() == ManifoldKind::Spd
                                  ? json{{"kind", "spd"}, {"n", m.spd_order()}}
                                  : json{{"kind", "euclidean"}, {"d", m.component_dim()}};
            return json{{"kind", "power"}, {"base", base}, {"m", m.copies()}};
        }
    }
    throw InvalidInput("descriptor_to_json: unknown kind");
}

Manifold descriptor_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "euclidean") return Manifold::euclidean(j.at("d").get<int>());
    if (kind == "spd") return Manifold::spd(j.at("n").get<int>());
    if (kind == "power")
        return Manifold::power(descriptor_from_json(j.at("base")), j.at("m").get<int>());
    throw InvalidInput("descriptor_from_json: unknown kind '" + kind + "'");
}

json point_payload_to_json(const Point& p) {
    if (p.manifold.flat()) {
        json arr = json::array();
        for (int i = 0; i < p.vec.size(); ++i) arr.push_back(p.vec(i));
        return arr;
    }
    json arr = json::array();
    for (const SymMatrix& m : p.mats) arr.push_back(m.packed());
    return arr;
}

Point point_payload_from_json(const Manifold& m, const json& j) {
    if (m.flat()) {
        Eigen::VectorXd v(m.dim());
        if (static_cast<int>(j.size()) != m.dim())
            throw InvalidInput("point payload: wrong length");
        for (int i = 0; i < v.size(); ++i) v(i) = j[static_cast<size_t>(i)].get<double>();
        return point_from_vec(m, std::move(v));
    }
    std::vector<SymMatrix> mats;
    mats.reserve(j.size());
    for (const json& comp : j)
        mats.push_back(SymMatrix::from_packed(m.spd_order(), comp.get<std::vector<double>>()));
    return point_from_mats(m, std::move(mats));
}

json dataset_to_json(const BlockDataset& d) {
    json points = json::array();
    for (const Point& p : d.points) points.push_back(point_payload_to_json(p));
    json origins = json::array();
    for (const auto& o : d.origins) origins.push_back({o[0], o[1], o[2]});
    return json{{"format", "nmdf-dataset"},
                {"version", 1},
                {"descriptor", descriptor_to_json(d.manifold)},
                {"block", {d.block[0], d.block[1], d.block[2]}},
                {"origins", std::move(origins)},
                {"points", std::move(points)}};
}

BlockDataset dataset_from_json(const json& j) {
    if (j.value("format", "") != "nmdf-dataset")
        throw InvalidInput("dataset_from_json: not an nmdf dataset");
    BlockDataset d;
    d.manifold = descriptor_from_json(j.at("descriptor"));
    if (j.contains("block")) {
        const auto& b = j.at("block");
        d.block = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>()};
    }
    for (const json& p : j.at("points")) d.points.push_back(point_payload_from_json(d.manifold, p));
    if (j.contains("origins")) {
        for (const json& o : j.at("origins"))
            d.origins.push_back({o.at(0).get<int>(), o.at(1).get<int>(), o.at(2).get<int>()});
    }
    return d;
}

json factorization_to_json(const Factorization& f) {
    return json{{"format", "nmdf-factorization"},
                {"version", 1},
                {"descriptor", descriptor_to_json(f.q.manifold)},
                {"basepoint", point_payload_to_json(f.q)},
                {"H", matrix_to_json(f.h)},
                {"F", matrix_to_json(f.f)},
                {"rank", f.rank},
                {"method", f.method},
                {"seed", f.seed},
                {"params",
                 {{"delta", f.delta}, {"max_iter", f.max_iter}, {"max_sub_iter", f.max_sub_iter}}},
                {"objective_trace", f.objective_trace}};
}

Factorization factorization_from_json(const json& j) {
    if (j.value("format", "") != "nmdf-factorization")
        throw InvalidInput("factorization_from_json: not an nmdf factorization");
    Factorization f;
    const Manifold m = descriptor_from_json(j.at("descriptor"));
    f.q = point_payload_from_json(m, j.at("basepoint"));
    f.h = matrix_from_json(j.at("H"), "H");
    f.f = matrix_from_json(j.at("F"), "F");
    f.rank = j.at("rank").get<int>();
    f.method = j.at("method").get<std::string>();
    f.seed = j.at("seed").get<std::uint64_t>();
    const json& params = j.at("params");
    f.delta = params.at("delta").get<double>();
    f.max_iter = params.at("max_iter").get<int>();
    f.max_sub_iter = params.at("max_sub_iter").get<int>();
    f.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    if ((f.h.array() < 0.0).any())
        throw InvalidInput("factorization_from_json: H has negative entries");
    rebuild_derived(f);
    return f;
}

std::string error_csv(const std::vector<SweepEntry>& entries, bool with_timing) {
    std::ostringstream out;
    out << "rank,exact,tangent,cc,wall_time_s\n";
    char buf[64];
    const auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    for (const SweepEntry& e : entries) {
        out << e.report.rank << ',';
        put(e.report.exact);
        out << ',';
        put(e.report.tangent);
        out << ',';
        put(e.report.curvature_corrected);
        out << ',';
        put(with_timing ? e.report.wall_time_s : 0.0);
        out << '\n';
    }
    return out.str();
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw InvalidInput("failed to parse " + path + ": " + e.what());
    }
    return j;
}

void save_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << contents;
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace nmdf
