// Command-line driver: tensor-field ingestion, factorization, error reports,
// rank sweeps, glyph rendering, and base-point checks.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nmdf/eval.hpp"
#include "nmdf/factorization.hpp"
#include "nmdf/glyphs.hpp"
#include "nmdf/serialize.hpp"
#include "nmdf/tensor_field.hpp"

namespace {

using namespace nmdf;

Point near_zero_point(const Manifold& m) {
    if (m.flat()) return point_from_vec(m, Eigen::VectorXd::Zero(m.dim()));
    std::vector<SymMatrix> mats(static_cast<size_t>(m.copies()),
                                SymMatrix::identity(m.spd_order()) * 1e-5);
    return point_from_mats(m, std::move(mats));
}

Point resolve_basepoint(const std::string& choice, const BlockDataset& data) {
    if (choice == "near-zero") return near_zero_point(data.manifold);
    if (choice == "barycenter") {
        const BarycenterResult res = barycenter(data.points);
        if (!res.converged)
            std::cerr << "warning: barycenter did not converge (mean log norm "
                      << res.mean_log_norm << " after " << res.iterations << " iterations)\n";
        return res.point;
    }
    const nlohmann::json j = load_json_file(choice);
    const Manifold m = descriptor_from_json(j.at("descriptor"));
    if (!(m == data.manifold))
        throw InvalidInput("base point file descriptor does not match the dataset");
    return point_payload_from_json(m, j.at("basepoint"));
}

std::vector<int> parse_ranks(const std::string& spec) {
    std::vector<int> ranks;
    if (spec.find(':') != std::string::npos) {
        int lo = 0, hi = 0, count = 0;
        char c1 = 0, c2 = 0;
        std::istringstream ss(spec);
        if (!(ss >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':')
            throw InvalidInput("bad --ranks spec '" + spec + "' (expected lo:hi:count)");
        return default_ranks(lo, hi, count);
    }
    std::istringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        ranks.push_back(std::stoi(tok));
    }
    if (ranks.empty()) throw InvalidInput("empty --ranks spec");
    return ranks;
}

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i > 0) s += ' ';
        s += argv[i];
    }
    return s;
}

BlockDataset load_dataset(const std::string& path) {
    return dataset_from_json(load_json_file(path));
}

int run_ingest(const std::string& tfld_path, const std::string& block_spec,
               const std::string& out_path) {
    std::ifstream in(tfld_path);
    if (!in) throw IoError("cannot open " + tfld_path);
    const TensorField field = parse_tfld(in);

    std::array<int, 3> block{};
    {
        std::istringstream ss(block_spec);
        char c1 = 0, c2 = 0;
        if (!(ss >> block[0] >> c1 >> block[1] >> c2 >> block[2]) || c1 != ',' || c2 != ',')
            throw InvalidInput("bad --block spec '" + block_spec + "' (expected bx,by,bz)");
    }
    const BlockDataset data = extract_blocks(field, block);
    save_text_file(out_path, dataset_to_json(data).dump() + "\n");
    std::cerr << "ingested " << field.nx << "x" << field.ny << "x" << field.nz << " field -> "
              << data.points.size() << " points on a " << block[0] << "x" << block[1] << "x"
              << block[2] << " block grid\n";
    return 0;
}

struct FactorizeOpts {
    std::string dataset;
    std::string method = "cc-nmdf";
    int rank = 0;
    std::string basepoint = "near-zero";
    double delta = 0.1;
    int max_iter = 50;
    int max_sub_iter = 5;
    std::uint64_t seed = 0;
    int restarts = 10;
    std::string out = "fac.json";
};

int run_factorize(const FactorizeOpts& o) {
    const BlockDataset data = load_dataset(o.dataset);
    const Point q = resolve_basepoint(o.basepoint, data);
    Factorization fac;
    if (o.method == "cc-nmdf") {
        CcNmdfParams params;
        params.delta = o.delta;
        params.max_iter = o.max_iter;
        params.max_sub_iter = o.max_sub_iter;
        params.seed = o.seed;
        params.kmeans_restarts = o.restarts;
        fac = cc_nmdf(data.points, q, o.rank, params);
    } else if (o.method == "t-nmdf") {
        fac = t_nmdf(data.points, q, o.rank, o.max_iter, o.seed);
    } else {
        throw InvalidInput("unknown --method '" + o.method + "'");
    }
    save_text_file(o.out, factorization_to_json(fac).dump() + "\n");
    std::cerr << o.method << " rank " << o.rank << ": final objective "
              << (fac.objective_trace.empty() ? 0.0 : fac.objective_trace.back()) << "\n";
    return 0;
}

int run_errors(const std::string& dataset_path, const std::string& fac_path,
               const std::string& out_path, bool timing) {
    const BlockDataset data = load_dataset(dataset_path);
    const Factorization fac = factorization_from_json(load_json_file(fac_path));
    if (!(fac.q.manifold == data.manifold))
        throw InvalidInput("factorization descriptor does not match the dataset");

    SweepEntry e;
    e.report.rank = fac.rank;
    const auto t0 = std::chrono::steady_clock::now();
    e.report.exact = exact_error(data.points, fac);
    e.report.tangent = tangent_error(data.points, fac);
    e.report.curvature_corrected = cc_error(data.points, fac);
    e.report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    save_text_file(out_path, error_csv({e}, timing));
    std::cerr << "rank " << e.report.rank << ": exact " << e.report.exact << ", tangent "
              << e.report.tangent << ", cc " << e.report.curvature_corrected << "\n";
    return 0;
}

struct SweepOpts {
    std::string dataset;
    std::string ranks = "2:35:12";
    std::string method = "cc-nmdf";
    std::string basepoint = "near-zero";
    double delta = 0.1;
    int max_iter = 50;
    int max_sub_iter = 5;
    std::uint64_t seed = 0;
    int restarts = 10;
    std::string out = "sweep.csv";
    bool timing = false;
};

int run_sweep(const SweepOpts& o) {
    const BlockDataset data = load_dataset(o.dataset);
    const Point q = resolve_basepoint(o.basepoint, data);
    CcNmdfParams params;
    params.delta = o.delta;
    params.max_iter = o.max_iter;
    params.max_sub_iter = o.max_sub_iter;
    params.seed = o.seed;
    params.kmeans_restarts = o.restarts;
    const Method method = o.method == "t-nmdf" ? Method::TNmdf : Method::CcNmdf;
    if (o.method != "t-nmdf" && o.method != "cc-nmdf")
        throw InvalidInput("unknown --method '" + o.method + "'");

    const std::vector<SweepEntry> entries =
        rank_sweep(data.points, q, parse_ranks(o.ranks), method, params);
    for (const SweepEntry& e : entries) {
        if (e.ok)
            std::cerr << "rank " << e.report.rank << ": exact " << e.report.exact << " ("
                      << e.report.wall_time_s << " s)\n";
        else
            std::cerr << "rank " << e.report.rank << ": FAILED: " << e.message << "\n";
    }
    save_text_file(o.out, error_csv(entries, o.timing));
    return 0;
}

int run_render(const std::string& fac_path, const std::string& out_path, double scale,
               const std::string& layout_spec, const std::string& cmdline) {
    const Factorization fac = factorization_from_json(load_json_file(fac_path));
    std::optional<GlyphLayout> layout;
    if (!layout_spec.empty()) {
        GlyphLayout g;
        std::istringstream ss(layout_spec);
        char c = 0;
        if (!(ss >> g.rows >> c >> g.cols) || c != ',')
            throw InvalidInput("bad --layout spec '" + layout_spec + "' (expected rows,cols)");
        layout = g;
    }
    save_text_file(out_path, render_glyphs(fac.y, layout, scale, cmdline));
    std::cerr << "rendered " << fac.y.size() << " factors\n";
    return 0;
}

int run_check_basepoint(const std::string& dataset_path, const std::string& basepoint) {
    const BlockDataset data = load_dataset(dataset_path);
    const Point q = resolve_basepoint(basepoint, data);
    const BasepointCheck check = verify_basepoint(data.points, q);
    std::cout << "ok=" << (check.ok ? "true" : "false") << " min_inner=" << check.min_inner
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonnegative manifold data factorization toolkit"};
    app.require_subcommand(1);

    std::string tfld_path, block_spec = "4,4,4", ingest_out = "dataset.json";
    CLI::App* ingest = app.add_subcommand("ingest", "Parse a TFLD tensor field into a dataset");
    ingest->add_option("tfld", tfld_path, "TFLD v1 input file")->required();
    ingest->add_option("--block", block_spec, "block dims bx,by,bz (default 4,4,4)");
    ingest->add_option("--out", ingest_out, "output dataset JSON");

    FactorizeOpts fo;
    CLI::App* factorize = app.add_subcommand("factorize", "Run T-NMDF or CC-NMDF on a dataset");
    factorize->add_option("dataset", fo.dataset, "dataset JSON")->required();
    factorize->add_option("--method", fo.method, "t-nmdf or cc-nmdf (default cc-nmdf)");
    factorize->add_option("--rank", fo.rank, "factorization rank K")->required();
    factorize->add_option("--basepoint", fo.basepoint, "near-zero, barycenter, or a JSON file");
    factorize->add_option("--delta", fo.delta, "relaxation delta (default 0.1)");
    factorize->add_option("--max-iter", fo.max_iter, "outer iterations (default 50)");
    factorize->add_option("--max-sub-iter", fo.max_sub_iter,
                          "coefficient sub-iterations (default 5)");
    factorize->add_option("--seed", fo.seed, "RNG seed (default 0)");
    factorize->add_option("--restarts", fo.restarts, "K-means restarts (default 10)");
    factorize->add_option("--out", fo.out, "output factorization JSON");

    std::string err_dataset, err_fac, err_out = "report.csv";
    bool err_timing = false;
    CLI::App* errors = app.add_subcommand("errors", "Error report for a stored factorization");
    errors->add_option("dataset", err_dataset, "dataset JSON")->required();
    errors->add_option("fac", err_fac, "factorization JSON")->required();
    errors->add_option("--out", err_out, "output CSV");
    errors->add_flag("--timing", err_timing, "write measured wall time into the CSV");

    SweepOpts so;
    CLI::App* sweep = app.add_subcommand("sweep", "Error curves over a list of ranks");
    sweep->add_option("dataset", so.dataset, "dataset JSON")->required();
    sweep->add_option("--ranks", so.ranks, "lo:hi:count or comma list (default 2:35:12)");
    sweep->add_option("--method", so.method, "t-nmdf or cc-nmdf (default cc-nmdf)");
    sweep->add_option("--basepoint", so.basepoint, "near-zero, barycenter, or a JSON file");
    sweep->add_option("--delta", so.delta, "relaxation delta");
    sweep->add_option("--max-iter", so.max_iter, "outer iterations");
    sweep->add_option("--max-sub-iter", so.max_sub_iter, "coefficient sub-iterations");
    sweep->add_option("--seed", so.seed, "RNG seed");
    sweep->add_option("--restarts", so.restarts, "K-means restarts");
    sweep->add_option("--out", so.out, "output CSV");
    sweep->add_flag("--timing", so.timing, "write measured wall times into the CSV");

    std::string render_fac, render_out = "factors.svg", layout_spec;
    double render_scale = 1.0;
    CLI::App* render = app.add_subcommand("render", "Render factor glyphs to SVG");
    render->add_option("fac", render_fac, "factorization JSON")->required();
    render->add_option("--out", render_out, "output SVG");
    render->add_option("--scale", render_scale, "glyph scale (default 1.0)");
    render->add_option("--layout", layout_spec, "rows,cols (default: square grid)");

    std::string cb_dataset, cb_basepoint = "near-zero";
    CLI::App* check = app.add_subcommand("check-basepoint", "Pairwise log inner-product scan");
    check->add_option("dataset", cb_dataset, "dataset JSON")->required();
    check->add_option("--basepoint", cb_basepoint, "near-zero, barycenter, or a JSON file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*ingest) return run_ingest(tfld_path, block_spec, ingest_out);
        if (*factorize) return run_factorize(fo);
        if (*errors) return run_errors(err_dataset, err_fac, err_out, err_timing);
        if (*sweep) return run_sweep(so);
        if (*render)
            return run_render(render_fac, render_out, render_scale, layout_spec,
                              join_args(argc, argv));
        if (*check) return run_check_basepoint(cb_dataset, cb_basepoint);
    } catch (const SolverFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const DegenerateFactor& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
