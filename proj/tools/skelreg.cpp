// Command-line front end: build skeletons, project points, fit and apply
// regressors, simulate benchmark data, and run cross-validated experiments.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skelreg/skelreg.hpp"

namespace {

using namespace skelreg;

// Regressor parameters arrive as one comma-separated key=value string, e.g.
// "bandwidth=4rhns,kernel=gaussian" or "penalty=trendfilter,order=1,lambda=0.01".
// A bandwidth with the "rhns" suffix is a multiple of the skeleton's
// heuristic scale; a bare number is absolute.
struct FitParams {
    KernelSpec kernel;
    int k_neighbors = 5;
    PenaltySpec penalty;
    bool locality = true;
};

FitParams parse_fit_params(const std::string& text) {
    FitParams p;
    for (const auto& tok : split(text, ',')) {
        if (tok.empty()) continue;
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw ConfigError("param '" + tok + "' is not key=value");
        const std::string key = tok.substr(0, eq);
        const std::string value = tok.substr(eq + 1);
        if (key == "bandwidth") {
            if (value.size() >= 4 &&
                value.compare(value.size() - 4, 4, "rhns") == 0) {
                const std::string mult = value.substr(0, value.size() - 4);
                p.kernel.bandwidth = mult.empty() ? 1.0 : parse_double(mult);
                p.kernel.rhns_multiple = true;
            } else {
                p.kernel.bandwidth = parse_double(value);
                p.kernel.rhns_multiple = false;
            }
        } else if (key == "kernel") {
            p.kernel.family = kernel_from_name(value);
        } else if (key == "k") {
            p.k_neighbors = static_cast<int>(parse_int(value));
        } else if (key == "penalty") {
            p.penalty.kind = penalty_from_name(value);
        } else if (key == "order") {
            p.penalty.order = static_cast<int>(parse_int(value));
        } else if (key == "lambda") {
            p.penalty.lambda = parse_double(value);
        } else if (key == "locality") {
            p.locality = value == "true" || value == "1";
        } else {
            throw ConfigError("unknown fit param '" + key + "'");
        }
    }
    return p;
}

MethodKind method_from_name(const std::string& name) {
    if (name == "skernel") return MethodKind::skernel;
    if (name == "sknn") return MethodKind::sknn;
    if (name == "slspline") return MethodKind::slspline;
    throw ConfigError("unknown method '" + name + "'");
}

int run_build(const std::string& input, const std::string& output,
              const BuildConfig& cfg) {
    const CsvData data = read_data_csv(input);
    const Skeleton s = build_skeleton(data.cloud, cfg);
    save_skeleton(output, s);
    std::cerr << "built skeleton: " << s.n_knots() << " knots, " << s.n_edges()
              << " edges\n";
    return 0;
}

int run_project(const std::string& skeleton_path, const std::string& input,
                const std::string& output) {
    const Skeleton s = load_skeleton(skeleton_path);
    const CsvData data = read_data_csv(input);
    write_positions_csv(output, project_all(data.cloud, s));
    return 0;
}

int run_fit(const std::string& method, const std::string& skeleton_path,
            const std::string& input, const std::string& params,
            const std::string& output) {
    const Skeleton s = load_skeleton(skeleton_path);
    const CsvData data = read_data_csv(input);
    if (!data.cloud.responses)
        throw ConfigError("fit input needs a y column");
    const FitParams p = parse_fit_params(params);

    FitModel model;
    model.kind = method_from_name(method);
    model.skeleton = s;
    model.locality = p.locality;
    const auto positions = project_all(data.cloud, s);

    switch (model.kind) {
        case MethodKind::skernel:
            model.kernel = p.kernel;
            model.train_positions = positions;
            model.train_responses = *data.cloud.responses;
            break;
        case MethodKind::sknn:
            model.k_neighbors = p.k_neighbors;
            model.train_positions = positions;
            model.train_responses = *data.cloud.responses;
            break;
        default: {
            model.penalty = p.penalty;
            const Matrix z = spline_transform(positions, s);
            const std::vector<int> orphan = unsupported_knots(z);
            if (!orphan.empty()) {
                std::cerr << "warning: no data touches knot";
                for (int j : orphan) std::cerr << " " << j;
                std::cerr << "; their coefficients stay 0\n";
            }
            model.beta =
                s_lspline_fit_penalized(z, *data.cloud.responses, s, p.penalty);
            break;
        }
    }
    save_model(output, model);
    return 0;
}

int run_predict(const std::string& model_path, const std::string& input,
                const std::string& output, bool fallback) {
    const FitModel model = load_model(model_path);
    const CsvData data = read_data_csv(input);
    const auto queries = project_all(data.cloud, model.skeleton);

    Vector pred(static_cast<Eigen::Index>(queries.size()));
    if (model.kind == MethodKind::slspline) {
        for (std::size_t i = 0; i < queries.size(); ++i)
            pred(static_cast<Eigen::Index>(i)) =
                s_lspline_predict(queries[i], model.beta, model.skeleton);
    } else {
        RegressionDataset train;
        train.positions = model.train_positions;
        train.responses = model.train_responses;
        train.skeleton = std::make_shared<Skeleton>(model.skeleton);
        train.check();
        const KnotPathTable table = knot_paths(model.skeleton);
        const Matrix dists =
            pairwise_distances(queries, train.positions, model.skeleton, table,
                               model.locality);
        const PredictOptions opts{fallback};
        for (std::size_t i = 0; i < queries.size(); ++i) {
            const Eigen::Index r = static_cast<Eigen::Index>(i);
            pred(r) = model.kind == MethodKind::skernel
                          ? s_kernel_predict(train, queries[i], model.kernel,
                                             dists.row(r), opts)
                          : s_knn_predict(train, queries[i], model.k_neighbors,
                                          dists.row(r), opts);
        }
    }

    std::ofstream out(output, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + output);
    out << "row_id,prediction\n";
    for (Eigen::Index i = 0; i < pred.size(); ++i)
        out << i << "," << format_double(pred(i)) << "\n";
    return 0;
}

int run_simulate(const std::string& dataset, const std::vector<int>& sizes,
                 int noise_points, int swissroll_n, int ambient_dim,
                 double noise_dim_magnitude, bool sd_notation,
                 std::uint64_t seed, const std::string& output) {
    ExperimentConfig cfg;
    cfg.dataset = dataset;
    cfg.sizes = sizes;
    cfg.noise_points = noise_points;
    cfg.swissroll_n = swissroll_n;
    cfg.ambient_dim = ambient_dim;
    cfg.noise_dim_magnitude = noise_dim_magnitude;
    cfg.variance_notation = !sd_notation;
    cfg.seed = seed;
    const GenResult gen = detail::generate(cfg, 0);
    write_data_csv(output, gen.cloud, &gen.component);
    std::cerr << "wrote " << gen.cloud.size() << " x " << gen.cloud.dim()
              << " points\n";
    return 0;
}

int run_cv(const std::string& config_path, const std::string& output,
           const std::string& plot_csv) {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    const ExperimentReport report = run_experiment(cfg);
    write_report_json(output, report);
    if (!plot_csv.empty()) write_plot_csv(plot_csv, report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"skeleton regression toolkit"};
    app.require_subcommand(1);

    // build
    auto* build = app.add_subcommand("build", "construct a skeleton from CSV data");
    std::string in_path, out_path, linkage = "single";
    BuildConfig bcfg;
    bcfg.restarts = 100;
    std::uint64_t seed = 0;
    build->add_option("--input", in_path, "data CSV")->required();
    build->add_option("--output", out_path, "skeleton JSON")->required();
    build->add_option("--knots", bcfg.n_knots, "knot count (0: sqrt rule)");
    build->add_option("--restarts", bcfg.restarts, "k-means restarts");
    build->add_option("--max-iter", bcfg.max_iter, "k-means iteration cap");
    build->add_option("--tol", bcfg.tol, "k-means relative tolerance");
    build->add_option("--min-cell", bcfg.min_cell, "prune knots with smaller cells");
    build->add_option("--min-edge-count", bcfg.min_edge_count,
                      "admit edges seen at least this often");
    build->add_option("--components", bcfg.n_components, "component count");
    build->add_option("--linkage", linkage, "single|average");
    build->add_option("--seed", seed, "random seed");

    // project
    auto* project = app.add_subcommand("project", "project points onto a skeleton");
    std::string skeleton_path;
    project->add_option("--skeleton", skeleton_path, "skeleton JSON")->required();
    project->add_option("--input", in_path, "data CSV")->required();
    project->add_option("--output", out_path, "positions CSV")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "fit a skeleton regressor");
    std::string method = "skernel", params;
    fit->add_option("--method", method, "skernel|sknn|slspline")->required();
    fit->add_option("--skeleton", skeleton_path, "skeleton JSON")->required();
    fit->add_option("--input", in_path, "training CSV with y column")->required();
    fit->add_option("--params", params, "comma-separated key=value params");
    fit->add_option("--output", out_path, "model JSON")->required();

    // predict
    auto* predict = app.add_subcommand("predict", "evaluate a fitted model");
    std::string model_path;
    bool fallback = false;
    predict->add_option("--model", model_path, "model JSON")->required();
    predict->add_option("--input", in_path, "query CSV")->required();
    predict->add_option("--output", out_path, "prediction CSV")->required();
    predict->add_flag("--fallback", fallback,
                      "use component-mean fallback for unreachable queries");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "generate benchmark data");
    std::string dataset = "yinyang";
    std::vector<int> sizes;
    int noise_points = 800, swissroll_n = 600, ambient_dim = 0;
    double noise_dim_magnitude = 0.1;
    bool sd_notation = false;
    simulate->add_option("--dataset", dataset, "yinyang|noisy_yinyang|swissroll")
        ->required();
    simulate->add_option("--sizes", sizes, "yinyang component sizes")
        ->delimiter(',');
    simulate->add_option("--noise-points", noise_points, "background points");
    simulate->add_option("--n", swissroll_n, "swissroll point count");
    simulate->add_option("--ambient-dim", ambient_dim, "pad to this dimension");
    simulate->add_option("--noise-dim-magnitude", noise_dim_magnitude,
                         "noise magnitude for padded dimensions");
    simulate->add_flag("--sd-notation", sd_notation,
                       "read noise magnitudes as standard deviations");
    simulate->add_option("--seed", seed, "random seed");
    simulate->add_option("--output", out_path, "data CSV")->required();

    // cv
    auto* cv = app.add_subcommand("cv", "cross-validated experiment grid");
    std::string config_path, plot_path;
    cv->add_option("--config", config_path, "key=value config file")->required();
    cv->add_option("--output", out_path, "report JSON")->required();
    cv->add_option("--plot-csv", plot_path, "per-replicate SSE CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed()) {
            bcfg.linkage = skelreg::linkage_from_name(linkage);
            bcfg.seed = seed;
            return run_build(in_path, out_path, bcfg);
        }
        if (project->parsed()) return run_project(skeleton_path, in_path, out_path);
        if (fit->parsed())
            return run_fit(method, skeleton_path, in_path, params, out_path);
        if (predict->parsed())
            return run_predict(model_path, in_path, out_path, fallback);
        if (simulate->parsed())
            return run_simulate(dataset, sizes, noise_points, swissroll_n,
                                ambient_dim, noise_dim_magnitude, sd_notation,
                                seed, out_path);
        if (cv->parsed()) return run_cv(config_path, out_path, plot_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
