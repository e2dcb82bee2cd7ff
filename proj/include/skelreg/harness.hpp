#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "datagen.hpp"
#include "graph_penalty.hpp"
#include "projection.hpp"
#include "regressors.hpp"
#include "rng.hpp"
#include "skeleton_builder.hpp"

namespace skelreg {

// Shuffled k-fold assignment: returns a fold id in [0, n_folds) per index.
// Fold sizes differ by at most one; the split depends only on (n, n_folds,
// seed).
inline std::vector<int> kfold_split(int n, int n_folds, std::uint64_t seed) {
    if (n_folds < 2) throw ConfigError("n_folds must be >= 2");
    if (n < n_folds) throw ConfigError("need at least one point per fold");
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<int> fold(static_cast<std::size_t>(n), -1);
    const int base = n / n_folds, extra = n % n_folds;
    int pos = 0;
    for (int f = 0; f < n_folds; ++f) {
        const int size = base + (f < extra ? 1 : 0);
        for (int i = 0; i < size; ++i)
            fold[static_cast<std::size_t>(order[static_cast<std::size_t>(pos++)])] = f;
    }
    return fold;
}

// Percentile by linear interpolation between order statistics; p in [0, 100].
inline double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw ShapeError("percentile of an empty sample");
    if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("p must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double h = p / 100.0 * (static_cast<double>(values.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

// FNV-1a over the raw bytes of selected rows; used to prove that a fold's fit
// saw exactly its training rows.
inline std::uint64_t hash_rows(const Matrix& pts, const std::vector<int>& rows) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xffULL;
            h *= 1099511628211ULL;
        }
    };
    for (int r : rows)
        for (Eigen::Index c = 0; c < pts.cols(); ++c) mix(pts(r, c));
    return h;
}

// ---------------------------------------------------------------------------
// Euclidean-space baselines.
// ---------------------------------------------------------------------------

// Mean response of exactly the k nearest training rows in ambient Euclidean
// distance; equal distances break toward the lower row index.
inline double euclidean_knn(const Matrix& x_train, const Vector& y_train,
                            const Eigen::Ref<const Vector>& query, int k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    const int n = static_cast<int>(x_train.rows());
    if (k > n) throw ConfigError("k exceeds the training size");
    std::vector<std::pair<double, int>> dist;
    dist.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        dist.push_back({(x_train.row(i).transpose() - query).squaredNorm(), i});
    std::sort(dist.begin(), dist.end());
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += y_train(dist[static_cast<std::size_t>(i)].second);
    return sum / k;
}

// Linear model with intercept handled by centering.
struct LinearModel {
    Vector coef;
    double intercept = 0.0;
    Vector col_mean;

    double predict(const Eigen::Ref<const Vector>& x) const {
        return intercept + (x - col_mean).dot(coef);
    }
};

inline LinearModel ridge_baseline(const Matrix& x, const Vector& y,
                                  double lambda) {
    if (x.rows() != y.size())
        throw ShapeError("design row count does not match response length");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    LinearModel m;
    m.col_mean = x.colwise().mean().transpose();
    const Matrix xc = x.rowwise() - m.col_mean.transpose();
    const double y_mean = y.mean();
    const Vector yc = y.array() - y_mean;
    Matrix gram = xc.transpose() * xc;
    gram.diagonal().array() += lambda;
    m.coef = gram.ldlt().solve(xc.transpose() * yc);
    m.intercept = y_mean;
    return m;
}

// l1 baseline: the fixed-lambda solver with D = I on the centered design.
inline LinearModel lasso_baseline(const Matrix& x, const Vector& y,
                                  double lambda, const AdmmOptions& opts = {}) {
    if (x.rows() != y.size())
        throw ShapeError("design row count does not match response length");
    LinearModel m;
    m.col_mean = x.colwise().mean().transpose();
    const Matrix xc = x.rowwise() - m.col_mean.transpose();
    const double y_mean = y.mean();
    const Vector yc = y.array() - y_mean;
    m.coef = gen_lasso_fixed_lambda(
        xc, yc, Matrix::Identity(x.cols(), x.cols()), lambda, opts);
    m.intercept = y_mean;
    return m;
}

// ---------------------------------------------------------------------------
// Cross-validated evaluation.
// ---------------------------------------------------------------------------

enum class MethodKind { skernel, sknn, slspline, eknn, ridge, lasso, mean };

inline const char* method_name(MethodKind k) {
    switch (k) {
        case MethodKind::skernel: return "skernel";
        case MethodKind::sknn: return "sknn";
        case MethodKind::slspline: return "slspline";
        case MethodKind::eknn: return "eknn";
        case MethodKind::ridge: return "ridge";
        case MethodKind::lasso: return "lasso";
        default: return "mean";
    }
}

// One fully specified method to cross-validate.
struct MethodSpec {
    MethodKind kind = MethodKind::skernel;
    BuildConfig build;          // S-methods: per-fold skeleton construction
    bool locality = true;       // restrict distances to adjacent cells
    KernelSpec kernel;          // skernel
    int k_neighbors = 5;        // sknn / eknn
    PenaltySpec penalty;        // slspline
    double lambda = 0.0;        // ridge / lasso
};

struct CvPlan {
    int n_folds = 5;
    std::uint64_t seed = 0;
};

struct CvResult {
    double sse = 0.0;
    std::vector<double> fold_sse;
    std::vector<std::uint64_t> fold_train_hash;
};

namespace detail {

// Everything derived from one fold's training rows for one skeleton config.
struct FoldArtifacts {
    std::vector<int> train_rows, test_rows;
    std::shared_ptr<Skeleton> skeleton;
    KnotPathTable table;
    RegressionDataset train;
    std::vector<SkeletonPosition> test_pos;
    Vector test_y;
    Matrix x_train, x_test;
    std::uint64_t train_hash = 0;
};

inline FoldArtifacts make_fold(const PointCloud& data,
                               const std::vector<int>& fold_of, int fold,
                               bool build_skeleton_too,
                               const BuildConfig& build) {
    if (!data.responses) throw ShapeError("cross-validation needs responses");
    FoldArtifacts fa;
    for (int i = 0; i < static_cast<int>(data.size()); ++i)
        (fold_of[static_cast<std::size_t>(i)] == fold ? fa.test_rows
                                                      : fa.train_rows)
            .push_back(i);

    fa.x_train.resize(static_cast<Eigen::Index>(fa.train_rows.size()),
                      data.dim());
    Vector y_train(static_cast<Eigen::Index>(fa.train_rows.size()));
    for (std::size_t r = 0; r < fa.train_rows.size(); ++r) {
        fa.x_train.row(static_cast<Eigen::Index>(r)) =
            data.points.row(fa.train_rows[r]);
        y_train(static_cast<Eigen::Index>(r)) =
            (*data.responses)(fa.train_rows[r]);
    }
    fa.x_test.resize(static_cast<Eigen::Index>(fa.test_rows.size()),
                     data.dim());
    fa.test_y.resize(static_cast<Eigen::Index>(fa.test_rows.size()));
    for (std::size_t r = 0; r < fa.test_rows.size(); ++r) {
        fa.x_test.row(static_cast<Eigen::Index>(r)) =
            data.points.row(fa.test_rows[r]);
        fa.test_y(static_cast<Eigen::Index>(r)) =
            (*data.responses)(fa.test_rows[r]);
    }
    fa.train_hash = hash_rows(data.points, fa.train_rows);

    if (build_skeleton_too) {
        PointCloud train_cloud{fa.x_train, std::nullopt};
        fa.skeleton =
            std::make_shared<Skeleton>(build_skeleton(train_cloud, build));
        fa.table = knot_paths(*fa.skeleton);
        fa.train.positions = project_all(train_cloud, *fa.skeleton);
        fa.train.responses = y_train;
        fa.train.skeleton = fa.skeleton;
        PointCloud test_cloud{fa.x_test, std::nullopt};
        fa.test_pos = project_all(test_cloud, *fa.skeleton);
    } else {
        fa.train.responses = y_train;
    }
    return fa;
}

// Held-out SSE of one method on one prepared fold. `dists` must be the
// test x train skeleton-distance matrix when the method needs it.
inline double fold_sse(const MethodSpec& spec, const FoldArtifacts& fa,
                       const Matrix* dists) {
    const PredictOptions opts{true};  // CV fallback: component-mean response
    double sse = 0.0;
    switch (spec.kind) {
        case MethodKind::skernel: {
            for (Eigen::Index i = 0; i < fa.test_y.size(); ++i) {
                const double pred = s_kernel_predict(
                    fa.train, fa.test_pos[static_cast<std::size_t>(i)],
                    spec.kernel, dists->row(i), opts);
                sse += (pred - fa.test_y(i)) * (pred - fa.test_y(i));
            }
            return sse;
        }
        case MethodKind::sknn: {
            for (Eigen::Index i = 0; i < fa.test_y.size(); ++i) {
                const double pred = s_knn_predict(
                    fa.train, fa.test_pos[static_cast<std::size_t>(i)],
                    spec.k_neighbors, dists->row(i), opts);
                sse += (pred - fa.test_y(i)) * (pred - fa.test_y(i));
            }
            return sse;
        }
        case MethodKind::slspline: {
            const Matrix z = spline_transform(fa.train.positions, *fa.skeleton);
            const Vector beta = s_lspline_fit_penalized(
                z, fa.train.responses, *fa.skeleton, spec.penalty);
            for (Eigen::Index i = 0; i < fa.test_y.size(); ++i) {
                const double pred = s_lspline_predict(
                    fa.test_pos[static_cast<std::size_t>(i)], beta,
                    *fa.skeleton);
                sse += (pred - fa.test_y(i)) * (pred - fa.test_y(i));
            }
            return sse;
        }
        case MethodKind::eknn: {
            for (Eigen::Index i = 0; i < fa.test_y.size(); ++i) {
                const double pred =
                    euclidean_knn(fa.x_train, fa.train.responses,
                                  fa.x_test.row(i).transpose(),
                                  spec.k_neighbors);
                sse += (pred - fa.test_y(i)) * (pred - fa.test_y(i));
            }
            return sse;
        }
        case MethodKind::ridge:
        case MethodKind::lasso: {
            const LinearModel m =
                spec.kind == MethodKind::ridge
                    ? ridge_baseline(fa.x_train, fa.train.responses, spec.lambda)
                    : lasso_baseline(fa.x_train, fa.train.responses, spec.lambda);
            for (Eigen::Index i = 0; i < fa.test_y.size(); ++i) {
                const double pred = m.predict(fa.x_test.row(i).transpose());
                sse += (pred - fa.test_y(i)) * (pred - fa.test_y(i));
            }
            return sse;
        }
        default: {
            const double mean = fa.train.responses.mean();
            for (Eigen::Index i = 0; i < fa.test_y.size(); ++i)
                sse += (mean - fa.test_y(i)) * (mean - fa.test_y(i));
            return sse;
        }
    }
}

inline bool needs_skeleton(MethodKind k) {
    return k == MethodKind::skernel || k == MethodKind::sknn ||
           k == MethodKind::slspline;
}

inline bool needs_distances(MethodKind k) {
    return k == MethodKind::skernel || k == MethodKind::sknn;
}

}  // namespace detail

// k-fold CV SSE of a single method. Skeleton methods rebuild the skeleton
// from each fold's training rows; nothing from a test row ever reaches a fit,
// which fold_train_hash lets callers verify.
inline CvResult cv_sse(const MethodSpec& spec, const PointCloud& data,
                       const CvPlan& plan) {
    data.check();
    const std::vector<int> fold_of =
        kfold_split(static_cast<int>(data.size()), plan.n_folds, plan.seed);
    CvResult res;
    for (int f = 0; f < plan.n_folds; ++f) {
        BuildConfig build = spec.build;
        build.seed = mix_seed(build.seed, static_cast<std::uint64_t>(f));
        detail::FoldArtifacts fa = detail::make_fold(
            data, fold_of, f, detail::needs_skeleton(spec.kind), build);
        Matrix dists;
        if (detail::needs_distances(spec.kind))
            dists = pairwise_distances(fa.test_pos, fa.train.positions,
                                       *fa.skeleton, fa.table, spec.locality);
        const double sse = detail::fold_sse(
            spec, fa, detail::needs_distances(spec.kind) ? &dists : nullptr);
        res.fold_sse.push_back(sse);
        res.fold_train_hash.push_back(fa.train_hash);
        res.sse += sse;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Experiment driver: replicated data draws, a method/parameter grid, CV per
// cell, and percentile summaries.
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::string dataset = "yinyang";  // yinyang | noisy_yinyang | swissroll
    std::vector<int> sizes;           // yinyang component sizes (empty: default)
    int noise_points = 800;           // noisy_yinyang background count
    int swissroll_n = 600;
    int ambient_dim = 0;              // pad with noise dims when above intrinsic
    double noise_dim_magnitude = 0.1; // variance (or sd, per the toggle) of pads
    bool variance_notation = true;
    int n_replicates = 5;
    int n_folds = 5;
    std::uint64_t seed = 0;

    std::vector<int> knot_counts = {0};  // 0 = round(sqrt(n)) rule
    int n_components = 1;
    Linkage linkage = Linkage::single;
    int restarts = 10;
    int max_iter = 100;
    int min_cell = 0;
    bool locality = true;

    std::vector<double> skernel_bandwidths;  // r_hns multiples
    KernelFamily kernel_family = KernelFamily::gaussian;
    std::vector<int> sknn_k;
    bool slspline = false;
    std::vector<PenaltySpec> slspline_penalties;
    std::vector<int> eknn_k;
    std::vector<double> ridge_lambdas;
    std::vector<double> lasso_lambdas;
};

// One grid cell: a method plus its ordered parameter bindings and the SSE it
// scored on every replicate.
struct ReportCell {
    std::string method;
    std::vector<std::pair<std::string, double>> params;
    std::vector<double> sse;
    double median = 0.0, p5 = 0.0, p95 = 0.0;

    std::string param_key() const {
        std::string key;
        for (const auto& [name, value] : params) {
            if (!key.empty()) key += ",";
            key += name + "=" + format_value(value);
        }
        return key.empty() ? "-" : key;
    }

    static std::string format_value(double v) {
        if (v == static_cast<long long>(v) && std::abs(v) < 1e15) {
            return std::to_string(static_cast<long long>(v));
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return buf;
    }
};

struct ExperimentReport {
    std::vector<ReportCell> cells;
    // method name -> index of its best cell (smallest median; ties keep the
    // earliest cell, and cells enumerate parameters in ascending order).
    std::map<std::string, std::size_t> best;
};

namespace detail {

inline GenResult generate(const ExperimentConfig& cfg, int replicate) {
    const std::uint64_t data_seed =
        mix_seed(cfg.seed, 2ULL * static_cast<std::uint64_t>(replicate));
    GenResult gen;
    if (cfg.dataset == "yinyang" || cfg.dataset == "noisy_yinyang") {
        YinyangConfig yc;
        if (!cfg.sizes.empty()) yc.sizes = cfg.sizes;
        yc.seed = data_seed;
        yc.variance_notation = cfg.variance_notation;
        if (cfg.dataset == "yinyang") {
            gen = gen_yinyang(yc);
        } else {
            NoisyYinyangConfig nc;
            nc.base = yc;
            nc.n_noise = cfg.noise_points;
            gen = gen_noisy_yinyang(nc);
        }
    } else if (cfg.dataset == "swissroll") {
        SwissrollConfig sc;
        sc.n = cfg.swissroll_n;
        sc.seed = data_seed;
        sc.variance_notation = cfg.variance_notation;
        gen = gen_swissroll(sc);
    } else {
        throw ConfigError("unknown dataset: " + cfg.dataset);
    }
    if (cfg.ambient_dim > gen.cloud.dim()) {
        const std::uint64_t pad_seed = mix_seed(
            cfg.seed, 2ULL * static_cast<std::uint64_t>(replicate) + 1ULL);
        gen.cloud = add_noise_dims(
            gen.cloud, cfg.ambient_dim,
            resolve_sd(cfg.noise_dim_magnitude, cfg.variance_notation),
            pad_seed);
    }
    return gen;
}

}  // namespace detail

// Runs the whole grid. Per replicate: draw a fresh cloud, split folds once,
// and share each skeleton build across every cell that uses the same knot
// count, so the only difference between two cells of one method is the swept
// parameter.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    if (cfg.n_replicates < 1) throw ConfigError("n_replicates must be >= 1");

    ExperimentReport report;
    auto add_cells = [&report](const std::string& method,
                               const std::vector<std::pair<std::string, double>>&
                                   base,
                               const std::string& pname,
                               const std::vector<double>& values) {
        for (double v : values) {
            ReportCell cell;
            cell.method = method;
            cell.params = base;
            cell.params.emplace_back(pname, v);
            report.cells.push_back(std::move(cell));
        }
    };

    // Cell layout, fixed up front so every replicate appends in one order.
    const bool any_s = !cfg.skernel_bandwidths.empty() || !cfg.sknn_k.empty() ||
                       cfg.slspline || !cfg.slspline_penalties.empty();
    for (int kc : cfg.knot_counts) {
        const std::vector<std::pair<std::string, double>> base = {
            {"knots", static_cast<double>(kc)}};
        if (!any_s) break;
        add_cells("skernel", base, "bw", cfg.skernel_bandwidths);
        {
            std::vector<double> ks(cfg.sknn_k.begin(), cfg.sknn_k.end());
            add_cells("sknn", base, "k", ks);
        }
        if (cfg.slspline) {
            ReportCell cell;
            cell.method = "slspline";
            cell.params = base;
            report.cells.push_back(std::move(cell));
        }
        for (const PenaltySpec& pen : cfg.slspline_penalties) {
            ReportCell cell;
            cell.method = std::string("slspline_") + penalty_name(pen.kind) +
                          "_q" + std::to_string(pen.order);
            cell.params = base;
            cell.params.emplace_back("lambda", pen.lambda);
            report.cells.push_back(std::move(cell));
        }
    }
    {
        std::vector<double> ks(cfg.eknn_k.begin(), cfg.eknn_k.end());
        add_cells("eknn", {}, "k", ks);
    }
    add_cells("ridge", {}, "lambda", cfg.ridge_lambdas);
    add_cells("lasso", {}, "lambda", cfg.lasso_lambdas);
    if (report.cells.empty()) throw ConfigError("experiment grid is empty");

    for (int rep = 0; rep < cfg.n_replicates; ++rep) {
        const GenResult gen = detail::generate(cfg, rep);
        const int n = static_cast<int>(gen.cloud.size());
        const std::vector<int> fold_of = kfold_split(
            n, cfg.n_folds,
            mix_seed(cfg.seed, 1000003ULL + static_cast<std::uint64_t>(rep)));

        // Accumulated SSE per cell for this replicate.
        std::vector<double> cell_sse(report.cells.size(), 0.0);

        for (int f = 0; f < cfg.n_folds; ++f) {
            // Baseline fold (no skeleton), shared by eknn/ridge/lasso.
            BuildConfig dummy;
            const detail::FoldArtifacts plain =
                detail::make_fold(gen.cloud, fold_of, f, false, dummy);

            std::size_t cell_idx = 0;
            for (std::size_t kci = 0; kci < cfg.knot_counts.size() && any_s;
                 ++kci) {
                BuildConfig build;
                build.n_knots = cfg.knot_counts[kci];
                build.n_components = cfg.n_components;
                build.linkage = cfg.linkage;
                build.restarts = cfg.restarts;
                build.max_iter = cfg.max_iter;
                build.min_cell = cfg.min_cell;
                build.seed = mix_seed(
                    mix_seed(cfg.seed, 7000000ULL +
                                           static_cast<std::uint64_t>(rep)),
                    static_cast<std::uint64_t>(f) * 1000ULL + kci);
                const detail::FoldArtifacts fa =
                    detail::make_fold(gen.cloud, fold_of, f, true, build);
                Matrix dists;
                const bool want_dists =
                    !cfg.skernel_bandwidths.empty() || !cfg.sknn_k.empty();
                if (want_dists)
                    dists = pairwise_distances(fa.test_pos, fa.train.positions,
                                               *fa.skeleton, fa.table,
                                               cfg.locality);

                for (double bw : cfg.skernel_bandwidths) {
                    MethodSpec spec;
                    spec.kind = MethodKind::skernel;
                    spec.kernel = {cfg.kernel_family, bw, true};
                    cell_sse[cell_idx++] += detail::fold_sse(spec, fa, &dists);
                }
                for (int k : cfg.sknn_k) {
                    MethodSpec spec;
                    spec.kind = MethodKind::sknn;
                    spec.k_neighbors = k;
                    cell_sse[cell_idx++] += detail::fold_sse(spec, fa, &dists);
                }
                if (cfg.slspline) {
                    MethodSpec spec;
                    spec.kind = MethodKind::slspline;
                    cell_sse[cell_idx++] += detail::fold_sse(spec, fa, nullptr);
                }
                for (const PenaltySpec& pen : cfg.slspline_penalties) {
                    MethodSpec spec;
                    spec.kind = MethodKind::slspline;
                    spec.penalty = pen;
                    cell_sse[cell_idx++] += detail::fold_sse(spec, fa, nullptr);
                }
            }
            for (int k : cfg.eknn_k) {
                MethodSpec spec;
                spec.kind = MethodKind::eknn;
                spec.k_neighbors = k;
                cell_sse[cell_idx++] += detail::fold_sse(spec, plain, nullptr);
            }
            for (double lam : cfg.ridge_lambdas) {
                MethodSpec spec;
                spec.kind = MethodKind::ridge;
                spec.lambda = lam;
                cell_sse[cell_idx++] += detail::fold_sse(spec, plain, nullptr);
            }
            for (double lam : cfg.lasso_lambdas) {
                MethodSpec spec;
                spec.kind = MethodKind::lasso;
                spec.lambda = lam;
                cell_sse[cell_idx++] += detail::fold_sse(spec, plain, nullptr);
            }
        }
        for (std::size_t c = 0; c < report.cells.size(); ++c)
            report.cells[c].sse.push_back(cell_sse[c]);
    }

    for (auto& cell : report.cells) {
        cell.median = percentile(cell.sse, 50.0);
        cell.p5 = percentile(cell.sse, 5.0);
        cell.p95 = percentile(cell.sse, 95.0);
    }
    for (std::size_t c = 0; c < report.cells.size(); ++c) {
        const std::string& m = report.cells[c].method;
        auto it = report.best.find(m);
        if (it == report.best.end() ||
            report.cells[c].median < report.cells[it->second].median)
            report.best[m] = c;
    }
    return report;
}

}  // namespace skelreg
