// End-to-end walkthrough: simulate the yinyang benchmark, build a skeleton on
// a training split, and compare skeleton regressors against Euclidean kNN on
// held-out points.

#include <iostream>

#include "skelreg/skelreg.hpp"

using namespace skelreg;

int main() {
    YinyangConfig gen_cfg;
    gen_cfg.sizes = {500, 100, 100, 50, 50};
    gen_cfg.seed = 7;
    GenResult gen = gen_yinyang(gen_cfg);
    PointCloud cloud = add_noise_dims(gen.cloud, 50, std::sqrt(0.1), 11);

    const int n = static_cast<int>(cloud.size());
    const std::vector<int> fold = kfold_split(n, 5, 3);
    std::vector<int> train_rows, test_rows;
    for (int i = 0; i < n; ++i)
        (fold[static_cast<std::size_t>(i)] == 0 ? test_rows : train_rows)
            .push_back(i);

    PointCloud train, test;
    train.points.resize(static_cast<Eigen::Index>(train_rows.size()), cloud.dim());
    train.responses = Vector(static_cast<Eigen::Index>(train_rows.size()));
    for (std::size_t r = 0; r < train_rows.size(); ++r) {
        train.points.row(static_cast<Eigen::Index>(r)) = cloud.points.row(train_rows[r]);
        (*train.responses)(static_cast<Eigen::Index>(r)) = (*cloud.responses)(train_rows[r]);
    }
    test.points.resize(static_cast<Eigen::Index>(test_rows.size()), cloud.dim());
    test.responses = Vector(static_cast<Eigen::Index>(test_rows.size()));
    for (std::size_t r = 0; r < test_rows.size(); ++r) {
        test.points.row(static_cast<Eigen::Index>(r)) = cloud.points.row(test_rows[r]);
        (*test.responses)(static_cast<Eigen::Index>(r)) = (*cloud.responses)(test_rows[r]);
    }

    BuildConfig cfg;
    cfg.n_knots = 38;
    cfg.n_components = 5;
    cfg.restarts = 10;
    cfg.seed = 42;
    const Skeleton skel = build_skeleton(train, cfg);
    std::cout << "skeleton: " << skel.n_knots() << " knots, " << skel.n_edges()
              << " edges, r_hns = " << r_hns(skel) << "\n";

    const KnotPathTable table = knot_paths(skel);
    RegressionDataset ds;
    ds.positions = project_all(train, skel);
    ds.responses = *train.responses;
    ds.skeleton = std::make_shared<Skeleton>(skel);
    const auto queries = project_all(test, skel);
    const Matrix dists =
        pairwise_distances(queries, ds.positions, skel, table, true);

    const PredictOptions opts{true};
    KernelSpec kernel{KernelFamily::epanechnikov, 1.0, true};
    double sse_kernel = 0.0, sse_knn = 0.0, sse_spline = 0.0, sse_eknn = 0.0;

    const Matrix z = spline_transform(ds.positions, skel);
    const Vector beta = s_lspline_fit(z, ds.responses);

    for (Eigen::Index i = 0; i < test.size(); ++i) {
        const double truth = (*test.responses)(i);
        const auto& q = queries[static_cast<std::size_t>(i)];
        const double pk = s_kernel_predict(ds, q, kernel, dists.row(i), opts);
        const double pn = s_knn_predict(ds, q, 9, dists.row(i), opts);
        const double ps = s_lspline_predict(q, beta, skel);
        const double pe =
            euclidean_knn(train.points, *train.responses, test.points.row(i).transpose(), 9);
        sse_kernel += (pk - truth) * (pk - truth);
        sse_knn += (pn - truth) * (pn - truth);
        sse_spline += (ps - truth) * (ps - truth);
        sse_eknn += (pe - truth) * (pe - truth);
    }
    std::cout << "held-out SSE  kernel: " << sse_kernel << "  s-knn: " << sse_knn
              << "  spline: " << sse_spline << "  euclidean-knn: " << sse_eknn
              << "\n";
    return 0;
}
