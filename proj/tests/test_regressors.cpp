#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "skelreg/skelreg.hpp"

using namespace skelreg;
using test_helpers::chain_skeleton;
using test_helpers::make_skeleton;
using test_helpers::random_position;
using test_helpers::random_skeleton;

namespace {

// Training set on a single edge of length 10: responses indexed by parameter.
RegressionDataset line_dataset(const std::vector<double>& ts,
                               const std::vector<double>& ys) {
    Matrix knots(2, 2);
    knots << 0, 0, 10, 0;
    RegressionDataset ds;
    ds.skeleton =
        std::make_shared<const Skeleton>(make_skeleton(knots, {{0, 1}}));
    for (double t : ts)
        ds.positions.push_back(
            canonicalize_position(*ds.skeleton, 0, t));
    ds.responses = Eigen::Map<const Vector>(ys.data(),
                                            static_cast<Eigen::Index>(ys.size()));
    ds.check();
    return ds;
}

Vector distance_row(const RegressionDataset& ds, const SkeletonPosition& q) {
    const KnotPathTable table = knot_paths(*ds.skeleton);
    return pairwise_distances({q}, ds.positions, *ds.skeleton, table, false)
        .row(0)
        .transpose();
}

}  // namespace

TEST_CASE("r_hns averages nearest same-component knot gaps") {
    SECTION("two knots") {
        Matrix knots(2, 2);
        knots << 0, 0, 2, 0;
        const Skeleton s = make_skeleton(knots, {{0, 1}});
        REQUIRE(r_hns(s) == 2.0);
    }
    SECTION("uneven chain") {
        Matrix knots(3, 1);
        knots << 0, 1, 3;
        const Skeleton s = make_skeleton(knots, {{0, 1}, {1, 2}});
        REQUIRE(r_hns(s) == Catch::Approx((1.0 + 1.0 + 2.0) / 3.0).margin(1e-15));
    }
    SECTION("singleton components are skipped") {
        Matrix knots(3, 1);
        knots << 0, 2, 50;
        const Skeleton s = make_skeleton(knots, {{0, 1}});
        REQUIRE(r_hns(s) == 2.0);  // the isolated knot contributes nothing
    }
    SECTION("all singletons is degenerate") {
        Matrix knots(2, 1);
        knots << 0, 5;
        const Skeleton s = make_skeleton(knots, {});
        REQUIRE_THROWS_AS(r_hns(s), DegenerateError);
    }
    SECTION("matches a brute-force recount") {
        Rng rng(61);
        for (int trial = 0; trial < 10; ++trial) {
            const Skeleton s = random_skeleton(rng);
            double sum = 0.0;
            int cnt = 0;
            for (int i = 0; i < s.n_knots(); ++i) {
                double best = kInfinity;
                for (int j = 0; j < s.n_knots(); ++j) {
                    if (j == i || s.component[static_cast<std::size_t>(j)] !=
                                      s.component[static_cast<std::size_t>(i)])
                        continue;
                    best = std::min(best,
                                    (s.knots.row(i) - s.knots.row(j)).norm());
                }
                if (best < kInfinity) {
                    sum += best;
                    ++cnt;
                }
            }
            REQUIRE(r_hns(s) == sum / cnt);
        }
    }
}

TEST_CASE("kernel weights") {
    REQUIRE(kernel_weight(KernelFamily::gaussian, 0.0) == 1.0);
    REQUIRE(kernel_weight(KernelFamily::gaussian, 1.0) ==
            Catch::Approx(std::exp(-0.5)).margin(1e-15));
    REQUIRE(kernel_weight(KernelFamily::gaussian, -2.0) ==
            Catch::Approx(std::exp(-2.0)).margin(1e-15));
    REQUIRE(kernel_weight(KernelFamily::epanechnikov, 0.0) == 0.75);
    REQUIRE(kernel_weight(KernelFamily::epanechnikov, 0.5) == 0.5625);
    REQUIRE(kernel_weight(KernelFamily::epanechnikov, -0.5) == 0.5625);
    REQUIRE(kernel_weight(KernelFamily::epanechnikov, 1.0) == 0.0);
    REQUIRE(kernel_weight(KernelFamily::epanechnikov, 1.5) == 0.0);

    SECTION("names round-trip") {
        REQUIRE(kernel_from_name("gaussian") == KernelFamily::gaussian);
        REQUIRE(kernel_from_name("epanechnikov") == KernelFamily::epanechnikov);
        REQUIRE_THROWS_AS(kernel_from_name("box"), ConfigError);
    }
}

TEST_CASE("bandwidth resolution") {
    Matrix knots(2, 2);
    knots << 0, 0, 2, 0;
    const Skeleton s = make_skeleton(knots, {{0, 1}});

    KernelSpec spec;
    spec.bandwidth = 0.7;
    REQUIRE(spec.resolve(s) == 0.7);

    spec.rhns_multiple = true;
    REQUIRE(spec.resolve(s) == 0.7 * 2.0);  // r_hns = 2

    spec.bandwidth = 0.0;
    REQUIRE_THROWS_AS(spec.resolve(s), ConfigError);
    spec.bandwidth = -1.0;
    spec.rhns_multiple = false;
    REQUIRE_THROWS_AS(spec.resolve(s), ConfigError);
}

TEST_CASE("kernel regression matches the one-dimensional oracle") {
    const std::vector<double> ts = {0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95};
    const std::vector<double> ys = {1.0, -2.0, 0.5, 3.0, 3.5, -1.0, 2.0};
    const RegressionDataset ds = line_dataset(ts, ys);

    const double tq = 0.42;
    const SkeletonPosition q = SkeletonPosition::on_edge(0, tq);
    const Vector dists = distance_row(ds, q);

    for (KernelFamily fam :
         {KernelFamily::gaussian, KernelFamily::epanechnikov}) {
        for (double h : {0.8, 2.0, 5.0}) {
            KernelSpec spec;
            spec.family = fam;
            spec.bandwidth = h;
            const double pred = s_kernel_predict(ds, q, spec, dists);

            double wsum = 0.0, ysum = 0.0;
            for (std::size_t i = 0; i < ts.size(); ++i) {
                const double w =
                    kernel_weight(fam, std::abs(tq - ts[i]) * 10.0 / h);
                wsum += w;
                ysum += w * ys[i];
            }
            REQUIRE(pred == Catch::Approx(ysum / wsum).epsilon(1e-12));
        }
    }
}

TEST_CASE("kernel regression reproduces constants") {
    const RegressionDataset ds =
        line_dataset({0.1, 0.4, 0.7}, {2.5, 2.5, 2.5});
    const SkeletonPosition q = SkeletonPosition::on_edge(0, 0.3);
    KernelSpec spec;
    spec.bandwidth = 3.0;
    REQUIRE(s_kernel_predict(ds, q, spec, distance_row(ds, q)) ==
            Catch::Approx(2.5).margin(1e-13));
}

TEST_CASE("kernel regression stays within the response range") {
    Rng rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const Skeleton s = random_skeleton(rng, 4, 8);
        RegressionDataset ds;
        ds.skeleton = std::make_shared<const Skeleton>(s);
        const int n = 30;
        ds.responses.resize(n);
        for (int i = 0; i < n; ++i) {
            ds.positions.push_back(random_position(*ds.skeleton, rng));
            ds.responses(i) = rng.uniform(-5.0, 5.0);
        }
        const SkeletonPosition q = random_position(*ds.skeleton, rng);
        const Vector dists = distance_row(ds, q);
        KernelSpec spec;
        spec.bandwidth = 2.0;
        const double pred = s_kernel_predict(ds, q, spec, dists);
        REQUIRE(pred >= ds.responses.minCoeff() - 1e-12);
        REQUIRE(pred <= ds.responses.maxCoeff() + 1e-12);
    }
}

TEST_CASE("bounded kernels can run out of support") {
    const RegressionDataset ds = line_dataset({0.05, 0.1}, {1.0, 5.0});
    const SkeletonPosition q = SkeletonPosition::on_edge(0, 0.9);
    const Vector dists = distance_row(ds, q);
    KernelSpec spec;
    spec.family = KernelFamily::epanechnikov;
    spec.bandwidth = 1.0;  // nearest training point is 8.0 away

    REQUIRE_THROWS_AS(s_kernel_predict(ds, q, spec, dists), NoSupportError);

    PredictOptions opts;
    opts.component_mean_fallback = true;
    REQUIRE(s_kernel_predict(ds, q, spec, dists, opts) == 3.0);
}

TEST_CASE("knn includes every tie at the neighborhood boundary") {
    const RegressionDataset ds =
        line_dataset({0.1, 0.3, 0.5, 0.7}, {1.0, 2.0, 3.0, 4.0});
    const SkeletonPosition q = SkeletonPosition::at_knot(0);
    Vector dists(4);
    dists << 1.0, 2.0, 2.0, 3.0;

    bool short_nb = true;
    const double pred = s_knn_predict(ds, q, 2, dists, {}, &short_nb);
    REQUIRE(pred == (1.0 + 2.0 + 3.0) / 3.0);  // both distance-2 points enter
    REQUIRE(!short_nb);

    SECTION("exact k when there are no ties") {
        REQUIRE(s_knn_predict(ds, q, 2,
                              (Vector(4) << 1.0, 2.0, 2.5, 3.0).finished()) ==
                1.5);
    }
    SECTION("k of one") {
        REQUIRE(s_knn_predict(ds, q, 1, dists) == 1.0);
    }
}

TEST_CASE("knn shrinks the neighborhood when support is short") {
    const RegressionDataset ds =
        line_dataset({0.1, 0.3, 0.5}, {1.0, 2.0, 6.0});
    const SkeletonPosition q = SkeletonPosition::at_knot(0);
    Vector dists(3);
    dists << 1.0, kInfinity, 2.0;

    bool short_nb = false;
    const double pred = s_knn_predict(ds, q, 5, dists, {}, &short_nb);
    REQUIRE(pred == (1.0 + 6.0) / 2.0);
    REQUIRE(short_nb);

    SECTION("no finite distance at all") {
        Vector none = Vector::Constant(3, kInfinity);
        REQUIRE_THROWS_AS(s_knn_predict(ds, q, 2, none), NoSupportError);
        PredictOptions opts;
        opts.component_mean_fallback = true;
        REQUIRE(s_knn_predict(ds, q, 2, none, opts) == 3.0);
    }
    SECTION("bad arguments") {
        REQUIRE_THROWS_AS(s_knn_predict(ds, q, 0, dists), ConfigError);
        Vector wrong(2);
        wrong << 1.0, 2.0;
        REQUIRE_THROWS_AS(s_knn_predict(ds, q, 2, wrong), ShapeError);
    }
}

TEST_CASE("spline design rows blend the edge endpoints") {
    const Skeleton s = chain_skeleton({1.0, 1.0});
    const std::vector<SkeletonPosition> positions = {
        SkeletonPosition::at_knot(1),
        SkeletonPosition::on_edge(0, 0.25),
        SkeletonPosition::on_edge(1, 0.6),
    };
    const Matrix z = spline_transform(positions, s);
    REQUIRE(z.rows() == 3);
    REQUIRE(z.cols() == 3);
    REQUIRE(z(0, 0) == 0.0);
    REQUIRE(z(0, 1) == 1.0);
    REQUIRE(z(0, 2) == 0.0);
    REQUIRE(z(1, 0) == 0.75);
    REQUIRE(z(1, 1) == 0.25);
    REQUIRE(z(2, 1) == Catch::Approx(0.4).margin(1e-15));
    REQUIRE(z(2, 2) == 0.6);
    for (int r = 0; r < 3; ++r)
        REQUIRE(z.row(r).sum() == Catch::Approx(1.0).margin(1e-15));

    REQUIRE_THROWS_AS(
        spline_transform({SkeletonPosition::on_edge(7, 0.5)}, s), IndexError);
}

TEST_CASE("spline fit interpolates a determined system") {
    const Skeleton s = chain_skeleton({1.0, 1.0});
    const std::vector<SkeletonPosition> positions = {
        SkeletonPosition::at_knot(0), SkeletonPosition::at_knot(1),
        SkeletonPosition::at_knot(2)};
    const Matrix z = spline_transform(positions, s);
    Vector y(3);
    y << 4.0, -1.0, 2.5;
    const Vector beta = s_lspline_fit(z, y);
    REQUIRE((beta - y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spline fit zeroes unsupported knots and reports them") {
    const Skeleton s = chain_skeleton({1.0, 1.0});
    const std::vector<SkeletonPosition> positions = {
        SkeletonPosition::at_knot(0), SkeletonPosition::at_knot(0)};
    const Matrix z = spline_transform(positions, s);
    Vector y(2);
    y << 1.0, 3.0;

    std::vector<int> unsupported;
    const Vector beta = s_lspline_fit(z, y, &unsupported);
    REQUIRE(unsupported == std::vector<int>{1, 2});
    REQUIRE(beta(0) == Catch::Approx(2.0).margin(1e-12));  // mean of the two
    REQUIRE(beta(1) == 0.0);
    REQUIRE(beta(2) == 0.0);
}

TEST_CASE("spline fit matches the normal equations when full rank") {
    Rng rng(404);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 25, k = 6;
        Matrix z(n, k);
        Vector y(n);
        for (int i = 0; i < n; ++i) {
            y(i) = rng.uniform(-2.0, 2.0);
            for (int j = 0; j < k; ++j) z(i, j) = rng.uniform(-1.0, 1.0);
        }
        const Vector beta = s_lspline_fit(z, y);
        const Vector oracle =
            (z.transpose() * z).ldlt().solve(z.transpose() * y);
        REQUIRE((beta - oracle).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("spline fit returns the minimum-norm solution when rank deficient") {
    Rng rng(505);
    const int n = 12, k = 5;
    Matrix z(n, k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 3; ++j) z(i, j) = rng.uniform(-1.0, 1.0);
    z.col(3) = z.col(0) + z.col(1);  // rank 3 overall
    z.col(4) = z.col(1) - 2.0 * z.col(2);
    Vector y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.uniform(-1.0, 1.0);

    const Vector beta = s_lspline_fit(z, y);
    Eigen::JacobiSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector oracle = svd.solve(y);  // SVD solve is the pseudoinverse
    REQUIRE((beta - oracle).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("spline prediction is the linear blend of the fit") {
    const Skeleton s = chain_skeleton({2.0, 3.0});
    Vector beta(3);
    beta << 1.0, 5.0, -3.0;

    REQUIRE(s_lspline_predict(SkeletonPosition::at_knot(1), beta, s) == 5.0);
    REQUIRE(s_lspline_predict(SkeletonPosition::on_edge(0, 0.25), beta, s) ==
            Catch::Approx(0.75 * 1.0 + 0.25 * 5.0).margin(1e-15));
    REQUIRE(s_lspline_predict(SkeletonPosition::on_edge(1, 0.5), beta, s) ==
            Catch::Approx(1.0).margin(1e-15));

    SECTION("continuity at the knots") {
        const double at_knot =
            s_lspline_predict(SkeletonPosition::at_knot(1), beta, s);
        const double near_knot = s_lspline_predict(
            SkeletonPosition::on_edge(1, 1e-12), beta, s);
        REQUIRE(std::abs(at_knot - near_knot) < 1e-10);
    }
    SECTION("bad arguments") {
        Vector short_beta(2);
        short_beta << 1.0, 2.0;
        REQUIRE_THROWS_AS(
            s_lspline_predict(SkeletonPosition::at_knot(0), short_beta, s),
            ShapeError);
        REQUIRE_THROWS_AS(
            s_lspline_predict(SkeletonPosition::at_knot(9), beta, s),
            IndexError);
    }
}

TEST_CASE("spline prediction agrees with the design matrix") {
    Rng rng(606);
    const Skeleton s = random_skeleton(rng, 4, 8);
    Vector beta(s.n_knots());
    for (int j = 0; j < s.n_knots(); ++j) beta(j) = rng.uniform(-3.0, 3.0);

    std::vector<SkeletonPosition> positions;
    for (int i = 0; i < 20; ++i) positions.push_back(random_position(s, rng));
    const Matrix z = spline_transform(positions, s);
    for (int i = 0; i < 20; ++i) {
        const double direct = s_lspline_predict(
            positions[static_cast<std::size_t>(i)], beta, s);
        REQUIRE(direct == Catch::Approx(z.row(i).dot(beta)).margin(1e-12));
    }
}

TEST_CASE("default bandwidth sweep is the documented grid") {
    REQUIRE(default_bandwidth_multipliers() ==
            std::vector<double>{0.5, 1.0, 2.0, 4.0, 8.0});
}
