#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <vector>

#include "helpers.hpp"
#include "skelreg/skelreg.hpp"

using namespace skelreg;
using test_helpers::chain_skeleton;
using test_helpers::make_skeleton;
using test_helpers::random_position;
using test_helpers::random_skeleton;

namespace {

// All-pairs shortest paths by Floyd-Warshall, as an independent oracle.
Matrix floyd_warshall(const Skeleton& s) {
    const int k = static_cast<int>(s.n_knots());
    Matrix d = Matrix::Constant(k, k, kInfinity);
    for (int i = 0; i < k; ++i) d(i, i) = 0.0;
    for (const auto& e : s.edges) {
        d(e.i, e.j) = std::min(d(e.i, e.j), e.length);
        d(e.j, e.i) = d(e.i, e.j);
    }
    for (int m = 0; m < k; ++m)
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                if (d(i, m) + d(m, j) < d(i, j)) d(i, j) = d(i, m) + d(m, j);
    return d;
}

}  // namespace

TEST_CASE("knot paths route around long edges") {
    // Direct edge 0-2 is longer than the two-hop path through knot 1.
    Skeleton s;
    s.knots.resize(3, 2);
    s.knots << 0, 0, 1, 0, 2, 0;
    s.component = {0, 0, 0};
    auto push = [&](int i, int j, double len) {
        EdgeRecord e;
        e.i = i;
        e.j = j;
        e.length = len;
        e.vd_weight = 0.1;
        e.count = 1;
        s.edges.push_back(e);
    };
    push(0, 1, 1.0);
    push(1, 2, 1.0);
    push(0, 2, 3.0);

    const KnotPathTable table = knot_paths(s);
    REQUIRE(table.dist(0, 2) == 2.0);
    REQUIRE(table.dist(0, 1) == 1.0);
    REQUIRE(table.dist(0, 0) == 0.0);
    REQUIRE(table.dist(2, 0) == 2.0);
}

TEST_CASE("knot paths match Floyd-Warshall on random skeletons") {
    Rng rng(91);
    for (int trial = 0; trial < 20; ++trial) {
        const Skeleton s = random_skeleton(rng);
        const KnotPathTable table = knot_paths(s);
        const Matrix oracle = floyd_warshall(s);
        const int k = static_cast<int>(s.n_knots());
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
                if (std::isinf(oracle(i, j))) {
                    REQUIRE(std::isinf(table.dist(i, j)));
                } else {
                    REQUIRE(table.dist(i, j) ==
                            Catch::Approx(oracle(i, j)).margin(1e-12).epsilon(
                                1e-12));
                }
            }
        }
    }
}

TEST_CASE("knot paths are infinite across components") {
    Matrix knots(4, 2);
    knots << 0, 0, 1, 0, 10, 0, 11, 0;
    const Skeleton s = make_skeleton(knots, {{0, 1}, {2, 3}});
    REQUIRE(s.component == std::vector<int>{0, 0, 1, 1});
    const KnotPathTable table = knot_paths(s);
    REQUIRE(std::isinf(table.dist(0, 2)));
    REQUIRE(table.dist(0, 1) == 1.0);
    REQUIRE(table.dist(2, 3) == 1.0);
}

TEST_CASE("path table is exactly symmetric") {
    Rng rng(517);
    for (int trial = 0; trial < 10; ++trial) {
        const Skeleton s = random_skeleton(rng, 6, 12);
        const KnotPathTable table = knot_paths(s);
        REQUIRE((table.dist.array() == table.dist.transpose().array()).all());
    }
}

TEST_CASE("projection lands on the orthogonal foot") {
    Matrix knots(2, 2);
    knots << 0, 0, 4, 0;
    const Skeleton s = make_skeleton(knots, {{0, 1}});
    const EdgeLookup lookup(s);

    Vector q(2);
    SECTION("interior point") {
        q << 1, 1;
        const SkeletonPosition p = project(q, s, lookup);
        REQUIRE(p.kind == SkeletonPosition::Kind::edge_point);
        REQUIRE(p.index == 0);
        REQUIRE(p.t == 0.25);
    }
    SECTION("clipped before the lower endpoint") {
        q << -2, 1;
        const SkeletonPosition p = project(q, s, lookup);
        REQUIRE(p == SkeletonPosition::at_knot(0));
    }
    SECTION("clipped past the upper endpoint") {
        q << 6, 1;
        const SkeletonPosition p = project(q, s, lookup);
        REQUIRE(p == SkeletonPosition::at_knot(1));
    }
    SECTION("exact foot at an endpoint collapses to the knot") {
        q << 0, 3;
        REQUIRE(project(q, s, lookup) == SkeletonPosition::at_knot(0));
    }
}

TEST_CASE("projection is orientation independent") {
    // Query closest to the higher-indexed endpoint: the stored parameter must
    // still measure from the lower-indexed one.
    Matrix knots(2, 2);
    knots << 0, 0, 4, 0;
    const Skeleton s = make_skeleton(knots, {{0, 1}});
    const EdgeLookup lookup(s);
    Vector q(2);
    q << 3, 1;
    const SkeletonPosition p = project(q, s, lookup);
    REQUIRE(p.kind == SkeletonPosition::Kind::edge_point);
    REQUIRE(p.t == 0.75);
    const Vector loc = ambient_location(p, s);
    REQUIRE(loc(0) == 3.0);
    REQUIRE(loc(1) == 0.0);
}

TEST_CASE("projection falls back to the nearest knot without an edge") {
    Matrix knots(3, 2);
    knots << 0, 0, 1, 0, 0.5, 5;
    const Skeleton s = make_skeleton(knots, {{0, 2}});  // no edge 0-1
    const EdgeLookup lookup(s);
    Vector q(2);
    q << 0.8, 0.1;  // nearest 1, runner-up 0
    REQUIRE(project(q, s, lookup) == SkeletonPosition::at_knot(1));
}

TEST_CASE("single-knot skeletons absorb every query") {
    Skeleton s;
    s.knots.resize(1, 2);
    s.knots << 3, 3;
    s.component = {0};
    Vector q(2);
    q << -100, 40;
    REQUIRE(project(q, s) == SkeletonPosition::at_knot(0));
}

TEST_CASE("projection rejects dimension mismatches") {
    Matrix knots(2, 2);
    knots << 0, 0, 4, 0;
    const Skeleton s = make_skeleton(knots, {{0, 1}});
    Vector q(3);
    q << 1, 1, 1;
    REQUIRE_THROWS_AS(project(q, s), ShapeError);
}

TEST_CASE("project_all projects every row") {
    Rng rng(12);
    const Skeleton s = random_skeleton(rng, 4, 8);
    Matrix queries(25, 2);
    for (int i = 0; i < 25; ++i)
        for (int j = 0; j < 2; ++j) queries(i, j) = rng.uniform(-2.0, 12.0);
    PointCloud qc;
    qc.points = queries;
    const auto positions = project_all(qc, s);
    REQUIRE(positions.size() == 25);
    const EdgeLookup lookup(s);
    for (int i = 0; i < 25; ++i) {
        REQUIRE(position_valid(positions[static_cast<std::size_t>(i)], s));
        REQUIRE(positions[static_cast<std::size_t>(i)] ==
                project(queries.row(i).transpose(), s, lookup));
    }
}

TEST_CASE("same-edge distance is the parameter gap times the length") {
    const Skeleton s = chain_skeleton({2.0, 3.0});
    const KnotPathTable table = knot_paths(s);
    const auto p = SkeletonPosition::on_edge(0, 0.25);
    const auto q = SkeletonPosition::on_edge(0, 0.75);
    REQUIRE(skeleton_distance(p, q, s, table) == 0.5 * 2.0);
    REQUIRE(skeleton_distance(p, p, s, table) == 0.0);
}

TEST_CASE("chain distances accumulate edge by edge") {
    // Knots at 0, 2, 5, 9 on a line; edge lengths 2, 3, 4.
    const Skeleton s = chain_skeleton({2.0, 3.0, 4.0});
    const KnotPathTable table = knot_paths(s);
    const auto s1 = SkeletonPosition::on_edge(0, 0.25);
    const auto s2 = SkeletonPosition::on_edge(0, 0.5);
    const auto s3 = SkeletonPosition::on_edge(1, 0.5);
    const auto s4 = SkeletonPosition::on_edge(2, 0.5);

    REQUIRE(skeleton_distance(s1, s2, s, table) ==
            Catch::Approx(0.25 * 2.0).margin(1e-12));
    REQUIRE(skeleton_distance(s2, s3, s, table) ==
            Catch::Approx(0.5 * 2.0 + 0.5 * 3.0).margin(1e-12));
    REQUIRE(skeleton_distance(s2, s4, s, table) ==
            Catch::Approx(0.5 * 2.0 + 3.0 + 0.5 * 4.0).margin(1e-12));
    REQUIRE(skeleton_distance(SkeletonPosition::at_knot(0),
                              SkeletonPosition::at_knot(3), s, table) == 9.0);
}

TEST_CASE("distance is infinite across components") {
    Matrix knots(4, 2);
    knots << 0, 0, 1, 0, 10, 0, 11, 0;
    const Skeleton s = make_skeleton(knots, {{0, 1}, {2, 3}});
    const KnotPathTable table = knot_paths(s);
    const double d = skeleton_distance(SkeletonPosition::on_edge(0, 0.5),
                                       SkeletonPosition::on_edge(1, 0.5), s,
                                       table);
    REQUIRE(std::isinf(d));
}

TEST_CASE("distance rejects invalid positions") {
    const Skeleton s = chain_skeleton({1.0});
    const KnotPathTable table = knot_paths(s);
    REQUIRE_THROWS_AS(skeleton_distance(SkeletonPosition::at_knot(5),
                                        SkeletonPosition::at_knot(0), s, table),
                      IndexError);
}

TEST_CASE("metric axioms hold on random skeletons") {
    Rng rng(2024);
    for (int trial = 0; trial < 15; ++trial) {
        const Skeleton s = random_skeleton(rng);
        const KnotPathTable table = knot_paths(s);
        for (int rep = 0; rep < 40; ++rep) {
            const SkeletonPosition p = random_position(s, rng);
            const SkeletonPosition q = random_position(s, rng);
            const SkeletonPosition r = random_position(s, rng);
            const double dpq = skeleton_distance(p, q, s, table);
            const double dqp = skeleton_distance(q, p, s, table);
            const double dpp = skeleton_distance(p, p, s, table);
            REQUIRE(dpq >= 0.0);
            REQUIRE(dpp == 0.0);
            REQUIRE(dpq == dqp);  // exact symmetry
            if (!(p == q)) REQUIRE(dpq > 0.0);

            const double dpr = skeleton_distance(p, r, s, table);
            const double dqr = skeleton_distance(q, r, s, table);
            if (std::isfinite(dpq) && std::isfinite(dqr))
                REQUIRE(dpr <= dpq + dqr + 1e-9);
        }
    }
}

TEST_CASE("distance to a knot equals the anchored path") {
    const Skeleton s = chain_skeleton({2.0, 3.0});
    const KnotPathTable table = knot_paths(s);
    // Position at t = 0.3 on edge 1 (knots 1 to 2, length 3): offset to knot 1
    // is 0.9, to knot 2 is 2.1. Distance to knot 0 goes through knot 1.
    const auto p = SkeletonPosition::on_edge(1, 0.3);
    REQUIRE(skeleton_distance(p, SkeletonPosition::at_knot(0), s, table) ==
            Catch::Approx(2.0 + 0.3 * 3.0).margin(1e-12));
    REQUIRE(skeleton_distance(p, SkeletonPosition::at_knot(2), s, table) ==
            Catch::Approx(0.7 * 3.0).margin(1e-12));
}

TEST_CASE("pairwise distances honor the locality restriction") {
    const Skeleton s = chain_skeleton({1.0, 1.0, 1.0});
    const KnotPathTable table = knot_paths(s);
    const std::vector<SkeletonPosition> queries = {
        SkeletonPosition::on_edge(0, 0.5)};
    const std::vector<SkeletonPosition> data = {
        SkeletonPosition::on_edge(0, 0.25),  // same edge
        SkeletonPosition::on_edge(1, 0.5),   // shares knot 1
        SkeletonPosition::on_edge(2, 0.5),   // no shared knot
        SkeletonPosition::at_knot(1),        // anchor knot of the query edge
        SkeletonPosition::at_knot(3),        // far knot
    };

    const Matrix local = pairwise_distances(queries, data, s, table, true);
    const Matrix full = pairwise_distances(queries, data, s, table, false);
    REQUIRE(local.rows() == 1);
    REQUIRE(local.cols() == 5);

    REQUIRE(local(0, 0) == full(0, 0));
    REQUIRE(local(0, 1) == full(0, 1));
    REQUIRE(std::isinf(local(0, 2)));
    REQUIRE(std::isfinite(full(0, 2)));
    REQUIRE(local(0, 3) == full(0, 3));
    REQUIRE(std::isinf(local(0, 4)));
    REQUIRE(full(0, 4) == Catch::Approx(2.5).margin(1e-12));
    REQUIRE(full(0, 2) == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("projection parameter matches the explicit formula") {
    Rng rng(777);
    for (int trial = 0; trial < 30; ++trial) {
        const Skeleton s = random_skeleton(rng, 4, 9);
        const EdgeLookup lookup(s);
        Vector q(2);
        q << rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0);
        const SkeletonPosition p = project(q, s, lookup);
        REQUIRE(position_valid(p, s));

        const auto [i1, i2] = two_nearest(s.knots, q);
        const int edge = lookup.find(i1, i2);
        if (edge < 0) {
            REQUIRE(p == SkeletonPosition::at_knot(i1));
            continue;
        }
        const Vector a = s.knots.row(i1).transpose();
        const Vector dir = s.knots.row(i2).transpose() - a;
        double t = (q - a).dot(dir) / dir.squaredNorm();
        t = std::clamp(t, 0.0, 1.0);
        if (i1 > i2) t = 1.0 - t;
        REQUIRE(p == canonicalize_position(s, edge, t));

        // Measuring from the opposite endpoint gives the complementary
        // parameter, so the stored position is orientation independent.
        const Vector b = s.knots.row(i2).transpose();
        double t_rev =
            std::clamp((q - b).dot(-dir) / dir.squaredNorm(), 0.0, 1.0);
        if (i2 > i1) t_rev = 1.0 - t_rev;
        if (p.kind == SkeletonPosition::Kind::edge_point)
            REQUIRE(p.t == Catch::Approx(t_rev).margin(1e-12));
    }
}
