#pragma once

// Shared fixtures for the test suites: hand-built and randomly generated
// skeletons with consistent lengths, weights, and component labels.

#include <numeric>
#include <utility>
#include <vector>

#include "skelreg/skelreg.hpp"

namespace test_helpers {

using namespace skelreg;

// Skeleton from explicit knots and edge pairs. Lengths are derived from the
// embedding, weights get an arbitrary valid value, and component labels come
// from graph connectivity (ordered by smallest member).
inline Skeleton make_skeleton(Matrix knots,
                              const std::vector<std::pair<int, int>>& pairs) {
    Skeleton s;
    s.knots = std::move(knots);
    const int k = s.n_knots();
    const int n_edges = static_cast<int>(pairs.size());
    for (auto [a, b] : pairs) {
        EdgeRecord e;
        e.i = std::min(a, b);
        e.j = std::max(a, b);
        e.length = (s.knots.row(e.i) - s.knots.row(e.j)).norm();
        e.count = 1;
        e.vd_weight = (1.0 / std::max(1, n_edges)) / e.length;
        s.edges.push_back(e);
    }

    std::vector<int> root(static_cast<std::size_t>(k));
    std::iota(root.begin(), root.end(), 0);
    auto find = [&root](int v) {
        while (root[static_cast<std::size_t>(v)] != v)
            v = root[static_cast<std::size_t>(v)] =
                root[static_cast<std::size_t>(root[static_cast<std::size_t>(v)])];
        return v;
    };
    for (const auto& e : s.edges) {
        const int ra = find(e.i), rb = find(e.j);
        if (ra != rb) root[static_cast<std::size_t>(std::max(ra, rb))] =
            std::min(ra, rb);
    }
    std::vector<int> label(static_cast<std::size_t>(k), -1);
    int next = 0;
    for (int v = 0; v < k; ++v) {
        const int r = find(v);
        if (label[static_cast<std::size_t>(r)] < 0)
            label[static_cast<std::size_t>(r)] = next++;
        label[static_cast<std::size_t>(v)] = label[static_cast<std::size_t>(r)];
    }
    s.component = std::move(label);
    return s;
}

// Knots on the x axis joined in a chain with the given segment lengths.
inline Skeleton chain_skeleton(const std::vector<double>& lengths) {
    Matrix knots(static_cast<Eigen::Index>(lengths.size()) + 1, 2);
    double x = 0.0;
    knots(0, 0) = 0.0;
    knots(0, 1) = 0.0;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        x += lengths[i];
        knots(static_cast<Eigen::Index>(i) + 1, 0) = x;
        knots(static_cast<Eigen::Index>(i) + 1, 1) = 0.0;
    }
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < lengths.size(); ++i)
        pairs.push_back({static_cast<int>(i), static_cast<int>(i) + 1});
    return make_skeleton(std::move(knots), pairs);
}

// Random connected skeleton in the plane: a spanning tree plus a few chords.
inline Skeleton random_skeleton(Rng& rng, int min_knots = 3,
                                int max_knots = 10) {
    const int k = min_knots + rng.below(max_knots - min_knots + 1);
    Matrix knots(k, 2);
    for (int i = 0; i < k; ++i) {
        knots(i, 0) = rng.uniform(0.0, 10.0);
        knots(i, 1) = rng.uniform(0.0, 10.0);
    }
    std::vector<std::pair<int, int>> pairs;
    for (int i = 1; i < k; ++i) pairs.push_back({rng.below(i), i});
    for (int extra = 0; extra < k / 3; ++extra) {
        const int a = rng.below(k), b = rng.below(k);
        if (a == b) continue;
        const auto p = std::pair(std::min(a, b), std::max(a, b));
        bool dup = false;
        for (const auto& q : pairs)
            if (std::pair(std::min(q.first, q.second),
                          std::max(q.first, q.second)) == p)
                dup = true;
        if (!dup) pairs.push_back(p);
    }
    return make_skeleton(std::move(knots), pairs);
}

// Uniformly random position on a skeleton (knot or edge interior).
inline SkeletonPosition random_position(const Skeleton& s, Rng& rng) {
    if (s.n_edges() > 0 && rng.uniform01() < 0.7) {
        const int e = rng.below(s.n_edges());
        const double t = rng.uniform(0.0, 1.0);
        return canonicalize_position(s, e, t);
    }
    return SkeletonPosition::at_knot(rng.below(s.n_knots()));
}

}  // namespace test_helpers
