#pragma once

#include <algorithm>
#include <array>
#include <queue>
#include <utility>
#include <vector>

#include "core.hpp"
#include "skeleton_builder.hpp"

namespace skelreg {

// All-pairs shortest path lengths through the knot graph, edge weights being
// edge lengths. dist(i, j) is +inf when no path exists (distinct components,
// or a component whose edges were severed).
struct KnotPathTable {
    Matrix dist;  // k x k, symmetric, zero diagonal
};

// Dijkstra from every source. Skeleton graphs stay small (k ~ sqrt(n)), so
// repeated scans beat heavier all-pairs machinery.
inline KnotPathTable knot_paths(const Skeleton& s) {
    const int k = s.n_knots();
    std::vector<std::vector<std::pair<int, double>>> adj(
        static_cast<std::size_t>(k));
    for (const auto& e : s.edges) {
        adj[static_cast<std::size_t>(e.i)].push_back({e.j, e.length});
        adj[static_cast<std::size_t>(e.j)].push_back({e.i, e.length});
    }

    KnotPathTable table;
    table.dist = Matrix::Constant(k, k, kInfinity);
    using Item = std::pair<double, int>;  // (distance, knot)
    for (int src = 0; src < k; ++src) {
        auto row = table.dist.row(src);
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        row(src) = 0.0;
        heap.push({0.0, src});
        while (!heap.empty()) {
            auto [d, u] = heap.top();
            heap.pop();
            if (d > row(u)) continue;
            for (auto [v, w] : adj[static_cast<std::size_t>(u)]) {
                const double nd = d + w;
                if (nd < row(v)) {
                    row(v) = nd;
                    heap.push({nd, v});
                }
            }
        }
    }
    // Opposite sweep directions can round a path sum differently in the last
    // bit; taking the entrywise minimum pins dist to a symmetric matrix.
    table.dist = table.dist.cwiseMin(table.dist.transpose().eval()).eval();
    return table;
}

// Projection onto the skeleton. The point's two nearest knots determine the
// candidate edge; if that edge exists, the point lands at the clipped
// orthogonal foot along it, otherwise it collapses to the nearest knot.
inline SkeletonPosition project(const Eigen::Ref<const Vector>& x,
                                const Skeleton& s, const EdgeLookup& lookup) {
    if (x.size() != s.dim())
        throw ShapeError("project: point dimension does not match skeleton");
    if (s.n_knots() == 1) return SkeletonPosition::at_knot(0);

    auto [i1, i2] = two_nearest(s.knots, x);
    const int e = lookup.find(i1, i2);
    if (e < 0) return SkeletonPosition::at_knot(i1);

    const Vector a = s.knots.row(i1).transpose();
    const Vector b = s.knots.row(i2).transpose();
    const Vector dir = b - a;
    double t = (x - a).dot(dir) / dir.squaredNorm();
    t = std::clamp(t, 0.0, 1.0);
    // Store t from the lower-indexed endpoint of the edge.
    if (i1 > i2) t = 1.0 - t;
    return canonicalize_position(s, e, t);
}

inline SkeletonPosition project(const Eigen::Ref<const Vector>& x,
                                const Skeleton& s) {
    EdgeLookup lookup(s);
    return project(x, s, lookup);
}

// Projects every row of the cloud.
inline std::vector<SkeletonPosition> project_all(const PointCloud& cloud,
                                                 const Skeleton& s) {
    EdgeLookup lookup(s);
    std::vector<SkeletonPosition> out;
    out.reserve(static_cast<std::size_t>(cloud.size()));
    for (Eigen::Index i = 0; i < cloud.size(); ++i)
        out.push_back(project(cloud.points.row(i).transpose(), s, lookup));
    return out;
}

namespace detail {

// A position touches one knot (itself) or the two endpoints of its edge;
// the offset is the along-edge distance to that knot.
struct Anchors {
    std::array<std::pair<int, double>, 2> knot_offset;
    int count = 0;
};

inline Anchors anchors_of(const SkeletonPosition& p, const Skeleton& s) {
    Anchors a;
    if (p.kind == SkeletonPosition::Kind::knot) {
        a.knot_offset[0] = {p.index, 0.0};
        a.count = 1;
        return a;
    }
    const EdgeRecord& e = s.edges[static_cast<std::size_t>(p.index)];
    a.knot_offset[0] = {e.i, p.t * e.length};
    a.knot_offset[1] = {e.j, (1.0 - p.t) * e.length};
    a.count = 2;
    return a;
}

}  // namespace detail

// Distance along the skeleton between two positions:
//   - +inf when the positions sit in different components,
//   - straight-line distance when both share one edge,
//   - otherwise the cheapest way from p to a knot, through the graph, and
//     out to q: min over endpoint pairs of offset_p + path + offset_q.
// Candidate sums are formed symmetrically, so d(p, q) == d(q, p) exactly.
inline double skeleton_distance(const SkeletonPosition& p,
                                const SkeletonPosition& q, const Skeleton& s,
                                const KnotPathTable& table) {
    if (!position_valid(p, s) || !position_valid(q, s))
        throw IndexError("skeleton_distance: position does not lie on this skeleton");
    if (position_component(p, s) != position_component(q, s)) return kInfinity;

    if (p.kind == SkeletonPosition::Kind::edge_point &&
        q.kind == SkeletonPosition::Kind::edge_point && p.index == q.index) {
        return std::abs(p.t - q.t) *
               s.edges[static_cast<std::size_t>(p.index)].length;
    }

    const detail::Anchors ap = detail::anchors_of(p, s);
    const detail::Anchors aq = detail::anchors_of(q, s);
    double best = kInfinity;
    for (int u = 0; u < ap.count; ++u) {
        for (int v = 0; v < aq.count; ++v) {
            const auto [ku, ou] = ap.knot_offset[static_cast<std::size_t>(u)];
            const auto [kv, ov] = aq.knot_offset[static_cast<std::size_t>(v)];
            const double cand = (ou + ov) + table.dist(ku, kv);
            best = std::min(best, cand);
        }
    }
    return best;
}

// Knots a position touches, for the locality rule.
inline std::array<int, 2> touched_knots(const SkeletonPosition& p,
                                        const Skeleton& s) {
    if (p.kind == SkeletonPosition::Kind::knot) return {p.index, p.index};
    const EdgeRecord& e = s.edges[static_cast<std::size_t>(p.index)];
    return {e.i, e.j};
}

// Distance matrix between query positions (rows) and dataset positions
// (columns). With locality on, a distance is computed only when the two
// positions touch a common knot; all other entries are +inf. This confines
// kernel and neighbor weights to adjacent cells of the skeleton.
inline Matrix pairwise_distances(const std::vector<SkeletonPosition>& queries,
                                 const std::vector<SkeletonPosition>& data,
                                 const Skeleton& s, const KnotPathTable& table,
                                 bool locality) {
    Matrix out(static_cast<Eigen::Index>(queries.size()),
               static_cast<Eigen::Index>(data.size()));
    for (std::size_t r = 0; r < queries.size(); ++r) {
        const auto qk = touched_knots(queries[r], s);
        for (std::size_t c = 0; c < data.size(); ++c) {
            if (locality) {
                const auto dk = touched_knots(data[c], s);
                const bool share = qk[0] == dk[0] || qk[0] == dk[1] ||
                                   qk[1] == dk[0] || qk[1] == dk[1];
                if (!share) {
                    out(static_cast<Eigen::Index>(r),
                        static_cast<Eigen::Index>(c)) = kInfinity;
                    continue;
                }
            }
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                skeleton_distance(queries[r], data[c], s, table);
        }
    }
    return out;
}

}  // namespace skelreg
