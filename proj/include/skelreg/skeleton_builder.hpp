#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace skelreg {

enum class Linkage { single, average };

inline const char* linkage_name(Linkage l) {
    return l == Linkage::single ? "single" : "average";
}

inline Linkage linkage_from_name(const std::string& name) {
    if (name == "single") return Linkage::single;
    if (name == "average") return Linkage::average;
    throw ConfigError("unknown linkage: " + name);
}

// Construction parameters. n_knots == 0 means "choose round(sqrt(n))".
struct BuildConfig {
    int n_knots = 0;
    int restarts = 100;
    int max_iter = 100;
    double tol = 1e-8;
    int min_cell = 0;        // prune knots whose cell has fewer points
    int min_edge_count = 1;  // admit edges seen at least this many times
    int n_components = 1;
    Linkage linkage = Linkage::single;
    std::uint64_t seed = 0;

    void check() const {
        if (n_knots < 0) throw ConfigError("n_knots must be >= 0");
        if (restarts < 1) throw ConfigError("restarts must be >= 1");
        if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
        if (!(tol >= 0.0)) throw ConfigError("tol must be >= 0");
        if (min_cell < 0) throw ConfigError("min_cell must be >= 0");
        if (min_edge_count < 1) throw ConfigError("min_edge_count must be >= 1");
        if (n_components < 1) throw ConfigError("n_components must be >= 1");
    }
};

// Indices of the two distinct nearest rows of `knots` to `x`, by Euclidean
// distance, ties broken toward the lower index. Requires at least two knots.
inline std::pair<int, int> two_nearest(const Matrix& knots,
                                       const Eigen::Ref<const Vector>& x) {
    const int k = static_cast<int>(knots.rows());
    if (k < 2) throw ConfigError("two_nearest requires at least two knots");
    int best = -1, second = -1;
    double d1 = kInfinity, d2 = kInfinity;
    for (int j = 0; j < k; ++j) {
        const double d = (knots.row(j).transpose() - x).squaredNorm();
        if (d < d1) {
            second = best;
            d2 = d1;
            best = j;
            d1 = d;
        } else if (d < d2) {
            second = j;
            d2 = d;
        }
    }
    return {best, second};
}

namespace detail {

// Squared distances from every point to every center, computed blockwise:
// ||x||^2 - 2 x.c + ||c||^2. Tiny negatives from cancellation are clamped.
inline Matrix squared_distances(const Matrix& pts, const Matrix& centers) {
    Matrix d2 = (-2.0 * pts * centers.transpose());
    d2.colwise() += pts.rowwise().squaredNorm();
    d2.rowwise() += centers.rowwise().squaredNorm().transpose();
    return d2.cwiseMax(0.0);
}

inline int nearest_row(const Matrix& d2, int row) {
    int best = 0;
    double bv = d2(row, 0);
    for (int j = 1; j < d2.cols(); ++j) {
        if (d2(row, j) < bv) {
            bv = d2(row, j);
            best = j;
        }
    }
    return best;
}

// Exact within-cluster sum of squares for a fixed assignment.
inline double wcss(const Matrix& pts, const Matrix& centers,
                   const std::vector<int>& assign) {
    double obj = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
        obj += (pts.row(i) - centers.row(assign[static_cast<std::size_t>(i)]))
                   .squaredNorm();
    return obj;
}

// k-means++ seeding: first center uniform, each further center drawn with
// probability proportional to the squared distance to the nearest chosen one.
inline Matrix kmeanspp_init(const Matrix& pts, int k, Rng& rng) {
    const int n = static_cast<int>(pts.rows());
    Matrix centers(k, pts.cols());
    std::vector<double> d2(static_cast<std::size_t>(n), kInfinity);
    int first = rng.below(n);
    centers.row(0) = pts.row(first);
    for (int c = 1; c < k; ++c) {
        for (int i = 0; i < n; ++i) {
            const double d =
                (pts.row(i) - centers.row(c - 1)).squaredNorm();
            d2[static_cast<std::size_t>(i)] =
                std::min(d2[static_cast<std::size_t>(i)], d);
        }
        int pick = rng.weighted(d2);
        if (pick < 0) {
            // All mass at chosen centers (duplicated points): take the first
            // point not already selected.
            pick = 0;
            while (pick < n - 1 && d2[static_cast<std::size_t>(pick)] <= 0.0)
                ++pick;
        }
        centers.row(c) = pts.row(pick);
    }
    return centers;
}

struct LloydResult {
    Matrix centers;
    std::vector<int> assignment;
    double objective = kInfinity;
    std::vector<double> history;  // objective after each assignment pass
};

// Lloyd iterations from the given centers. Empty clusters are re-seeded to
// the point currently farthest from its own center, which keeps the objective
// non-increasing. Stops when the assignment is stable or the relative
// objective improvement drops below tol.
inline LloydResult lloyd(const Matrix& pts, Matrix centers, int max_iter,
                         double tol) {
    const int n = static_cast<int>(pts.rows());
    const int k = static_cast<int>(centers.rows());
    LloydResult res;
    res.assignment.assign(static_cast<std::size_t>(n), -1);
    double prev_obj = kInfinity;

    for (int iter = 0; iter < max_iter; ++iter) {
        const Matrix d2 = squared_distances(pts, centers);
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            const int a = nearest_row(d2, i);
            if (a != res.assignment[static_cast<std::size_t>(i)]) {
                res.assignment[static_cast<std::size_t>(i)] = a;
                changed = true;
            }
        }
        const double obj = wcss(pts, centers, res.assignment);
        res.history.push_back(obj);
        res.centers = centers;
        res.objective = obj;
        if (!changed) break;
        if (prev_obj < kInfinity && prev_obj > 0.0 &&
            (prev_obj - obj) / prev_obj < tol)
            break;
        if (obj == 0.0) break;
        prev_obj = obj;

        // Update step.
        Matrix sums = Matrix::Zero(k, pts.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int i = 0; i < n; ++i) {
            const int a = res.assignment[static_cast<std::size_t>(i)];
            sums.row(a) += pts.row(i);
            ++counts[static_cast<std::size_t>(a)];
        }
        std::vector<char> reseeded(static_cast<std::size_t>(n), 0);
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centers.row(c) =
                    sums.row(c) / counts[static_cast<std::size_t>(c)];
            } else {
                // Re-seed at the point farthest from its assigned center.
                int far = -1;
                double fd = -1.0;
                for (int i = 0; i < n; ++i) {
                    if (reseeded[static_cast<std::size_t>(i)]) continue;
                    const double d =
                        (pts.row(i) -
                         centers.row(res.assignment[static_cast<std::size_t>(i)]))
                            .squaredNorm();
                    if (d > fd) {
                        fd = d;
                        far = i;
                    }
                }
                centers.row(c) = pts.row(far);
                reseeded[static_cast<std::size_t>(far)] = 1;
            }
        }
    }
    return res;
}

}  // namespace detail

struct BuildKnotsResult {
    Matrix knots;                 // k x d
    std::vector<int> assignment;  // nearest knot per point
    double objective = kInfinity;
    std::vector<double> objective_history;  // of the winning restart
};

// Restarted k-means. Each restart draws its own seeding stream from
// (cfg.seed, restart index); the restart with the strictly smallest final
// objective wins, so the result is independent of evaluation order.
inline BuildKnotsResult build_knots(const PointCloud& cloud,
                                    const BuildConfig& cfg) {
    cloud.check();
    cfg.check();
    const int n = static_cast<int>(cloud.size());
    const int k = cfg.n_knots > 0
                      ? cfg.n_knots
                      : static_cast<int>(std::lround(std::sqrt(double(n))));
    if (k < 1 || k > n)
        throw ConfigError("n_knots must lie in [1, n]");

    BuildKnotsResult best;
    for (int r = 0; r < cfg.restarts; ++r) {
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(r)));
        Matrix init = detail::kmeanspp_init(cloud.points, k, rng);
        detail::LloydResult run =
            detail::lloyd(cloud.points, std::move(init), cfg.max_iter, cfg.tol);
        if (run.objective < best.objective) {
            best.knots = std::move(run.centers);
            best.assignment = std::move(run.assignment);
            best.objective = run.objective;
            best.objective_history = std::move(run.history);
        }
    }
    return best;
}

struct PruneResult {
    Matrix knots;
    std::vector<int> assignment;  // re-indexed to surviving knots
    std::vector<int> kept;        // surviving original knot indices, ascending
};

// Drops knots whose cell holds fewer than min_cell points and re-assigns the
// orphaned points to the nearest surviving knot (ties toward the lower
// index). Throws DegenerateError when nothing survives.
inline PruneResult prune_knots(const PointCloud& cloud, const Matrix& knots,
                               const std::vector<int>& assignment,
                               int min_cell) {
    const int k = static_cast<int>(knots.rows());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int a : assignment) ++counts[static_cast<std::size_t>(a)];

    PruneResult res;
    std::vector<int> remap(static_cast<std::size_t>(k), -1);
    for (int j = 0; j < k; ++j) {
        if (counts[static_cast<std::size_t>(j)] >= min_cell) {
            remap[static_cast<std::size_t>(j)] =
                static_cast<int>(res.kept.size());
            res.kept.push_back(j);
        }
    }
    if (res.kept.empty())
        throw DegenerateError("min_cell pruned every knot");

    res.knots.resize(static_cast<Eigen::Index>(res.kept.size()), knots.cols());
    for (std::size_t r = 0; r < res.kept.size(); ++r)
        res.knots.row(static_cast<Eigen::Index>(r)) = knots.row(res.kept[r]);

    res.assignment.resize(assignment.size());
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        res.assignment[i] = remap[static_cast<std::size_t>(assignment[i])];
        if (res.assignment[i] >= 0) continue;
        int best = 0;
        double bd = kInfinity;
        for (std::size_t r = 0; r < res.kept.size(); ++r) {
            const double d =
                (cloud.points.row(static_cast<Eigen::Index>(i)) -
                 res.knots.row(static_cast<Eigen::Index>(r)))
                    .squaredNorm();
            if (d < bd) {
                bd = d;
                best = static_cast<int>(r);
            }
        }
        res.assignment[i] = best;
    }
    return res;
}

// Two nearest knots for every point, as an n x 2 index matrix. Column 0 is
// the nearest, column 1 the runner-up.
inline Eigen::MatrixX2i assign_two_nn(const PointCloud& cloud,
                                      const Matrix& knots) {
    if (knots.rows() < 2)
        throw ConfigError("assign_two_nn requires at least two knots");
    if (knots.cols() != cloud.points.cols())
        throw ShapeError("knot dimension does not match point dimension");
    Eigen::MatrixX2i nn(cloud.size(), 2);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        auto [a, b] = two_nearest(knots, cloud.points.row(i).transpose());
        nn(i, 0) = a;
        nn(i, 1) = b;
    }
    return nn;
}

// Aggregates the two-nearest pairs into undirected edges with Voronoi-density
// weights: vd = (count / n) / ||V_i - V_j||. Edges seen fewer than
// min_edge_count times are dropped. Coincident knots cannot carry an edge.
inline std::vector<EdgeRecord> build_edges(const Eigen::MatrixX2i& two_nn,
                                           const Matrix& knots, int n_points,
                                           int min_edge_count = 1) {
    std::map<std::pair<int, int>, int> counts;
    for (Eigen::Index r = 0; r < two_nn.rows(); ++r) {
        int a = two_nn(r, 0), b = two_nn(r, 1);
        if (a > b) std::swap(a, b);
        ++counts[{a, b}];
    }
    std::vector<EdgeRecord> edges;
    edges.reserve(counts.size());
    for (const auto& [pair, count] : counts) {
        if (count < min_edge_count) continue;
        EdgeRecord e;
        e.i = pair.first;
        e.j = pair.second;
        e.count = count;
        e.length = (knots.row(e.i) - knots.row(e.j)).norm();
        if (!(e.length > 0.0))
            throw DegenerateError("edge joins coincident knots");
        e.vd_weight = (static_cast<double>(count) / n_points) / e.length;
        edges.push_back(e);
    }
    return edges;
}

struct SegmentResult {
    std::vector<int> labels;        // per knot, 0-based, ordered by first member
    std::vector<EdgeRecord> edges;  // edges whose endpoints share a label
};

// Agglomerative clustering of the knot graph. Similarity s = vd_weight turns
// into dissimilarity (max s) - s on edges and +inf between non-adjacent
// knots, so non-adjacent groups merge only when forced. Linkage is single or
// average; ties pick the pair with the lexicographically smallest
// (first member of A, first member of B).
inline SegmentResult segment_skeleton(int n_knots,
                                      const std::vector<EdgeRecord>& edges,
                                      int n_components, Linkage linkage) {
    if (n_components < 1 || n_components > n_knots)
        throw ConfigError("n_components must lie in [1, n_knots]");

    double s_max = 0.0;
    for (const auto& e : edges) s_max = std::max(s_max, e.vd_weight);
    Matrix diss = Matrix::Constant(n_knots, n_knots, kInfinity);
    for (const auto& e : edges) {
        const double d = s_max - e.vd_weight;
        diss(e.i, e.j) = d;
        diss(e.j, e.i) = d;
    }

    std::vector<std::vector<int>> members;
    members.reserve(static_cast<std::size_t>(n_knots));
    for (int j = 0; j < n_knots; ++j) members.push_back({j});

    auto linkage_distance = [&](const std::vector<int>& a,
                                const std::vector<int>& b) {
        if (linkage == Linkage::single) {
            double best = kInfinity;
            for (int u : a)
                for (int v : b) best = std::min(best, diss(u, v));
            return best;
        }
        double sum = 0.0;
        for (int u : a)
            for (int v : b) sum += diss(u, v);
        return sum / (static_cast<double>(a.size()) * b.size());
    };

    while (static_cast<int>(members.size()) > n_components) {
        double best = kInfinity;
        std::size_t bi = 0, bj = 1;
        bool found = false;
        for (std::size_t i = 0; i + 1 < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                const double d = linkage_distance(members[i], members[j]);
                if (!found || d < best ||
                    (d == best &&
                     std::pair(members[i][0], members[j][0]) <
                         std::pair(members[bi][0], members[bj][0]))) {
                    best = d;
                    bi = i;
                    bj = j;
                    found = true;
                }
            }
        }
        std::vector<int> merged;
        merged.reserve(members[bi].size() + members[bj].size());
        std::merge(members[bi].begin(), members[bi].end(), members[bj].begin(),
                   members[bj].end(), std::back_inserter(merged));
        members[bi] = std::move(merged);
        members.erase(members.begin() + static_cast<std::ptrdiff_t>(bj));
    }

    // Clusters are ordered by their smallest member already (merging keeps
    // the smaller representative in place), so labels follow member order.
    std::sort(members.begin(), members.end());
    SegmentResult res;
    res.labels.assign(static_cast<std::size_t>(n_knots), -1);
    for (std::size_t c = 0; c < members.size(); ++c)
        for (int v : members[c])
            res.labels[static_cast<std::size_t>(v)] = static_cast<int>(c);
    for (const auto& e : edges)
        if (res.labels[static_cast<std::size_t>(e.i)] ==
            res.labels[static_cast<std::size_t>(e.j)])
            res.edges.push_back(e);
    return res;
}

// Full pipeline: knots, pruning, two-nearest assignment, edge aggregation,
// segmentation. The returned skeleton's meta block snapshots the resolved
// configuration.
inline Skeleton build_skeleton(const PointCloud& cloud,
                               const BuildConfig& cfg) {
    cloud.check();
    cfg.check();

    BuildKnotsResult km = build_knots(cloud, cfg);
    PruneResult pruned =
        prune_knots(cloud, km.knots, km.assignment, cfg.min_cell);
    const int k = static_cast<int>(pruned.knots.rows());

    Skeleton s;
    s.knots = pruned.knots;
    if (k == 1) {
        if (cfg.n_components != 1)
            throw ConfigError("n_components must be 1 for a single-knot skeleton");
        s.component = {0};
    } else {
        Eigen::MatrixX2i nn = assign_two_nn(cloud, pruned.knots);
        std::vector<EdgeRecord> edges =
            build_edges(nn, pruned.knots, static_cast<int>(cloud.size()),
                        cfg.min_edge_count);
        SegmentResult seg =
            segment_skeleton(k, edges, cfg.n_components, cfg.linkage);
        s.edges = std::move(seg.edges);
        s.component = std::move(seg.labels);
    }

    s.meta = json::object();
    s.meta["n_points"] = static_cast<int>(cloud.size());
    s.meta["n_knots"] = k;
    s.meta["restarts"] = cfg.restarts;
    s.meta["max_iter"] = cfg.max_iter;
    s.meta["tol"] = cfg.tol;
    s.meta["min_cell"] = cfg.min_cell;
    s.meta["min_edge_count"] = cfg.min_edge_count;
    s.meta["n_components"] = cfg.n_components;
    s.meta["linkage"] = linkage_name(cfg.linkage);
    s.meta["seed"] = cfg.seed;
    s.meta["objective"] = km.objective;
    return s;
}

}  // namespace skelreg
