#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

namespace skelreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using json = nlohmann::json;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Errors. All user-facing failures are typed exceptions; numerical fallbacks
// never happen silently.
// ---------------------------------------------------------------------------

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Input admits no valid result (e.g. every knot pruned away).
struct DegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A prediction has no finite-weight support at the query.
struct NoSupportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative solver hit its cap; carries the residual gap it stopped at.
struct ConvergenceError : std::runtime_error {
    double gap;
    ConvergenceError(const std::string& msg, double g)
        : std::runtime_error(msg), gap(g) {}
};

// ---------------------------------------------------------------------------
// Data containers.
// ---------------------------------------------------------------------------

// Points in ambient space, optionally paired with responses.
struct PointCloud {
    Matrix points;                    // n x d, row per observation
    std::optional<Vector> responses;  // length n when present

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }

    // Throws ShapeError unless n >= 1, d >= 1, all entries finite, and the
    // response length matches n.
    void check() const {
        if (points.rows() < 1 || points.cols() < 1)
            throw ShapeError("point cloud must have at least one row and one column");
        if (!points.allFinite())
            throw ShapeError("point cloud contains non-finite coordinates");
        if (responses) {
            if (responses->size() != points.rows())
                throw ShapeError("response length does not match point count");
            if (!responses->allFinite())
                throw ShapeError("responses contain non-finite values");
        }
    }
};

// Undirected edge between knots i < j. `length` is the Euclidean distance
// between the knot locations; `vd_weight` is the Voronoi-density similarity
// (count / n) / length; `count` is the number of points whose two nearest
// knots were {i, j}.
struct EdgeRecord {
    int i = 0;
    int j = 0;
    double length = 0.0;
    double vd_weight = 0.0;
    int count = 0;
};

// A skeleton graph embedded in ambient space: knot locations, weighted edges,
// and a per-knot component label. `meta` carries the construction config
// snapshot; it is round-tripped by the serializers but never interpreted.
struct Skeleton {
    Matrix knots;                // k x d
    std::vector<EdgeRecord> edges;
    std::vector<int> component;  // length k
    json meta = json::object();

    int n_knots() const { return static_cast<int>(knots.rows()); }
    int dim() const { return static_cast<int>(knots.cols()); }
    int n_edges() const { return static_cast<int>(edges.size()); }
};

// O(1) undirected edge lookup built once per skeleton traversal.
class EdgeLookup {
public:
    explicit EdgeLookup(const Skeleton& s) : k_(s.n_knots()) {
        map_.reserve(s.edges.size());
        for (int e = 0; e < s.n_edges(); ++e) {
            map_.emplace(key(s.edges[e].i, s.edges[e].j), e);
        }
    }

    // Edge index joining knots a and b (either order), or -1 if absent.
    int find(int a, int b) const {
        if (a > b) std::swap(a, b);
        auto it = map_.find(key(a, b));
        return it == map_.end() ? -1 : it->second;
    }

private:
    std::int64_t key(int i, int j) const {
        return static_cast<std::int64_t>(i) * k_ + j;
    }
    int k_;
    std::unordered_map<std::int64_t, int> map_;
};

// ---------------------------------------------------------------------------
// Positions on a skeleton.
// ---------------------------------------------------------------------------

// A point on the skeleton: either exactly a knot, or a point in the interior
// of an edge. For edge points, t in (0, 1) measures the fraction of the edge
// traversed from the lower-indexed endpoint; endpoints themselves are always
// represented as knots, so the representation is unique.
struct SkeletonPosition {
    enum class Kind { knot, edge_point };

    Kind kind = Kind::knot;
    int index = 0;   // knot index, or edge index, per `kind`
    double t = 0.0;  // edge parameter; 0 for knot positions

    static SkeletonPosition at_knot(int j) { return {Kind::knot, j, 0.0}; }
    static SkeletonPosition on_edge(int e, double t) {
        return {Kind::edge_point, e, t};
    }

    friend bool operator==(const SkeletonPosition&,
                           const SkeletonPosition&) = default;
};

// Maps (edge_index, t in [0, 1]) to the canonical unique representation:
// boundary values collapse to knot positions, interior values stay on the
// edge. Throws IndexError for an invalid edge index and ConfigError for t
// outside [0, 1].
inline SkeletonPosition canonicalize_position(const Skeleton& s, int edge_index,
                                              double t) {
    if (edge_index < 0 || edge_index >= s.n_edges())
        throw IndexError("canonicalize_position: edge index out of range");
    if (!(t >= 0.0 && t <= 1.0))
        throw ConfigError("canonicalize_position: t must lie in [0, 1]");
    const EdgeRecord& e = s.edges[static_cast<std::size_t>(edge_index)];
    if (t == 0.0) return SkeletonPosition::at_knot(e.i);
    if (t == 1.0) return SkeletonPosition::at_knot(e.j);
    return SkeletonPosition::on_edge(edge_index, t);
}

inline bool position_valid(const SkeletonPosition& p, const Skeleton& s) {
    if (p.kind == SkeletonPosition::Kind::knot)
        return p.index >= 0 && p.index < s.n_knots();
    return p.index >= 0 && p.index < s.n_edges() && p.t > 0.0 && p.t < 1.0;
}

// Ambient coordinates of a skeleton position: the knot location, or the
// convex combination (1 - t) * V_i + t * V_j along the edge.
inline Vector ambient_location(const SkeletonPosition& p, const Skeleton& s) {
    if (!position_valid(p, s))
        throw IndexError("ambient_location: position does not lie on this skeleton");
    if (p.kind == SkeletonPosition::Kind::knot)
        return s.knots.row(p.index).transpose();
    const EdgeRecord& e = s.edges[static_cast<std::size_t>(p.index)];
    return ((1.0 - p.t) * s.knots.row(e.i) + p.t * s.knots.row(e.j)).transpose();
}

// Component label of the knot (or edge) the position lives on.
inline int position_component(const SkeletonPosition& p, const Skeleton& s) {
    if (!position_valid(p, s))
        throw IndexError("position_component: position does not lie on this skeleton");
    if (p.kind == SkeletonPosition::Kind::knot)
        return s.component[static_cast<std::size_t>(p.index)];
    return s.component[static_cast<std::size_t>(
        s.edges[static_cast<std::size_t>(p.index)].i)];
}

// ---------------------------------------------------------------------------
// Structural validation.
// ---------------------------------------------------------------------------

// One broken invariant; `a` and `b` are the offending knot or edge indices
// (-1 when not applicable).
struct SkeletonViolation {
    std::string invariant;
    int a = -1;
    int b = -1;
    std::string detail;
};

// Checks every structural invariant a skeleton must satisfy and returns one
// entry per violation (empty means valid):
//   - at least one knot, finite knot coordinates
//   - component label per knot
//   - edge endpoints are distinct, in-range, and ordered i < j
//   - no duplicate undirected edge
//   - every edge joins knots with equal component labels
//   - edge length is positive and matches the embedded Euclidean distance
//   - vd_weight and count are non-negative
inline std::vector<SkeletonViolation> validate_skeleton(const Skeleton& s) {
    std::vector<SkeletonViolation> out;
    const int k = s.n_knots();
    if (k < 1) {
        out.push_back({"knot_count", -1, -1, "skeleton has no knots"});
        return out;
    }
    if (!s.knots.allFinite())
        out.push_back({"knot_finite", -1, -1, "knot coordinates contain non-finite values"});
    if (static_cast<int>(s.component.size()) != k) {
        out.push_back({"component_size", -1, -1,
                       "component label count does not match knot count"});
        return out;  // downstream checks index into component
    }

    std::unordered_map<std::int64_t, int> seen;
    for (int e = 0; e < s.n_edges(); ++e) {
        const EdgeRecord& r = s.edges[static_cast<std::size_t>(e)];
        if (r.i < 0 || r.i >= k || r.j < 0 || r.j >= k) {
            out.push_back({"endpoint_range", e, -1, "edge endpoint out of range"});
            continue;
        }
        if (r.i == r.j) {
            out.push_back({"self_loop", e, -1, "edge joins a knot to itself"});
            continue;
        }
        if (r.i > r.j)
            out.push_back({"endpoint_order", e, -1, "endpoints not stored as i < j"});
        const int lo = std::min(r.i, r.j), hi = std::max(r.i, r.j);
        const std::int64_t key = static_cast<std::int64_t>(lo) * k + hi;
        auto [it, fresh] = seen.emplace(key, e);
        if (!fresh)
            out.push_back({"duplicate_edge", e, it->second, "undirected edge repeated"});
        if (s.component[static_cast<std::size_t>(r.i)] !=
            s.component[static_cast<std::size_t>(r.j)])
            out.push_back({"edge_crosses_components", e, -1,
                           "edge joins knots in different components"});
        const double euclid = (s.knots.row(r.i) - s.knots.row(r.j)).norm();
        if (!(r.length > 0.0)) {
            out.push_back({"edge_length_positive", e, -1, "edge length must be > 0"});
        } else if (std::abs(r.length - euclid) >
                   1e-12 * std::max(1.0, euclid)) {
            out.push_back({"edge_length_euclidean", e, -1,
                           "stored length disagrees with embedded distance"});
        }
        if (!(r.vd_weight >= 0.0))
            out.push_back({"vd_weight_nonnegative", e, -1, "negative similarity weight"});
        if (r.count < 0)
            out.push_back({"count_nonnegative", e, -1, "negative edge count"});
    }
    return out;
}

// Points already projected onto a skeleton, with their responses. The
// skeleton is shared, not owned, so several datasets (CV folds, grids) can
// reference one build.
struct RegressionDataset {
    std::vector<SkeletonPosition> positions;
    Vector responses;
    std::shared_ptr<const Skeleton> skeleton;

    Eigen::Index size() const {
        return static_cast<Eigen::Index>(positions.size());
    }

    void check() const {
        if (!skeleton) throw ShapeError("dataset has no skeleton");
        if (responses.size() != size())
            throw ShapeError("dataset response length does not match positions");
        for (const auto& p : positions)
            if (!position_valid(p, *skeleton))
                throw IndexError("dataset position does not lie on its skeleton");
    }
};

}  // namespace skelreg
