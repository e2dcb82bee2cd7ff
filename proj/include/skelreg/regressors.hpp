#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "core.hpp"
#include "projection.hpp"

namespace skelreg {

// Mean distance from a knot to its nearest same-component neighbor knot.
// Knots that are alone in their component contribute nothing; if every knot
// is alone the scale is undefined.
inline double r_hns(const Skeleton& s) {
    const int k = s.n_knots();
    double sum = 0.0;
    int contributors = 0;
    for (int i = 0; i < k; ++i) {
        double best = kInfinity;
        for (int j = 0; j < k; ++j) {
            if (j == i || s.component[static_cast<std::size_t>(j)] !=
                              s.component[static_cast<std::size_t>(i)])
                continue;
            best = std::min(best, (s.knots.row(i) - s.knots.row(j)).norm());
        }
        if (best < kInfinity) {
            sum += best;
            ++contributors;
        }
    }
    if (contributors == 0)
        throw DegenerateError("r_hns undefined: every component is a single knot");
    return sum / contributors;
}

enum class KernelFamily { gaussian, epanechnikov };

inline const char* kernel_name(KernelFamily f) {
    return f == KernelFamily::gaussian ? "gaussian" : "epanechnikov";
}

inline KernelFamily kernel_from_name(const std::string& name) {
    if (name == "gaussian") return KernelFamily::gaussian;
    if (name == "epanechnikov") return KernelFamily::epanechnikov;
    throw ConfigError("unknown kernel: " + name);
}

inline double kernel_weight(KernelFamily f, double u) {
    if (f == KernelFamily::gaussian) return std::exp(-0.5 * u * u);
    return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
}

// Bandwidth, either absolute or as a multiple of the skeleton's r_hns scale.
struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    double bandwidth = 1.0;
    bool rhns_multiple = false;

    double resolve(const Skeleton& s) const {
        const double h = rhns_multiple ? bandwidth * r_hns(s) : bandwidth;
        if (!(h > 0.0)) throw ConfigError("bandwidth must be > 0");
        return h;
    }
};

struct PredictOptions {
    // When a query has no support, fall back to the mean training response in
    // the query's component instead of throwing. Off by default so silent
    // smoothing never happens unasked.
    bool component_mean_fallback = false;
};

namespace detail {

inline double component_mean_response(const RegressionDataset& train,
                                      const SkeletonPosition& query) {
    const int qc = position_component(query, *train.skeleton);
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index i = 0; i < train.size(); ++i) {
        if (position_component(train.positions[static_cast<std::size_t>(i)],
                               *train.skeleton) == qc) {
            sum += train.responses(i);
            ++count;
        }
    }
    if (count == 0)
        throw NoSupportError("no training responses in the query's component");
    return sum / count;
}

}  // namespace detail

// Kernel regression along the skeleton: weighted mean of training responses
// with weights K(d_i / h), d_i the precomputed skeleton distances from the
// query to each training position (row of pairwise_distances). Throws
// NoSupportError when every weight vanishes, unless the fallback is enabled.
inline double s_kernel_predict(const RegressionDataset& train,
                               const SkeletonPosition& query,
                               const KernelSpec& spec,
                               const Eigen::Ref<const Vector>& dists,
                               const PredictOptions& opts = {}) {
    if (dists.size() != train.size())
        throw ShapeError("distance row length does not match training size");
    const double h = spec.resolve(*train.skeleton);
    double wsum = 0.0, ysum = 0.0;
    for (Eigen::Index i = 0; i < dists.size(); ++i) {
        const double w = kernel_weight(spec.family, dists(i) / h);
        wsum += w;
        ysum += w * train.responses(i);
    }
    if (wsum > 0.0) return ysum / wsum;
    if (opts.component_mean_fallback)
        return detail::component_mean_response(train, query);
    throw NoSupportError("every kernel weight is zero at the query");
}

// k-nearest-neighbor regression under the skeleton distance. The
// neighborhood is every training point within the k-th smallest finite
// distance, so ties at the boundary all enter. When fewer than k finite
// distances exist the neighborhood shrinks to those available and
// *short_neighborhood (if given) is set.
inline double s_knn_predict(const RegressionDataset& train,
                            const SkeletonPosition& query, int k,
                            const Eigen::Ref<const Vector>& dists,
                            const PredictOptions& opts = {},
                            bool* short_neighborhood = nullptr) {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (dists.size() != train.size())
        throw ShapeError("distance row length does not match training size");
    if (short_neighborhood) *short_neighborhood = false;

    std::vector<std::pair<double, int>> finite;
    finite.reserve(static_cast<std::size_t>(dists.size()));
    for (Eigen::Index i = 0; i < dists.size(); ++i)
        if (dists(i) < kInfinity)
            finite.push_back({dists(i), static_cast<int>(i)});

    if (finite.empty()) {
        if (opts.component_mean_fallback)
            return detail::component_mean_response(train, query);
        throw NoSupportError("no training point at finite distance from the query");
    }

    std::sort(finite.begin(), finite.end());
    std::size_t take = static_cast<std::size_t>(k);
    if (finite.size() < take) {
        take = finite.size();
        if (short_neighborhood) *short_neighborhood = true;
    }
    const double radius = finite[take - 1].first;
    double sum = 0.0;
    int count = 0;
    for (const auto& [d, idx] : finite) {
        if (d > radius) break;
        sum += train.responses(idx);
        ++count;
    }
    return sum / count;
}

// Linear spline design matrix: one column per knot. A knot position puts unit
// weight on its knot; an edge position splits weight linearly between the two
// endpoints, (1 - t) on the lower-indexed one.
inline Matrix spline_transform(const std::vector<SkeletonPosition>& positions,
                               const Skeleton& s) {
    Matrix z = Matrix::Zero(static_cast<Eigen::Index>(positions.size()),
                            s.n_knots());
    for (std::size_t r = 0; r < positions.size(); ++r) {
        const SkeletonPosition& p = positions[r];
        if (!position_valid(p, s))
            throw IndexError("spline_transform: position does not lie on this skeleton");
        if (p.kind == SkeletonPosition::Kind::knot) {
            z(static_cast<Eigen::Index>(r), p.index) = 1.0;
        } else {
            const EdgeRecord& e = s.edges[static_cast<std::size_t>(p.index)];
            z(static_cast<Eigen::Index>(r), e.i) = 1.0 - p.t;
            z(static_cast<Eigen::Index>(r), e.j) = p.t;
        }
    }
    return z;
}

// Knot columns with no support in the design (no data touches them).
inline std::vector<int> unsupported_knots(const Matrix& z) {
    std::vector<int> out;
    for (Eigen::Index j = 0; j < z.cols(); ++j)
        if ((z.col(j).array() != 0.0).count() == 0)
            out.push_back(static_cast<int>(j));
    return out;
}

// Least-squares fit of knot values: minimizes ||y - Z beta||, returning the
// minimum-norm solution when Z is rank-deficient. Knots without support in Z
// get coefficient zero; their indices are reported through `unsupported`.
inline Vector s_lspline_fit(const Matrix& z, const Vector& y,
                            std::vector<int>* unsupported = nullptr) {
    if (z.rows() != y.size())
        throw ShapeError("design row count does not match response length");
    if (unsupported) *unsupported = unsupported_knots(z);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(z);
    return cod.solve(y);
}

// Evaluates the fitted linear spline at a position: the knot value, or the
// linear blend of the edge's endpoint values.
inline double s_lspline_predict(const SkeletonPosition& p, const Vector& beta,
                                const Skeleton& s) {
    if (!position_valid(p, s))
        throw IndexError("s_lspline_predict: position does not lie on this skeleton");
    if (beta.size() != s.n_knots())
        throw ShapeError("coefficient length does not match knot count");
    if (p.kind == SkeletonPosition::Kind::knot) return beta(p.index);
    const EdgeRecord& e = s.edges[static_cast<std::size_t>(p.index)];
    return (1.0 - p.t) * beta(e.i) + p.t * beta(e.j);
}

// Default bandwidth sweep, in units of r_hns.
inline std::vector<double> default_bandwidth_multipliers() {
    return {0.5, 1.0, 2.0, 4.0, 8.0};
}

}  // namespace skelreg
