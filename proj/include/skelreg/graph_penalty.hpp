#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "core.hpp"
#include "regressors.hpp"

namespace skelreg {

// Discrete difference operators of a skeleton graph. `incidence_oriented` is
// knots x edges with +1 at the lower-indexed endpoint and -1 at the higher;
// `laplacian` = degree - adjacency = B_o * B_o^T. The order-q penalty
// operator generalizes edge differencing:
//   q even: penalty = B_o^T * L^(q/2)   (edges x knots)
//   q odd:  penalty = L^((q+1)/2)       (knots x knots)
// so penalty^T * penalty = L^(q+1) either way.
struct GraphOperators {
    Matrix incidence;           // knots x edges, unoriented (0/1)
    Matrix incidence_oriented;  // knots x edges, signed
    Matrix laplacian;           // knots x knots
    Matrix penalty;             // order-q difference operator
    int order = 0;
};

inline GraphOperators graph_operators(const Skeleton& s, int order) {
    if (order < 0) throw ConfigError("penalty order must be >= 0");
    const int k = s.n_knots();
    const int m = s.n_edges();

    GraphOperators ops;
    ops.order = order;
    ops.incidence = Matrix::Zero(k, m);
    ops.incidence_oriented = Matrix::Zero(k, m);
    for (int e = 0; e < m; ++e) {
        const EdgeRecord& r = s.edges[static_cast<std::size_t>(e)];
        ops.incidence(r.i, e) = 1.0;
        ops.incidence(r.j, e) = 1.0;
        ops.incidence_oriented(r.i, e) = 1.0;
        ops.incidence_oriented(r.j, e) = -1.0;
    }
    ops.laplacian = ops.incidence_oriented * ops.incidence_oriented.transpose();

    Matrix lpow = Matrix::Identity(k, k);
    const int half = order / 2;
    for (int p = 0; p < half; ++p) lpow = (ops.laplacian * lpow).eval();
    if (order % 2 == 0) {
        ops.penalty = ops.incidence_oriented.transpose() * lpow;
    } else {
        ops.penalty = ops.laplacian * lpow;
    }
    return ops;
}

// Generalized ridge: beta solving (Z^T Z + lambda D^T D) beta = Z^T y,
// computed as the minimum-norm least-squares solution of the stacked system
// [Z; sqrt(lambda) D] beta ~ [y; 0], which is better conditioned than the
// normal equations and well-defined when the stack is rank-deficient.
inline Vector gen_ridge_fit(const Matrix& z, const Vector& y, const Matrix& d,
                            double lambda) {
    if (z.rows() != y.size())
        throw ShapeError("design row count does not match response length");
    if (d.cols() != z.cols())
        throw ShapeError("penalty column count does not match design");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");

    Matrix stack(z.rows() + d.rows(), z.cols());
    stack.topRows(z.rows()) = z;
    stack.bottomRows(d.rows()) = std::sqrt(lambda) * d;
    Vector rhs = Vector::Zero(stack.rows());
    rhs.head(z.rows()) = y;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(stack);
    return cod.solve(rhs);
}

// The fitted objective both l1 solvers minimize.
inline double gen_lasso_objective(const Matrix& z, const Vector& y,
                                  const Matrix& d, double lambda,
                                  const Vector& beta) {
    return 0.5 * (y - z * beta).squaredNorm() +
           lambda * (d * beta).cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// Exact solution path of min_beta 1/2 ||y - beta||^2 + lambda ||D beta||^1.
// ---------------------------------------------------------------------------

// One affine segment of the dual path. On lambda in [lambda_lo, lambda_hi],
// boundary coordinates sit at lambda * sign and interior ones follow
// a - lambda * b.
struct PathSegment {
    double lambda_hi = kInfinity;
    double lambda_lo = 0.0;
    std::vector<int> boundary;         // rows of D on the box boundary
    std::vector<double> boundary_sign;
    std::vector<int> interior;         // remaining rows, ascending
    Vector a, b;                       // aligned with `interior`
};

struct LassoPathPoint {
    double lambda = 0.0;
    Vector u;     // dual coordinates, one per row of D
    Vector beta;  // y - D^T u
};

// Piecewise-linear dual path. `points` holds the path evaluated at every
// event lambda (first entry lambda = +inf where the dual is constant, last
// entry lambda = 0 where the only feasible dual is u = 0 and beta recovers y
// exactly); u_at / beta_at evaluate inside segments.
class LassoPath {
public:
    LassoPath(Matrix d, Vector y) : d_(std::move(d)), y_(std::move(y)) {}

    const std::vector<LassoPathPoint>& points() const { return points_; }
    const std::vector<PathSegment>& segments() const { return segments_; }

    Vector u_at(double lambda) const {
        if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
        if (lambda == 0.0) return Vector::Zero(d_.rows());
        for (const auto& seg : segments_) {
            if (lambda > seg.lambda_hi || lambda < seg.lambda_lo) continue;
            Vector u(d_.rows());
            for (std::size_t i = 0; i < seg.boundary.size(); ++i)
                u(seg.boundary[i]) = lambda * seg.boundary_sign[i];
            for (std::size_t i = 0; i < seg.interior.size(); ++i)
                u(seg.interior[i]) =
                    seg.a(static_cast<Eigen::Index>(i)) -
                    lambda * seg.b(static_cast<Eigen::Index>(i));
            return u;
        }
        throw ConfigError("lambda not covered by the path");
    }

    Vector beta_at(double lambda) const { return y_ - d_.transpose() * u_at(lambda); }

    void push_point(double lambda, Vector u) {
        LassoPathPoint p;
        p.lambda = lambda;
        p.beta = y_ - d_.transpose() * u;
        p.u = std::move(u);
        points_.push_back(std::move(p));
    }

    void push_segment(PathSegment seg) { segments_.push_back(std::move(seg)); }

private:
    Matrix d_;
    Vector y_;
    std::vector<LassoPathPoint> points_;
    std::vector<PathSegment> segments_;
};

namespace detail {

// Minimum-norm solution of M x = rhs for consistent systems; with
// rhs in range(M) this application equals the pseudo-inverse.
inline Vector pinv_solve(const Matrix& m, const Vector& rhs) {
    if (m.rows() == 0) return Vector(0);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(m);
    return cod.solve(rhs);
}

}  // namespace detail

// Path algorithm for the signal-form generalized lasso. Tracks which dual
// coordinates sit on the moving box boundary [-lambda, lambda]: between
// events the interior solution is affine in lambda, events are coordinates
// hitting the boundary (largest hitting time wins) or leaving it (largest
// leaving time), and the path ends at lambda = 0. Hit/leave ties at the same
// lambda resolve in favor of the hit; equal times within one kind resolve to
// the lowest row index.
inline LassoPath gen_lasso_dual_path(const Vector& y, const Matrix& d) {
    if (d.cols() != y.size())
        throw ShapeError("penalty column count does not match response length");
    const int m = static_cast<int>(d.rows());
    LassoPath path(d, y);

    if (m == 0) {
        path.push_segment({kInfinity, 0.0, {}, {}, {}, Vector(0), Vector(0)});
        path.push_point(kInfinity, Vector(0));
        path.push_point(0.0, Vector(0));
        return path;
    }

    std::vector<int> boundary;
    std::vector<double> sign;
    double lambda_k = kInfinity;
    int last_left = -1;  // coordinate that left at the previous event
    const int max_events = 10 * m + 100;

    for (int event = 0;; ++event) {
        if (event > max_events)
            throw ConvergenceError("dual path event count exceeded its cap",
                                   lambda_k);

        std::vector<int> interior;
        interior.reserve(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i)
            if (std::find(boundary.begin(), boundary.end(), i) == boundary.end())
                interior.push_back(i);

        const Eigen::Index ni = static_cast<Eigen::Index>(interior.size());
        const Eigen::Index nb = static_cast<Eigen::Index>(boundary.size());
        Matrix d_int(ni, d.cols());
        for (Eigen::Index r = 0; r < ni; ++r)
            d_int.row(r) = d.row(interior[static_cast<std::size_t>(r)]);
        Vector dbs = Vector::Zero(d.cols());  // D_B^T s
        for (Eigen::Index r = 0; r < nb; ++r)
            dbs += sign[static_cast<std::size_t>(r)] *
                   d.row(boundary[static_cast<std::size_t>(r)]).transpose();

        Vector a(ni), b(ni);
        if (ni > 0) {
            const Matrix gram = d_int * d_int.transpose();
            a = detail::pinv_solve(gram, d_int * y);
            b = detail::pinv_solve(gram, d_int * dbs);
        }

        // Hitting times: interior coordinate i reaches +/-lambda when
        // a_i - lambda b_i = sign * lambda; only candidates inside
        // [0, lambda_k] count. A coordinate that just left must strictly
        // re-enter to avoid replaying the same event.
        const double guard = 1e-10 * (1.0 + (std::isfinite(lambda_k) ? lambda_k : 0.0));
        double hit_time = 0.0;
        int hit_coord = -1;
        double hit_sign = 0.0;
        for (Eigen::Index r = 0; r < ni; ++r) {
            const int coord = interior[static_cast<std::size_t>(r)];
            for (double sg : {1.0, -1.0}) {
                const double den = b(r) + sg;
                if (den == 0.0) continue;
                double t = a(r) / den;
                if (!(t > 0.0)) continue;
                if (t > lambda_k + guard) continue;
                if (coord == last_left && t > lambda_k - guard) continue;
                t = std::min(t, lambda_k);
                if (t > hit_time) {
                    hit_time = t;
                    hit_coord = coord;
                    hit_sign = sg;
                }
            }
        }

        // Leaving times for boundary coordinates.
        Vector p_y = y - d_int.transpose() * a;    // projection residual of y
        Vector p_dbs = dbs - d_int.transpose() * b;
        double leave_time = 0.0;
        int leave_pos = -1;
        for (Eigen::Index r = 0; r < nb; ++r) {
            const double srow =
                d.row(boundary[static_cast<std::size_t>(r)]) * p_y;
            const double drow =
                d.row(boundary[static_cast<std::size_t>(r)]) * p_dbs;
            const double c = sign[static_cast<std::size_t>(r)] * srow;
            const double dd = sign[static_cast<std::size_t>(r)] * drow;
            if (c < 0.0 && dd < 0.0) {
                double t = c / dd;
                if (t > lambda_k + guard) continue;
                t = std::min(t, lambda_k);
                if (t > leave_time) {
                    leave_time = t;
                    leave_pos = static_cast<int>(r);
                }
            }
        }

        const double lambda_next = std::max(hit_time, leave_time);

        PathSegment seg;
        seg.lambda_hi = lambda_k;
        seg.lambda_lo = lambda_next;
        seg.boundary = boundary;
        seg.boundary_sign = sign;
        seg.interior = interior;
        seg.a = a;
        seg.b = b;
        path.push_segment(seg);

        if (event == 0) {
            // At lambda above the first event the dual is constant (b = 0).
            Vector u0 = Vector::Zero(m);
            for (Eigen::Index r = 0; r < ni; ++r)
                u0(interior[static_cast<std::size_t>(r)]) = a(r);
            path.push_point(kInfinity, u0);
        }

        if (lambda_next <= 0.0) {
            // Terminal point: the lambda = 0 feasible box is the origin.
            path.push_point(0.0, Vector::Zero(m));
            return path;
        }

        Vector u(m);
        for (Eigen::Index r = 0; r < nb; ++r)
            u(boundary[static_cast<std::size_t>(r)]) =
                lambda_next * sign[static_cast<std::size_t>(r)];
        for (Eigen::Index r = 0; r < ni; ++r)
            u(interior[static_cast<std::size_t>(r)]) = a(r) - lambda_next * b(r);
        path.push_point(lambda_next, u);

        if (hit_time >= leave_time) {
            boundary.push_back(hit_coord);
            sign.push_back(hit_sign);
            last_left = -1;
        } else {
            // Remember who left so its immediate re-hit at the same lambda is
            // suppressed on the next sweep.
            last_left = boundary[static_cast<std::size_t>(leave_pos)];
            boundary.erase(boundary.begin() + leave_pos);
            sign.erase(sign.begin() + leave_pos);
        }
        lambda_k = lambda_next;
    }
}

// ---------------------------------------------------------------------------
// Fixed-lambda generalized lasso via ADMM.
// ---------------------------------------------------------------------------

struct AdmmOptions {
    double rho = 0.0;  // 0: choose max(lambda, 1e-2)
    double eps_abs = 1e-11;
    double eps_rel = 1e-11;
    int max_iter = 200000;
    bool adapt_rho = true;
};

// Solves min_beta 1/2 ||y - Z beta||^2 + lambda ||D beta||_1 by alternating
// a ridge-like beta step (prefactored stacked least squares), a
// soft-threshold step on alpha = D beta, and a scaled dual update. Residual
// tolerances follow the standard primal/dual criteria; exceeding max_iter
// raises ConvergenceError carrying the worst residual.
inline Vector gen_lasso_fixed_lambda(const Matrix& z, const Vector& y,
                                     const Matrix& d, double lambda,
                                     const AdmmOptions& opts = {}) {
    if (z.rows() != y.size())
        throw ShapeError("design row count does not match response length");
    if (d.cols() != z.cols())
        throw ShapeError("penalty column count does not match design");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");

    const Eigen::Index k = z.cols();
    const Eigen::Index m = d.rows();
    if (lambda == 0.0 || m == 0) {
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(z);
        return cod.solve(y);
    }

    double rho = opts.rho > 0.0 ? opts.rho : std::max(lambda, 1e-2);
    auto factor = [&](double r) {
        Matrix stack(z.rows() + m, k);
        stack.topRows(z.rows()) = z;
        stack.bottomRows(m) = std::sqrt(r) * d;
        return Eigen::CompleteOrthogonalDecomposition<Matrix>(stack);
    };
    auto cod = factor(rho);

    Vector beta = Vector::Zero(k);
    Vector alpha = Vector::Zero(m);
    Vector w = Vector::Zero(m);
    Vector rhs(z.rows() + m);
    rhs.head(z.rows()) = y;

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        rhs.tail(m) = std::sqrt(rho) * (alpha - w);
        beta = cod.solve(rhs);
        const Vector dbeta = d * beta;
        const Vector alpha_prev = alpha;
        const double thresh = lambda / rho;
        alpha = (dbeta + w).unaryExpr([thresh](double v) {
            return v > thresh ? v - thresh : (v < -thresh ? v + thresh : 0.0);
        });
        w += dbeta - alpha;

        const double r_norm = (dbeta - alpha).norm();
        const double s_norm = rho * (d.transpose() * (alpha - alpha_prev)).norm();
        const double eps_pri =
            std::sqrt(double(m)) * opts.eps_abs +
            opts.eps_rel * std::max(dbeta.norm(), alpha.norm());
        const double eps_dual = std::sqrt(double(k)) * opts.eps_abs +
                                opts.eps_rel * rho * (d.transpose() * w).norm();
        if (r_norm <= eps_pri && s_norm <= eps_dual) return beta;

        if (opts.adapt_rho && iter > 0 && iter % 100 == 0) {
            if (r_norm > 10.0 * s_norm) {
                rho *= 2.0;
                w *= 0.5;
                cod = factor(rho);
            } else if (s_norm > 10.0 * r_norm) {
                rho *= 0.5;
                w *= 2.0;
                cod = factor(rho);
            }
        }
    }
    throw ConvergenceError("fixed-lambda solver hit its iteration cap", 0.0);
}

// ---------------------------------------------------------------------------
// Penalized linear spline fits.
// ---------------------------------------------------------------------------

enum class PenaltyKind { none, lapsmooth, trendfilter };

inline const char* penalty_name(PenaltyKind p) {
    switch (p) {
        case PenaltyKind::none: return "none";
        case PenaltyKind::lapsmooth: return "lapsmooth";
        default: return "trendfilter";
    }
}

inline PenaltyKind penalty_from_name(const std::string& name) {
    if (name == "none") return PenaltyKind::none;
    if (name == "lapsmooth") return PenaltyKind::lapsmooth;
    if (name == "trendfilter") return PenaltyKind::trendfilter;
    throw ConfigError("unknown penalty: " + name);
}

struct PenaltySpec {
    PenaltyKind kind = PenaltyKind::none;
    int order = 0;
    double lambda = 0.0;
};

// Spline fit with an optional graph penalty on the knot coefficients:
// quadratic (lapsmooth) or l1 (trendfilter) in the order-q difference
// operator.
inline Vector s_lspline_fit_penalized(const Matrix& z, const Vector& y,
                                      const Skeleton& s,
                                      const PenaltySpec& penalty) {
    if (penalty.kind == PenaltyKind::none || penalty.lambda == 0.0)
        return s_lspline_fit(z, y);
    const GraphOperators ops = graph_operators(s, penalty.order);
    if (penalty.kind == PenaltyKind::lapsmooth)
        return gen_ridge_fit(z, y, ops.penalty, penalty.lambda);
    return gen_lasso_fixed_lambda(z, y, ops.penalty, penalty.lambda);
}

}  // namespace skelreg
