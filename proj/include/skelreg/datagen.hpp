#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace skelreg {

// Synthetic benchmark clouds. Noise magnitudes are quoted as variances by
// default (variance_notation = true); flipping the toggle reads the same
// constants as standard deviations instead.

inline double resolve_sd(double magnitude, bool variance_notation) {
    if (!(magnitude >= 0.0)) throw ConfigError("noise magnitude must be >= 0");
    return variance_notation ? std::sqrt(magnitude) : magnitude;
}

// Everything generated alongside the cloud, kept so tests can replay the
// noiseless surface: per-point component labels (-1 marks background noise),
// the response noise draws, and the intrinsic coordinates that feed the
// response function.
struct GenResult {
    PointCloud cloud;
    std::vector<int> component;
    Vector eps;
    Matrix intrinsic;
};

// ---------------------------------------------------------------------------
// Yinyang: a ring around two crescent moons and two dots.
// ---------------------------------------------------------------------------

// Layout constants. The five structures stay separated by wide margins so
// segmentation has an unambiguous 5-component answer: the moons bulge away
// from each other inside the ring, the dots sit on the vertical axis between
// the moon tips and the ring.
struct YinyangGeometry {
    double ring_radius = 3.0;
    double ring_jitter_sd = 0.1;   // radial, always a standard deviation
    double moon_center_x = 1.1;    // right moon at +x, left moon mirrored
    double moon_r_min = 0.6;
    double moon_r_max = 0.9;
    double dot_center_y = 1.7;     // top dot at +y, bottom dot at -y
    double dot_sd = 0.15;          // isotropic, a standard deviation
    double noise_box_half = 3.5;   // background box for the noisy variant
};

struct YinyangConfig {
    // Component sizes: ring, right moon, left moon, top dot, bottom dot.
    std::vector<int> sizes = {2000, 400, 400, 200, 200};
    double response_noise = 0.01;
    bool variance_notation = true;
    std::uint64_t seed = 0;
    YinyangGeometry geom;
};

// Mean response of a yinyang component. The ring's response waves along the
// angle; the moons and dots are constant plateaus; background noise points
// (component -1) sit at the global mid level.
inline double yinyang_noiseless(int component, double theta) {
    switch (component) {
        case 0: return std::sin(4.0 * theta) + 1.5;
        case 1: return 1.0;
        case 2: return 2.0;
        case 3: return 3.0;
        case 4: return 0.0;
        case -1: return 1.5;
        default: throw ConfigError("unknown yinyang component");
    }
}

namespace detail {

inline void gen_yinyang_into(GenResult& res, const YinyangConfig& cfg,
                             Rng& rng, double eps_sd) {
    if (cfg.sizes.size() != 5)
        throw ConfigError("yinyang takes exactly 5 component sizes");
    const YinyangGeometry& g = cfg.geom;
    int row = 0;
    for (int comp = 0; comp < 5; ++comp) {
        for (int i = 0; i < cfg.sizes[static_cast<std::size_t>(comp)]; ++i) {
            double x = 0.0, yy = 0.0, theta = 0.0;
            switch (comp) {
                case 0: {
                    theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
                    const double r =
                        g.ring_radius + rng.normal(0.0, g.ring_jitter_sd);
                    x = r * std::cos(theta);
                    yy = r * std::sin(theta);
                    res.intrinsic(row, 0) = theta;
                    res.intrinsic(row, 1) = r;
                    break;
                }
                case 1:
                case 2: {
                    // Right moon opens right (phi around 0), left moon opens
                    // left (phi around pi).
                    const double base =
                        comp == 1 ? -0.5 * std::numbers::pi
                                  : 0.5 * std::numbers::pi;
                    const double phi =
                        base + rng.uniform(0.0, std::numbers::pi);
                    const double r = rng.uniform(g.moon_r_min, g.moon_r_max);
                    const double cx =
                        comp == 1 ? g.moon_center_x : -g.moon_center_x;
                    x = cx + r * std::cos(phi);
                    yy = r * std::sin(phi);
                    res.intrinsic(row, 0) = phi;
                    res.intrinsic(row, 1) = r;
                    break;
                }
                case 3:
                case 4: {
                    const double cy =
                        comp == 3 ? g.dot_center_y : -g.dot_center_y;
                    x = rng.normal(0.0, g.dot_sd);
                    yy = cy + rng.normal(0.0, g.dot_sd);
                    res.intrinsic(row, 0) = x;
                    res.intrinsic(row, 1) = yy;
                    break;
                }
            }
            const double eps = rng.normal(0.0, eps_sd);
            res.cloud.points(row, 0) = x;
            res.cloud.points(row, 1) = yy;
            res.eps(row) = eps;
            (*res.cloud.responses)(row) =
                yinyang_noiseless(comp, theta) + eps;
            res.component[static_cast<std::size_t>(row)] = comp;
            ++row;
        }
    }
}

}  // namespace detail

inline GenResult gen_yinyang(const YinyangConfig& cfg) {
    int n = 0;
    for (int s : cfg.sizes) {
        if (s < 0) throw ConfigError("component sizes must be >= 0");
        n += s;
    }
    if (n < 1) throw ConfigError("yinyang needs at least one point");

    GenResult res;
    res.cloud.points.resize(n, 2);
    res.cloud.responses = Vector::Zero(n);
    res.component.resize(static_cast<std::size_t>(n));
    res.eps.resize(n);
    res.intrinsic = Matrix::Zero(n, 2);

    Rng rng(cfg.seed);
    detail::gen_yinyang_into(
        res, cfg, rng, resolve_sd(cfg.response_noise, cfg.variance_notation));
    return res;
}

struct NoisyYinyangConfig {
    YinyangConfig base;
    int n_noise = 800;  // uniform background points, component -1
};

// Yinyang plus uniform background clutter over the enclosing box. Background
// points carry the mid-level response and label -1.
inline GenResult gen_noisy_yinyang(const NoisyYinyangConfig& cfg) {
    if (cfg.n_noise < 0) throw ConfigError("n_noise must be >= 0");
    int n_struct = 0;
    for (int s : cfg.base.sizes) n_struct += s;
    const int n = n_struct + cfg.n_noise;
    if (n < 1) throw ConfigError("noisy yinyang needs at least one point");

    GenResult res;
    res.cloud.points.resize(n, 2);
    res.cloud.responses = Vector::Zero(n);
    res.component.resize(static_cast<std::size_t>(n));
    res.eps.resize(n);
    res.intrinsic = Matrix::Zero(n, 2);

    Rng rng(cfg.base.seed);
    const double eps_sd =
        resolve_sd(cfg.base.response_noise, cfg.base.variance_notation);
    detail::gen_yinyang_into(res, cfg.base, rng, eps_sd);

    const double h = cfg.base.geom.noise_box_half;
    for (int row = n_struct; row < n; ++row) {
        res.cloud.points(row, 0) = rng.uniform(-h, h);
        res.cloud.points(row, 1) = rng.uniform(-h, h);
        const double eps = rng.normal(0.0, eps_sd);
        res.eps(row) = eps;
        (*res.cloud.responses)(row) = yinyang_noiseless(-1, 0.0) + eps;
        res.component[static_cast<std::size_t>(row)] = -1;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Swiss roll: a rolled 2-d sheet in 3-d with a cubic response on part of it.
// ---------------------------------------------------------------------------

struct SwissrollConfig {
    int n = 600;
    double response_noise = 0.3;
    bool variance_notation = true;
    std::uint64_t seed = 0;
};

// Response surface on the unrolled sheet: cubic in the centered roll angle,
// active on two bands of the flat coordinate (the second band lies outside
// the generated range, so it only matters for out-of-sample evaluation).
inline double swissroll_noiseless(double theta, double x2) {
    const double centered = theta - 2.0 * std::numbers::pi;
    const double gate =
        (x2 < std::numbers::pi ? 1.0 : 0.0) +
        (x2 > 2.0 * std::numbers::pi && x2 < 3.0 * std::numbers::pi ? 1.0
                                                                    : 0.0);
    return 0.1 * centered * centered * centered * gate;
}

inline GenResult gen_swissroll(const SwissrollConfig& cfg) {
    if (cfg.n < 1) throw ConfigError("swissroll needs at least one point");

    GenResult res;
    res.cloud.points.resize(cfg.n, 3);
    res.cloud.responses = Vector::Zero(cfg.n);
    res.component.assign(static_cast<std::size_t>(cfg.n), 0);
    res.eps.resize(cfg.n);
    res.intrinsic = Matrix::Zero(cfg.n, 3);

    Rng rng(cfg.seed);
    const double eps_sd =
        resolve_sd(cfg.response_noise, cfg.variance_notation);
    for (int row = 0; row < cfg.n; ++row) {
        const double u1 = rng.uniform01();
        const double u2 = rng.uniform01();
        const double theta = std::numbers::pi * std::pow(3.0, u1);
        const double x2 = 4.0 * u2;
        res.cloud.points(row, 0) = theta * std::cos(theta);
        res.cloud.points(row, 1) = x2;
        res.cloud.points(row, 2) = theta * std::sin(theta);
        const double eps = rng.normal(0.0, eps_sd);
        res.eps(row) = eps;
        (*res.cloud.responses)(row) = swissroll_noiseless(theta, x2) + eps;
        res.intrinsic(row, 0) = u1;
        res.intrinsic(row, 1) = theta;
        res.intrinsic(row, 2) = x2;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Ambient embedding.
// ---------------------------------------------------------------------------

// Pads the cloud with fresh pure-noise coordinates up to target_dim, each
// drawn N(0, sd^2), row by row. Responses are untouched.
inline PointCloud add_noise_dims(const PointCloud& cloud, int target_dim,
                                 double sd, std::uint64_t seed) {
    if (target_dim < cloud.dim())
        throw ConfigError("target dimension is below the cloud dimension");
    if (!(sd >= 0.0)) throw ConfigError("noise sd must be >= 0");
    PointCloud out;
    out.points.resize(cloud.size(), target_dim);
    out.points.leftCols(cloud.dim()) = cloud.points;
    out.responses = cloud.responses;
    Rng rng(seed);
    for (Eigen::Index i = 0; i < cloud.size(); ++i)
        for (Eigen::Index j = cloud.dim(); j < target_dim; ++j)
            out.points(i, j) = rng.normal(0.0, sd);
    return out;
}

}  // namespace skelreg
