#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace skelreg {

// Mixes a seed and an arbitrary stream tag into a decorrelated 64-bit value.
// Used everywhere a derived seed is needed (restart r of a k-means run, fold f
// of a CV split, replicate t of an experiment) so that no two subsystems ever
// share a raw engine state.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic random source. The raw stream is std::mt19937_64, whose output
// sequence is fully pinned by the standard; all distribution transforms are
// implemented here by hand because the std::*_distribution adaptors are
// implementation-defined and would break cross-platform reproducibility.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Standard normal via Box-Muller. Consumes two uniforms per draw and keeps
    // no cached spare, so the draw count per call is fixed.
    double normal01() {
        double u1 = 1.0 - uniform01();  // (0, 1]: keeps log finite
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal01(); }

    // Uniform integer in [0, n). n must be positive.
    int below(int n) {
        return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
    }

    // Index draw proportional to non-negative weights; entries with zero
    // weight are never selected. Falls back to the first positive weight when
    // rounding pushes the scan past the end.
    int weighted(const std::vector<double>& w) {
        double total = 0.0;
        for (double v : w) total += v;
        double r = uniform01() * total;
        double cum = 0.0;
        int last_positive = -1;
        for (int i = 0; i < static_cast<int>(w.size()); ++i) {
            if (w[i] <= 0.0) continue;
            cum += w[i];
            last_positive = i;
            if (r < cum) return i;
        }
        return last_positive;
    }

    // Fisher-Yates; identical order on every platform.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            std::swap(v[i], v[static_cast<std::size_t>(below(i + 1))]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace skelreg
