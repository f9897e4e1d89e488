#ifndef AFLSIM_RNG_HPP
#define AFLSIM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace aflsim {

// All randomness in the simulator flows through this header. std::mt19937_64
// raw output is fully specified by the standard, and every mapping from raw
// bits to a distribution is implemented here rather than via std::*_distribution,
// so identical seeds give bit-identical streams on any platform.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seed-splitting rule: one master seed expands into independent named streams.
// Adding a client (a new index) never perturbs any other stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t index = 0) {
    return splitmix64(splitmix64(master ^ fnv1a64(label)) + index);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0,1) with 53 bits of precision.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) {
        // Modulo bias is < 2^-40 for any n used here (n <= 10^5).
        return engine_() % n;
    }

    // Standard normal via Box-Muller; consumes two uniforms per pair.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    // Gamma(shape, 1) via Marsaglia-Tsang, with the alpha<1 boost step.
    double gamma(double shape) {
        if (shape < 1.0) {
            double u = uniform01();
            while (u <= 0.0) u = uniform01();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Symmetric Dirichlet over n components.
    std::vector<double> dirichlet(double concentration, std::size_t n) {
        std::vector<double> draws(n);
        double sum = 0.0;
        for (auto& g : draws) {
            g = gamma(concentration);
            sum += g;
        }
        if (sum <= 0.0) {
            // All-zero draws are possible only through underflow at tiny
            // concentrations; fall back to a single winner.
            std::vector<double> out(n, 0.0);
            out[uniform_int(n)] = 1.0;
            return out;
        }
        for (auto& g : draws) g /= sum;
        return draws;
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace aflsim

#endif
