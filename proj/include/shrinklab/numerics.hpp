#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "shrinklab/errors.hpp"

namespace shrinklab {

/// Pairwise (tree) reduction in fixed order. Deterministic and much better
/// conditioned than a running sum; every integral in the library goes
/// through here so reports are reproducible bit for bit.
inline double tree_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return tree_sum(v.subspan(0, half)) + tree_sum(v.subspan(half));
}

inline double tree_sum(const std::vector<double>& v) {
    return tree_sum(std::span<const double>(v.data(), v.size()));
}

/// Deterministic RNG. std::mt19937_64 output is fixed by the standard;
/// the normal deviate is a hand-rolled Box-Muller so results do not depend
/// on the standard library's distribution implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {
        // in (0,1]
        return (static_cast<double>(gen_()) + 1.0) * 0x1p-64;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    std::uint64_t next_u64() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Quintic smoothstep bump: C^2, equal to 1 for r <= r1 and 0 for r >= r2.
inline double cutoff_c2(double r, double r1, double r2) {
    if (r <= r1) return 1.0;
    if (r >= r2) return 0.0;
    const double s = (r - r1) / (r2 - r1);
    return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

/// Derivative of cutoff_c2 with respect to r.
inline double cutoff_c2_deriv(double r, double r1, double r2) {
    if (r <= r1 || r >= r2) return 0.0;
    const double w = r2 - r1;
    const double s = (r - r1) / w;
    return -s * s * (30.0 + s * (-60.0 + 30.0 * s)) / w;
}

/// Locale-independent float formatting with 17 significant digits
/// (round-trip exact for IEEE doubles).
inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline void require_finite(double x, const std::string& where) {
    if (!std::isfinite(x)) throw NonFiniteValue(where);
}

}  // namespace shrinklab
