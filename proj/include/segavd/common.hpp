#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace segavd {

using Vec = std::vector<double>;

/// Central numeric tolerances. Absolute tolerances are used for distances,
/// relative ones for quadratic membership forms.
struct Tolerances {
    double absolute = 1e-9;
    double membership_rel = 1e-12;
    double jacobi_offdiag = 1e-13;
    double containment_eig = 1e-11;
    double containment_band = 1e-9;  // near-boundary decisions resolve to "not contained"

    static const Tolerances& global() {
        static Tolerances t;
        return t;
    }
};

/// Thrown when inputs violate an operation's contract (dimension mismatch,
/// non-unit axis, malformed parameters).
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// Thrown when a segment set is not a valid instance (overlapping segments,
/// non-finite coordinates, inconsistent dimensions).
class InvalidInstanceError : public std::runtime_error {
public:
    explicit InvalidInstanceError(const std::string& what) : std::runtime_error(what) {}
};

// ---- small vector helpers -------------------------------------------------

inline void check_dims(const Vec& a, const Vec& b, const char* where) {
    if (a.size() != b.size())
        throw UsageError(std::string(where) + ": dimension mismatch (" +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

inline Vec sub(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec add(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec scaled(const Vec& a, double s) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
    return r;
}

inline void axpy(Vec& y, double a, const Vec& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline double dist2(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double dist(const Vec& a, const Vec& b) { return std::sqrt(dist2(a, b)); }

inline bool all_finite(const Vec& a) {
    for (double x : a)
        if (!std::isfinite(x)) return false;
    return true;
}

// ---- deterministic random streams ------------------------------------------
//
// All randomized routines take an explicit 64-bit seed and derive their values
// from splitmix64, so outputs are identical across platforms and standard
// library implementations (std::uniform_real_distribution is not portable).

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller on the deterministic uniform stream.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform direction on the unit sphere in R^d.
    Vec unit_vector(std::size_t d) {
        Vec v(d);
        double n2 = 0.0;
        do {
            for (auto& x : v) x = normal();
            n2 = norm2(v);
        } while (n2 < 1e-300);
        const double inv = 1.0 / std::sqrt(n2);
        for (auto& x : v) x *= inv;
        return v;
    }

    /// Uniform point in the unit ball of R^d.
    Vec in_unit_ball(std::size_t d) {
        Vec v = unit_vector(d);
        const double r = std::pow(uniform(), 1.0 / static_cast<double>(d));
        for (auto& x : v) x *= r;
        return v;
    }

    /// Derive an independent stream from this seed and a stable tag.
    static Rng fork(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b = 0) {
        Rng mixer(seed ^ (tag_a * 0x9E3779B97F4A7C15ULL) ^ (tag_b * 0xC2B2AE3D27D4EB4FULL));
        return Rng(mixer.next_u64());
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Volume of the unit ball in R^k.
inline double unit_ball_volume(int k) {
    // V_k = pi^(k/2) / Gamma(k/2 + 1)
    const double pi = 3.14159265358979323846264338327950288;
    return std::pow(pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

}  // namespace segavd
