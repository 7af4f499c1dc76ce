#pragma once

#include <cstdint>
#include <cmath>

#include "randlat/vec.hpp"

namespace randlat {

// 64-bit finalizer (murmur3 fmix64). Bijective with full avalanche.
inline std::uint64_t fmix64(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

// Derives the key of a labeled substream. Sampling is keyed by
// (seed, label, payload...) so that draws are a pure function of the key,
// independent of evaluation order or thread schedule.
inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t label) {
    return fmix64(fmix64(seed + 0x9e3779b97f4a7c15ULL) ^ label);
}
inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t label, std::uint64_t a) {
    return fmix64(derive_key(seed, label) + 0x9e3779b97f4a7c15ULL * a + 0x632be59bd9b4e019ULL);
}
// Mixes a site index into an already-derived stream base; hoisting the base
// out of site loops saves half the hashing.
inline std::uint64_t site_key(std::uint64_t base, const Vec3i& site) {
    std::uint64_t h = base;
    h = fmix64(h + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(site.x) + 1);
    h = fmix64(h + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(site.y) + 2);
    h = fmix64(h + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(site.z) + 3);
    return h;
}

inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t label, const Vec3i& site) {
    return site_key(derive_key(seed, label), site);
}

// Stream labels. One label per purpose keeps draws independent of each other
// so, e.g., rejection loops in the displacement never shift the charge draw.
namespace stream {
constexpr std::uint64_t displacement = 0xD15FULL;
constexpr std::uint64_t charge = 0xC4A6ULL;
constexpr std::uint64_t resample = 0x4E5AULL;
constexpr std::uint64_t poisson = 0x70150ULL;
constexpr std::uint64_t replica = 0x4E97ULL;
constexpr std::uint64_t rotation = 0x4074ULL;
constexpr std::uint64_t translation = 0x7245ULL;
constexpr std::uint64_t mc = 0x3C17ULL;
}  // namespace stream

// SplitMix64 stream. Small, fast, and every stream is an independent
// counter-based sequence given its key.
class Stream {
public:
    explicit Stream(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }
    // Uniform in (0, 1]; safe under log().
    double next_double_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Polar (Marsaglia) normal pair; trig-free, ~27% rejection.
    void next_normal_pair(double& a, double& b) {
        for (;;) {
            double u = 2.0 * next_double() - 1.0;
            double v = 2.0 * next_double() - 1.0;
            double w = u * u + v * v;
            if (w >= 1.0 || w == 0.0) continue;
            double s = std::sqrt(-2.0 * std::log(w) / w);
            a = u * s;
            b = v * s;
            return;
        }
    }
    Vec3 next_normal3() {
        double a, b, c, d;
        next_normal_pair(a, b);
        next_normal_pair(c, d);
        return {a, b, c};
    }

    Vec3 uniform_in_box(const Box3& b) {
        return {uniform(b.lo.x, b.hi.x), uniform(b.lo.y, b.hi.y), uniform(b.lo.z, b.hi.z)};
    }
    Vec3 uniform_in_ball(double radius) {
        for (;;) {
            Vec3 v{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
            if (v.norm2() <= 1.0) return v * radius;
        }
    }

    // Poisson counts by Knuth's product-of-uniforms method. Large means are
    // split in halves first (sums of independent Poissons are Poisson), since
    // exp(-mean) underflows near mean ~ 700.
    std::uint64_t next_poisson(double mean) {
        if (mean > 30.0) {
            double half = 0.5 * mean;
            return next_poisson(half) + next_poisson(mean - half);
        }
        double l = std::exp(-mean);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= next_double_pos();
        } while (p > l);
        return k - 1;
    }

private:
    std::uint64_t state_;
};

}  // namespace randlat
