#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace celltune {

// Deterministic, platform-independent RNG. One master seed derives independent
// named streams (placement, events, agent, channel, ...); adding a consumer
// never perturbs the draws of another. All distributions are hand-rolled so
// traces are bit-identical across standard libraries.
class RngStream {
  public:
    RngStream() : state_(0x9e3779b97f4a7c15ull) {}
    explicit RngStream(std::uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ull) {
        // warm up so nearby seeds decorrelate
        next_u64();
        next_u64();
    }

    std::uint64_t next_u64() {
        // SplitMix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        // Lemire-style rejection-free enough for simulation purposes; use
        // modulo with 64-bit state (bias < 2^-53 for any realistic n).
        return next_u64() % n;
    }

    double gaussian() {
        // Box-Muller; consumes exactly two uniforms per pair, cached odd call.
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Knuth multiplication method; adequate for the small means used here.
    int poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        const double limit = std::exp(-mean);
        double prod = uniform();
        int count = 0;
        while (prod > limit) {
            prod *= uniform();
            ++count;
        }
        return count;
    }

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline std::uint64_t hash_string64(std::string_view s) {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Derives the stream for (master seed, stream name, index). Streams with
// different names or indices are statistically independent.
inline RngStream make_stream(std::uint64_t master_seed, std::string_view name,
                             std::uint64_t index = 0) {
    std::uint64_t h = hash_string64(name);
    h ^= master_seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h ^= (index + 1) * 0xd6e8feb86659fd93ull;
    return RngStream(h);
}

}  // namespace celltune
