#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

namespace spectra {

// SplitMix64: counter-friendly 64-bit mixer. All randomness in the toolkit
// flows through this so results are bit-identical across platforms and
// independent of thread count.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Derive an independent stream key from a base seed and up to three tags.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag0,
                                 std::uint64_t tag1 = 0, std::uint64_t tag2 = 0) {
    std::uint64_t s = seed;
    std::uint64_t z = splitmix64(s);
    s ^= tag0 + 0x9E3779B97F4A7C15ull;
    z ^= splitmix64(s);
    s ^= tag1 + 0xD1B54A32D192ED03ull;
    z ^= splitmix64(s);
    s ^= tag2 + 0x8BB84B93962EACC9ull;
    z ^= splitmix64(s);
    return z;
}

// Stream tags for the fixed sub-generators used across the toolkit.
namespace rng_stream {
inline constexpr std::uint64_t init_weights = 0x11;
inline constexpr std::uint64_t blob_centers = 0x22;
inline constexpr std::uint64_t blob_centers_ood = 0x23;
inline constexpr std::uint64_t blob_noise = 0x24;
inline constexpr std::uint64_t shuffle = 0x35;
inline constexpr std::uint64_t probe = 0x46;
inline constexpr std::uint64_t trial = 0x57;
} // namespace rng_stream

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    // Standard normal via Box-Muller; second value of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace spectra
