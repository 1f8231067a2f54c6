#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11), plus the
// stream-derivation rule used by the Monte Carlo estimators.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace qmce {

class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    explicit Philox4x32(Key key = {0, 0}, Counter counter = {0, 0, 0, 0}) noexcept : key_(key), ctr_(counter) {}

    /// The raw bijection: 10 rounds of the Philox S-box on (counter, key).
    static constexpr Counter block(Counter c, Key k) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k[0] += kW0;
                k[1] += kW1;
            }
            const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
            const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
        }
        return c;
    }

    result_type operator()() noexcept {
        if (used_ == 4) {
            buf_ = block(ctr_, key_);
            increment();
            used_ = 0;
        }
        return buf_[used_++];
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t hi = (*this)();
        return (hi << 32) | (*this)();
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform_open() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    void increment() noexcept {
        for (auto& w : ctr_)
            if (++w != 0) break;
    }

    Key key_;
    Counter ctr_;
    Counter buf_{};
    int used_ = 4;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Stream i of a run seeded with `seed` uses key splitmix64(splitmix64(seed) ^ i)
/// and starts at counter zero.
inline Philox4x32 make_stream(std::uint64_t seed, std::uint64_t stream) noexcept {
    const std::uint64_t k = splitmix64(splitmix64(seed) ^ stream);
    return Philox4x32({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)});
}

/// Box-Muller pair of independent standard normals.
inline std::array<double, 2> normal_pair(Philox4x32& rng) noexcept {
    const double r = std::sqrt(-2.0 * std::log(rng.uniform_open()));
    const double theta = 2.0 * std::numbers::pi * rng.uniform_open();
    return {r * std::cos(theta), r * std::sin(theta)};
}

inline double exponential(Philox4x32& rng) noexcept { return -std::log(rng.uniform_open()); }

}  // namespace qmce
