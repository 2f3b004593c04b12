#pragma once

#include <cstdint>
#include <limits>

namespace mbscc {

/// SplitMix64 step. Used only to expand a (seed, stream, index) key into engine state.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent random substreams of a run.
enum class Stream : std::uint64_t {
    rates = 0,         ///< Brownian noise driving the factor paths
    prepayment = 1,    ///< uniforms for prepayment times, independent of the rate noise
};

/// xoshiro256** engine satisfying UniformRandomBitGenerator.
///
/// Each (seed, stream, index) triple maps to its own engine state, so path i of a
/// run draws the same numbers no matter which worker generates it or in what order.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static Xoshiro256 substream(std::uint64_t seed, Stream stream, std::uint64_t index) noexcept {
        // Hash each key component separately so nearby keys do not share state words.
        std::uint64_t k = seed;
        std::uint64_t h = splitmix64(k);
        k = h ^ (static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL);
        h = splitmix64(k);
        k = h ^ index;
        return Xoshiro256(splitmix64(k));
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform_open() noexcept {
        return ((*this)() >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4]{};
};

}  // namespace mbscc
