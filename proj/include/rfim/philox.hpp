#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11) and helpers
// for deriving independent, order-free streams from (seed, index...) keys.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>

namespace rfim {

struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    static constexpr int kRounds = 10;

    static constexpr Counter round(const Counter& ctr, const Key& key) noexcept
    {
        const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }

    static constexpr Counter apply(Counter ctr, Key key) noexcept
    {
        ctr = round(ctr, key);
        for (int r = 1; r < kRounds; ++r) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
            ctr = round(ctr, key);
        }
        return ctr;
    }
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Folds a list of integers into one 64-bit key. Order matters; any change in
/// any component yields an unrelated key.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) noexcept
{
    std::uint64_t h = splitmix64(seed);
    for (auto p : parts) h = splitmix64(h ^ splitmix64(p + 0x632BE59BD9B4E019ull));
    return h;
}

constexpr Philox4x32::Key key_of(std::uint64_t k) noexcept
{
    return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Two 64-bit words for counter (index, tag, sub) under key.
constexpr std::array<std::uint64_t, 2> philox_words(std::uint64_t key, std::uint64_t index,
                                                   std::uint32_t tag, std::uint32_t sub = 0) noexcept
{
    const auto out = Philox4x32::apply(
        {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), tag, sub}, key_of(key));
    return {std::uint64_t{out[0]} | (std::uint64_t{out[1]} << 32),
            std::uint64_t{out[2]} | (std::uint64_t{out[3]} << 32)};
}

/// Standard normal via Box-Muller on one counter block.
inline double philox_normal(std::uint64_t key, std::uint64_t index, std::uint32_t tag) noexcept
{
    const auto w = philox_words(key, index, tag);
    const double u1 = 1.0 - to_unit(w[0]); // (0, 1]
    const double u2 = to_unit(w[1]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Sequential engine over a Philox stream; satisfies UniformRandomBitGenerator.
class PhiloxEngine {
public:
    using result_type = std::uint64_t;

    explicit PhiloxEngine(std::uint64_t key, std::uint32_t stream = 0) noexcept : key_(key), stream_(stream) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        if (pos_ == 2) {
            buf_ = philox_words(key_, counter_++, stream_, 0x5EEDu);
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    double uniform() noexcept { return to_unit((*this)()); }

private:
    std::uint64_t key_;
    std::uint32_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buf_{};
    int pos_ = 2;
};

} // namespace rfim
