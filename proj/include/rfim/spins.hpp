#pragma once

#include "rfim/error.hpp"

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace rfim {

/// Bit-packed ±1 configuration: bit b of site x encodes σ_x = 2b - 1.
/// Bits beyond size() in the last word are kept zero.
class SpinConfiguration {
public:
    SpinConfiguration() = default;
    explicit SpinConfiguration(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

    static SpinConfiguration all_up(std::size_t n)
    {
        SpinConfiguration s(n);
        for (auto& w : s.words_) w = ~std::uint64_t{0};
        s.mask_tail();
        return s;
    }

    /// Low n bits of `bits` (n <= 64).
    static SpinConfiguration from_bits(std::uint64_t bits, std::size_t n)
    {
        require(n <= 64, Errc::invalid_argument, "from_bits needs n <= 64");
        SpinConfiguration s(n);
        if (n > 0) s.words_[0] = bits;
        s.mask_tail();
        return s;
    }

    template <class Range>
    static SpinConfiguration from_spins(const Range& spins)
    {
        SpinConfiguration s(std::size(spins));
        std::size_t i = 0;
        for (int v : spins) {
            require(v == 1 || v == -1, Errc::invalid_argument, "spins must be +1 or -1");
            s.set(i++, v);
        }
        return s;
    }

    std::size_t size() const noexcept { return n_; }
    const std::vector<std::uint64_t>& words() const noexcept { return words_; }

    bool up(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1u; }
    int operator[](std::size_t i) const noexcept { return up(i) ? 1 : -1; }

    void set(std::size_t i, int spin) noexcept
    {
        const std::uint64_t bit = std::uint64_t{1} << (i & 63);
        if (spin > 0) words_[i >> 6] |= bit;
        else words_[i >> 6] &= ~bit;
    }
    void flip(std::size_t i) noexcept { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

    /// Global spin flip σ ↦ -σ.
    SpinConfiguration operator-() const
    {
        SpinConfiguration s = *this;
        for (auto& w : s.words_) w = ~w;
        s.mask_tail();
        return s;
    }

    std::uint64_t low_bits() const noexcept { return words_.empty() ? 0 : words_[0]; }

    friend bool operator==(const SpinConfiguration&, const SpinConfiguration&) = default;

private:
    void mask_tail() noexcept
    {
        if (n_ % 64 != 0 && !words_.empty()) words_.back() &= (std::uint64_t{1} << (n_ % 64)) - 1;
    }

    std::size_t n_ = 0;
    std::vector<std::uint64_t> words_;
};

using ReplicaSet = std::vector<SpinConfiguration>;

} // namespace rfim
