#pragma once

#include "rfim/error.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rfim {

using SiteIndex = std::uint32_t;

/// V_n = Z^d ∩ [1,n]^d with free boundary, sites in lexicographic order
/// (first coordinate most significant). Each nearest-neighbour pair is stored
/// once as (i, j) with i < j.
class Lattice {
public:
    static constexpr std::size_t kDefaultCapacity = std::size_t{1} << 26;

    Lattice(int d, int n, std::size_t capacity = kDefaultCapacity)
        : d_(d), n_(n)
    {
        require(d >= 1, Errc::invalid_argument, "lattice dimension must be >= 1");
        require(n >= 1, Errc::invalid_argument, "lattice side must be >= 1");
        std::size_t vol = 1;
        for (int k = 0; k < d; ++k) {
            require(vol <= capacity / static_cast<std::size_t>(n) &&
                        vol * static_cast<std::size_t>(n) <= std::numeric_limits<SiteIndex>::max(),
                    Errc::cap_exceeded, "n^d exceeds lattice capacity");
            vol *= static_cast<std::size_t>(n);
        }
        volume_ = vol;

        coords_.resize(volume_ * static_cast<std::size_t>(d));
        std::vector<int> c(static_cast<std::size_t>(d), 1);
        for (std::size_t i = 0; i < volume_; ++i) {
            for (int k = 0; k < d; ++k) coords_[i * d + k] = c[k];
            for (int k = d - 1; k >= 0; --k) {
                if (++c[k] <= n) break;
                c[k] = 1;
            }
        }

        // stride of axis k is n^(d-1-k); iterating axes last-to-first gives ascending j
        std::vector<std::size_t> stride(static_cast<std::size_t>(d));
        std::size_t s = 1;
        for (int k = d - 1; k >= 0; --k) {
            stride[k] = s;
            s *= static_cast<std::size_t>(n);
        }
        for (std::size_t i = 0; i < volume_; ++i) {
            for (int k = d - 1; k >= 0; --k) {
                if (coords_[i * d + k] < n)
                    edges_.emplace_back(static_cast<SiteIndex>(i), static_cast<SiteIndex>(i + stride[k]));
            }
        }

        std::vector<std::vector<SiteIndex>> adj(volume_);
        for (auto [a, b] : edges_) {
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
        offsets_.reserve(volume_ + 1);
        offsets_.push_back(0);
        for (auto& row : adj) {
            std::sort(row.begin(), row.end());
            adjacency_.insert(adjacency_.end(), row.begin(), row.end());
            offsets_.push_back(adjacency_.size());
        }
    }

    int dimension() const noexcept { return d_; }
    int side() const noexcept { return n_; }
    std::size_t volume() const noexcept { return volume_; }

    std::span<const int> coords(SiteIndex i) const
    {
        require(i < volume_, Errc::invalid_argument, "site index out of range");
        return {coords_.data() + static_cast<std::size_t>(i) * d_, static_cast<std::size_t>(d_)};
    }

    const std::vector<std::pair<SiteIndex, SiteIndex>>& edges() const noexcept { return edges_; }

    /// Sites at L1-distance 1 from i, ascending.
    std::span<const SiteIndex> neighbors(SiteIndex i) const
    {
        require(i < volume_, Errc::invalid_argument, "site index out of range");
        return {adjacency_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }

    std::size_t expected_edge_count() const noexcept
    {
        std::size_t e = static_cast<std::size_t>(d_) * static_cast<std::size_t>(n_ - 1);
        for (int k = 0; k < d_ - 1; ++k) e *= static_cast<std::size_t>(n_);
        return e;
    }

private:
    int d_;
    int n_;
    std::size_t volume_ = 0;
    std::vector<int> coords_;
    std::vector<std::pair<SiteIndex, SiteIndex>> edges_;
    std::vector<SiteIndex> adjacency_;
    std::vector<std::size_t> offsets_;
};

inline Lattice build_lattice(int d, int n, std::size_t capacity = Lattice::kDefaultCapacity)
{
    return Lattice(d, n, capacity);
}

} // namespace rfim
