#pragma once

#include "rfim/disorder.hpp"
#include "rfim/error.hpp"
#include "rfim/hamiltonian.hpp"
#include "rfim/spins.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

namespace rfim {

/// Number of sites where the two configurations disagree.
inline std::size_t disagreements(const SpinConfiguration& a, const SpinConfiguration& b)
{
    require(a.size() == b.size(), Errc::dimension_mismatch, "overlap of configurations with different lengths");
    std::size_t d = 0;
    const auto& wa = a.words();
    const auto& wb = b.words();
    for (std::size_t i = 0; i < wa.size(); ++i) d += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
    return d;
}

/// R(σ_a, σ_b) = 1 - 2·popcount(a ⊕ b)/|V|.
/// Overlap from the hamming distance between two configurations of n sites.
constexpr double overlap_from_distance(std::size_t distance, std::size_t n) noexcept
{
    return static_cast<double>(static_cast<std::int64_t>(n) - 2 * static_cast<std::int64_t>(distance)) /
           static_cast<double>(n);
}

inline double overlap(const SpinConfiguration& a, const SpinConfiguration& b)
{
    require(a.size() > 0, Errc::invalid_argument, "overlap of empty configurations");
    return overlap_from_distance(disagreements(a, b), a.size());
}

inline double magnetization(const SpinConfiguration& s)
{
    require(s.size() > 0, Errc::invalid_argument, "magnetization of empty configuration");
    std::size_t up = 0;
    for (auto w : s.words()) up += static_cast<std::size_t>(std::popcount(w));
    return overlap_from_distance(s.size() - up, s.size());
}

/// Gram matrix of m replicas, (1/|V|) S Sᵀ.
class OverlapArray {
public:
    explicit OverlapArray(const ReplicaSet& rs)
    {
        require(rs.size() >= 2, Errc::invalid_argument, "overlap array needs m >= 2");
        m_ = rs.size();
        values_.assign(m_ * m_, 1.0);
        for (std::size_t a = 0; a < m_; ++a)
            for (std::size_t b = a + 1; b < m_; ++b) values_[a * m_ + b] = values_[b * m_ + a] = overlap(rs[a], rs[b]);
    }

    std::size_t size() const noexcept { return m_; }
    double operator()(std::size_t a, std::size_t b) const noexcept { return values_[a * m_ + b]; }

    double min_eigenvalue() const
    {
        Eigen::MatrixXd m(m_, m_);
        for (std::size_t a = 0; a < m_; ++a)
            for (std::size_t b = 0; b < m_; ++b) m(a, b) = (*this)(a, b);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    bool is_symmetric() const noexcept
    {
        for (std::size_t a = 0; a < m_; ++a)
            for (std::size_t b = 0; b < m_; ++b)
                if ((*this)(a, b) != (*this)(b, a)) return false;
        return true;
    }

private:
    std::size_t m_ = 0;
    std::vector<double> values_;
};

inline OverlapArray overlap_array(const ReplicaSet& rs) { return OverlapArray(rs); }

/// Δ_n = (1/|V|) Σ_x g_x σ_x.
inline double delta_n(const SpinConfiguration& s, const FieldRealization& g)
{
    require(s.size() == g.size(), Errc::dimension_mismatch, "field and configuration sizes differ");
    double sum = 0.0;
    double gmax = 0.0;
    for (std::size_t x = 0; x < s.size(); ++x) {
        sum += g[x] * s[x];
        gmax = std::max(gmax, std::abs(g[x]));
    }
    const double d = sum / static_cast<double>(s.size());
    require(std::abs(d) <= gmax * (1.0 + 1e-12), Errc::precondition, "|Delta_n| exceeds max|g|");
    return d;
}

/// Δ_{n;p} = |V|^{-(p+1)/2} Σ_{V^p} ξ̃ σ…σ, with ξ̃ = g at p = 1 (equal to Δ_n).
inline double delta_np(const SpinConfiguration& s, const FieldRealization& g, const PSpinDisorder* xi, int p,
                       PSpinOptions opt = {})
{
    require(p >= 1, Errc::invalid_argument, "p must be >= 1");
    if (p == 1) return delta_n(s, g);
    require(xi != nullptr, Errc::invalid_argument, "p >= 2 needs p-spin disorder");
    // H_{n;p} carries |V|^{-(p-1)/2}; one more 1/|V| gives the Δ normalization
    return pspin_term(s, *xi, p, opt) / static_cast<double>(s.size());
}

/// Δ_{n;p} as a multilinear polynomial, for whole-table evaluation.
inline SpinPolynomial delta_polynomial(const FieldRealization& g, const PSpinDisorder* xi, int p,
                                       PSpinOptions opt = {})
{
    require(p >= 1, Errc::invalid_argument, "p must be >= 1");
    const std::size_t vol = g.size();
    if (p == 1) {
        SpinPolynomial poly(vol);
        for (std::size_t x = 0; x < vol; ++x)
            if (g[x] != 0.0) poly.add(g[x] / static_cast<double>(vol), {static_cast<SiteIndex>(x)});
        return std::move(poly.finalize());
    }
    require(xi != nullptr, Errc::invalid_argument, "p >= 2 needs p-spin disorder");
    return pspin_polynomial(vol, *xi, p, std::pow(static_cast<double>(vol), -(p + 1) / 2.0), opt);
}

inline SpinPolynomial magnetization_polynomial(std::size_t volume)
{
    SpinPolynomial poly(volume);
    for (std::size_t x = 0; x < volume; ++x) poly.add(1.0 / static_cast<double>(volume), {static_cast<SiteIndex>(x)});
    return std::move(poly.finalize());
}

} // namespace rfim
