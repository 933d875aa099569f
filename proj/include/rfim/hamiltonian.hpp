#pragma once

#include "rfim/disorder.hpp"
#include "rfim/error.hpp"
#include "rfim/lattice.hpp"
#include "rfim/philox.hpp"
#include "rfim/spins.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace rfim {

/// Parameters of the Gibbs exponent: coupling β, field gap μ - h, and the
/// p-spin perturbation c_n Σ_{p=2}^{P_max} α_p 2^{-p} H_{n;p}.
struct ModelParams {
    double beta = 1.0;
    double mu = 1.0;
    double h = 0.0;
    std::vector<double> alpha; // alpha[p-2] for p = 2..p_max; missing entries are 0
    double c_n = 0.0;
    int p_max = 3;

    double field_gap() const noexcept { return mu - h; }

    double alpha_p(int p) const noexcept
    {
        const auto i = static_cast<std::size_t>(p - 2);
        return p >= 2 && i < alpha.size() ? alpha[i] : 0.0;
    }

    bool perturbed() const noexcept
    {
        if (c_n == 0.0) return false;
        for (int p = 2; p <= p_max; ++p)
            if (alpha_p(p) != 0.0) return true;
        return false;
    }

    void validate() const
    {
        require(beta >= 0.0 && std::isfinite(beta), Errc::invalid_argument, "beta must be >= 0");
        require(mu > 0.0, Errc::invalid_argument, "mu must be > 0");
        require(mu - h > 0.0, Errc::invalid_argument, "mu - h must be > 0");
        require(c_n >= 0.0, Errc::invalid_argument, "c_n must be >= 0");
        require(p_max >= 1 && p_max <= 6, Errc::invalid_argument, "p_max must be in 1..6");
        for (double a : alpha) require(std::abs(a) <= 1.0, Errc::invalid_argument, "|alpha_p| must be <= 1");
    }

    /// Amplitude bound on the dropped tail p > p_max: c_n √|V| 2^{-p_max}.
    double truncation_bound(std::size_t volume) const noexcept
    {
        return c_n * std::sqrt(static_cast<double>(volume)) * std::ldexp(1.0, -p_max);
    }
};

/// ξ_{x1..xp} generated on demand, keyed by (seed, p, flat index of the tuple).
class PSpinDisorder {
public:
    PSpinDisorder(std::uint64_t seed, int p_max, DisorderFamily family)
        : seed_(seed), p_max_(p_max), family_(std::move(family))
    {
        require(p_max >= 1 && p_max <= 6, Errc::invalid_argument, "p_max must be in 1..6");
    }

    std::uint64_t seed() const noexcept { return seed_; }
    int p_max() const noexcept { return p_max_; }
    const DisorderFamily& family() const noexcept { return family_; }

    double xi(int p, std::span<const SiteIndex> idx, std::size_t volume) const
    {
        require(static_cast<int>(idx.size()) == p, Errc::dimension_mismatch, "xi index arity must equal p");
        std::uint64_t flat = 0;
        for (auto x : idx) {
            require(x < volume, Errc::invalid_argument, "xi index out of range");
            flat = flat * volume + x;
        }
        return xi_flat(p, flat);
    }

    double xi_flat(int p, std::uint64_t flat) const noexcept
    {
        return family_.sample(seed_, flat, 0x70000u + static_cast<std::uint32_t>(p));
    }

private:
    std::uint64_t seed_;
    int p_max_;
    DisorderFamily family_;
};

struct PSpinOptions {
    std::uint64_t budget = 10'000'000; // exact-summation cap on |V|^p
    bool streaming = false;           // evaluate above the cap anyway
};

inline std::uint64_t checked_power(std::size_t base, int p)
{
    std::uint64_t r = 1;
    for (int i = 0; i < p; ++i) {
        if (base != 0 && r > UINT64_MAX / base) return UINT64_MAX;
        r *= base;
    }
    return r;
}

/// Visits every tuple (x_1..x_p) ∈ V^p in row-major order with its flat index.
template <class Fn>
void for_each_tuple(std::size_t volume, int p, Fn&& fn)
{
    std::array<SiteIndex, 8> idx{};
    const std::uint64_t total = checked_power(volume, p);
    for (std::uint64_t flat = 0; flat < total; ++flat) {
        fn(std::span<const SiteIndex>(idx.data(), static_cast<std::size_t>(p)), flat);
        for (int k = p - 1; k >= 0; --k) {
            if (++idx[k] < volume) break;
            idx[k] = 0;
        }
    }
}

/// H_{n;p}(σ) = |V|^{-(p-1)/2} Σ_{V^p} ξ σ_{x1}···σ_{xp}, diagonal tuples included.
inline double pspin_term(const SpinConfiguration& sigma, const PSpinDisorder& xi, int p, PSpinOptions opt = {})
{
    require(p >= 2 && p <= xi.p_max(), Errc::invalid_argument, "p must be in 2..p_max");
    const std::size_t vol = sigma.size();
    const std::uint64_t terms = checked_power(vol, p);
    if (terms > opt.budget && !opt.streaming)
        fail(Errc::budget_exceeded, "|V|^p = " + std::to_string(terms) + " exceeds the exact-summation budget");
    double sum = 0.0;
    double max_abs = 0.0;
    for_each_tuple(vol, p, [&](std::span<const SiteIndex> idx, std::uint64_t flat) {
        const double x = xi.xi_flat(p, flat);
        int s = 1;
        for (auto i : idx) s *= sigma[i];
        sum += s * x;
        max_abs = std::max(max_abs, std::abs(x));
    });
    const double value = sum / std::pow(static_cast<double>(vol), (p - 1) / 2.0);
    // deterministic bound |H| <= |V|^{(p+1)/2} max|ξ|
    const double bound = std::pow(static_cast<double>(vol), (p + 1) / 2.0) * max_abs;
    require(std::abs(value) <= bound * (1.0 + 1e-12) + 1e-300, Errc::precondition, "p-spin term exceeds its bound");
    return value;
}

inline double base_exponent(const SpinConfiguration& sigma, const Lattice& lat, const FieldRealization& g,
                            const ModelParams& params)
{
    require(sigma.size() == lat.volume() && g.size() == lat.volume(), Errc::dimension_mismatch,
            "configuration, field and lattice sizes differ");
    double bonds = 0.0;
    for (auto [a, b] : lat.edges()) bonds += sigma[a] * sigma[b];
    double field = 0.0;
    for (std::size_t x = 0; x < lat.volume(); ++x) field += g[x] * sigma[x];
    return params.beta * bonds + params.field_gap() * field;
}

inline double perturbed_exponent(const SpinConfiguration& sigma, const Lattice& lat, const FieldRealization& g,
                                 const PSpinDisorder* xi, const ModelParams& params, PSpinOptions opt = {})
{
    double e = base_exponent(sigma, lat, g, params);
    if (!params.perturbed()) return e;
    require(xi != nullptr, Errc::invalid_argument, "perturbed exponent needs p-spin disorder");
    for (int p = 2; p <= params.p_max; ++p) {
        const double a = params.alpha_p(p);
        if (a != 0.0) e += params.c_n * a * std::ldexp(1.0, -p) * pspin_term(sigma, *xi, p, opt);
    }
    return e;
}

// ---------------------------------------------------------------------------
// Multilinear form. Every exponent and disorder observable here is a
// polynomial Σ_T c_T Π_{x∈T} σ_x over subsets T; repeated indices cancel
// because σ_x² = 1.

struct Monomial {
    double coef = 0.0;
    std::vector<SiteIndex> sites; // sorted, distinct
    std::uint64_t mask = 0;       // valid when volume <= 64
};

class SpinPolynomial {
public:
    SpinPolynomial() = default;
    explicit SpinPolynomial(std::size_t volume) : volume_(volume), incidence_(volume) {}

    std::size_t volume() const noexcept { return volume_; }
    double constant() const noexcept { return constant_; }
    const std::vector<Monomial>& terms() const noexcept { return terms_; }

    /// Adds coef · Π σ_{idx_i}; idx may repeat and be unsorted.
    void add(double coef, std::span<const SiteIndex> idx)
    {
        std::vector<SiteIndex> s(idx.begin(), idx.end());
        std::sort(s.begin(), s.end());
        std::vector<SiteIndex> odd;
        for (std::size_t i = 0; i < s.size();) {
            std::size_t j = i;
            while (j < s.size() && s[j] == s[i]) ++j;
            if ((j - i) % 2) odd.push_back(s[i]);
            i = j;
        }
        for (auto x : odd) require(x < volume_, Errc::invalid_argument, "monomial site out of range");
        if (odd.empty()) {
            constant_ += coef;
            return;
        }
        pending_[std::move(odd)] += coef;
        finalized_ = false;
    }
    void add(double coef, std::initializer_list<SiteIndex> idx) { add(coef, std::span<const SiteIndex>(idx.begin(), idx.size())); }
    void add_constant(double c) noexcept { constant_ += c; }

    /// Merges pending terms and builds per-site incidence.
    SpinPolynomial& finalize()
    {
        if (finalized_) return *this;
        for (auto& t : terms_) pending_[t.sites] += t.coef;
        terms_.clear();
        for (auto& [sites, c] : pending_) {
            if (c == 0.0) continue;
            Monomial m{c, sites, 0};
            if (volume_ <= 64)
                for (auto x : sites) m.mask |= std::uint64_t{1} << x;
            terms_.push_back(std::move(m));
        }
        pending_.clear();
        incidence_.assign(volume_, {});
        for (std::size_t t = 0; t < terms_.size(); ++t)
            for (auto x : terms_[t].sites) incidence_[x].push_back(static_cast<std::uint32_t>(t));
        finalized_ = true;
        return *this;
    }

    bool finalized() const noexcept { return finalized_; }

    double evaluate(const SpinConfiguration& sigma) const
    {
        require(finalized_, Errc::precondition, "polynomial not finalized");
        require(sigma.size() == volume_, Errc::dimension_mismatch, "configuration size differs from polynomial");
        double e = constant_;
        for (const auto& t : terms_) {
            int s = 1;
            for (auto x : t.sites) s *= sigma[x];
            e += t.coef * s;
        }
        return e;
    }

    /// h_s = Σ_{T∋s} c_T Π_{T∖s} σ, so that the exponent is σ_s h_s + (terms without s).
    double local_field(const SpinConfiguration& sigma, SiteIndex s) const
    {
        double h = 0.0;
        for (auto t : incidence_[s]) {
            int v = 1;
            for (auto x : terms_[t].sites)
                if (x != s) v *= sigma[x];
            h += terms_[t].coef * v;
        }
        return h;
    }

    const std::vector<std::uint32_t>& incidence(SiteIndex s) const { return incidence_[s]; }

    /// Mean number of monomials touching a site.
    double mean_degree() const noexcept
    {
        if (volume_ == 0) return 0.0;
        std::size_t total = 0;
        for (const auto& t : terms_) total += t.sites.size();
        return static_cast<double>(total) / static_cast<double>(volume_);
    }

    SpinPolynomial& operator+=(const SpinPolynomial& other)
    {
        require(other.volume_ == volume_, Errc::dimension_mismatch, "polynomial volumes differ");
        constant_ += other.constant_;
        for (const auto& t : other.terms_) pending_[t.sites] += t.coef;
        for (const auto& [k, c] : other.pending_) pending_[k] += c;
        finalized_ = false;
        return *this;
    }

    SpinPolynomial& scale(double a)
    {
        constant_ *= a;
        for (auto& t : terms_) t.coef *= a;
        for (auto& [k, c] : pending_) c *= a;
        return *this;
    }

private:
    std::size_t volume_ = 0;
    double constant_ = 0.0;
    std::vector<Monomial> terms_;
    std::map<std::vector<SiteIndex>, double> pending_;
    std::vector<std::vector<std::uint32_t>> incidence_;
    bool finalized_ = true;
};

/// Σ_{V^p} ξ σ…σ folded into multilinear form, scaled by `scale`.
inline SpinPolynomial pspin_polynomial(std::size_t volume, const PSpinDisorder& xi, int p, double scale,
                                       PSpinOptions opt = {})
{
    const std::uint64_t terms = checked_power(volume, p);
    if (terms > opt.budget && !opt.streaming)
        fail(Errc::budget_exceeded, "|V|^p = " + std::to_string(terms) + " exceeds the exact-summation budget");
    SpinPolynomial poly(volume);
    for_each_tuple(volume, p, [&](std::span<const SiteIndex> idx, std::uint64_t flat) {
        poly.add(scale * xi.xi_flat(p, flat), idx);
    });
    return std::move(poly.finalize());
}

inline SpinPolynomial base_polynomial(const Lattice& lat, const FieldRealization& g, const ModelParams& params)
{
    require(g.size() == lat.volume(), Errc::dimension_mismatch, "field size differs from lattice volume");
    SpinPolynomial poly(lat.volume());
    for (auto [a, b] : lat.edges())
        if (params.beta != 0.0) poly.add(params.beta, {a, b});
    for (std::size_t x = 0; x < lat.volume(); ++x)
        if (g[x] != 0.0) poly.add(params.field_gap() * g[x], {static_cast<SiteIndex>(x)});
    return std::move(poly.finalize());
}

/// The full perturbed exponent as a polynomial.
inline SpinPolynomial exponent_polynomial(const Lattice& lat, const FieldRealization& g, const PSpinDisorder* xi,
                                          const ModelParams& params, PSpinOptions opt = {})
{
    params.validate();
    SpinPolynomial poly = base_polynomial(lat, g, params);
    if (!params.perturbed()) return poly;
    require(xi != nullptr, Errc::invalid_argument, "perturbed exponent needs p-spin disorder");
    const auto vol = static_cast<double>(lat.volume());
    for (int p = 2; p <= params.p_max; ++p) {
        const double a = params.alpha_p(p);
        if (a == 0.0) continue;
        const double scale = params.c_n * a * std::ldexp(1.0, -p) / std::pow(vol, (p - 1) / 2.0);
        poly += pspin_polynomial(lat.volume(), *xi, p, scale, opt);
    }
    return std::move(poly.finalize());
}

} // namespace rfim
