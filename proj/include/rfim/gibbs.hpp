#pragma once

#include "rfim/error.hpp"
#include "rfim/hamiltonian.hpp"
#include "rfim/model.hpp"
#include "rfim/overlaps.hpp"
#include "rfim/parallel.hpp"
#include "rfim/philox.hpp"
#include "rfim/spins.hpp"
#include "rfim/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rfim {

// ---------------------------------------------------------------------------
// Whole-table evaluation. Configurations of N <= 64 sites are indexed by
// their bit pattern b (σ_x = 2b_x - 1).

/// In-place unnormalized Walsh-Hadamard transform; size must be a power of two.
inline void walsh_hadamard(std::span<double> a) noexcept
{
    for (std::size_t len = 1; len < a.size(); len <<= 1)
        for (std::size_t i = 0; i < a.size(); i += len << 1)
            for (std::size_t j = i; j < i + len; ++j) {
                const double u = a[j];
                const double v = a[j + len];
                a[j] = u + v;
                a[j + len] = u - v;
            }
}

enum class Enumeration { automatic, gray, walsh };

namespace detail {

inline double sign_of(std::uint64_t down_bits) noexcept { return std::popcount(down_bits) & 1 ? -1.0 : 1.0; }

inline double evaluate_bits(const SpinPolynomial& poly, std::uint64_t bits) noexcept
{
    double e = poly.constant();
    for (const auto& t : poly.terms()) e += t.coef * sign_of(t.mask & ~bits);
    return e;
}

} // namespace detail

/// Values of `poly` on all 2^N configurations.
inline std::vector<double> enumerate_polynomial(const SpinPolynomial& poly, Enumeration how = Enumeration::automatic)
{
    const std::size_t n = poly.volume();
    require(n <= 30, Errc::cap_exceeded, "whole-table evaluation needs |V| <= 30");
    require(poly.finalized(), Errc::precondition, "polynomial not finalized");
    const std::size_t size = std::size_t{1} << n;
    if (how == Enumeration::automatic) how = poly.mean_degree() < static_cast<double>(n) ? Enumeration::gray : Enumeration::walsh;

    std::vector<double> out(size);
    if (how == Enumeration::walsh) {
        out[0] = poly.constant();
        for (const auto& t : poly.terms()) out[t.mask] += (t.sites.size() % 2 ? -1.0 : 1.0) * t.coef;
        walsh_hadamard(out);
        return out;
    }

    // Gray-code walk: one spin flip per step, ΔE = -2 σ_s h_s.
    std::vector<std::vector<std::pair<double, std::uint64_t>>> local(n);
    for (SiteIndex s = 0; s < n; ++s)
        for (auto t : poly.incidence(s)) {
            const auto& m = poly.terms()[t];
            local[s].emplace_back(m.coef, m.mask & ~(std::uint64_t{1} << s));
        }
    std::uint64_t bits = 0;
    double e = detail::evaluate_bits(poly, 0);
    out[0] = e;
    for (std::size_t k = 1; k < size; ++k) {
        const int s = std::countr_zero(k);
        double h = 0.0;
        for (auto [c, mask] : local[s]) h += c * detail::sign_of(mask & ~bits);
        const double sigma = (bits >> s) & 1u ? 1.0 : -1.0;
        e -= 2.0 * sigma * h;
        bits ^= std::uint64_t{1} << s;
        if ((k & 0xFFFu) == 0) e = detail::evaluate_bits(poly, bits); // bound round-off drift
        out[bits] = e;
    }
    return out;
}

/// K_k(j) for k, j in 0..n: transform of the weight-k indicator at a point of weight j.
inline std::vector<std::vector<double>> krawtchouk_table(std::size_t n)
{
    std::vector<std::vector<double>> binom(n + 1, std::vector<double>(n + 1, 0.0));
    for (std::size_t a = 0; a <= n; ++a) {
        binom[a][0] = 1.0;
        for (std::size_t b = 1; b <= a; ++b) binom[a][b] = binom[a - 1][b - 1] + (b <= a - 1 ? binom[a - 1][b] : 0.0);
    }
    std::vector<std::vector<double>> k(n + 1, std::vector<double>(n + 1, 0.0));
    for (std::size_t kk = 0; kk <= n; ++kk)
        for (std::size_t j = 0; j <= n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i <= std::min(j, kk); ++i) {
                if (kk - i > n - j) continue;
                s += (i % 2 ? -1.0 : 1.0) * binom[j][i] * binom[n - j][kk - i];
            }
            k[kk][j] = s;
        }
    return k;
}

// ---------------------------------------------------------------------------

/// A function of one overlap value; `id` keys caches, so equal ids must mean
/// equal functions.
struct OverlapFunction {
    std::string id;
    std::function<double(double)> fn;

    double operator()(double r) const { return fn(r); }
};

using ReplicaFunction = std::function<double(std::span<const SpinConfiguration>)>;

/// Common expectation interface ⟨·⟩ of a Gibbs measure with replicas.
class Ensemble {
public:
    virtual ~Ensemble() = default;

    virtual std::size_t volume() const = 0;

    /// ⟨transform(poly(σ))⟩ for one replica.
    virtual double expect(const SpinPolynomial& poly, const std::function<double(double)>& transform) = 0;
    double expect(const SpinPolynomial& poly)
    {
        return expect(poly, [](double v) { return v; });
    }

    /// ⟨Π_{ℓ} φ_ℓ(R_{1,ℓ+1})⟩ over 1 + phis.size() replicas.
    virtual double expect_star(std::span<const OverlapFunction> phis) = 0;

    /// ⟨f(σ¹..σᵐ)⟩ for a general replica observable.
    virtual double expect_replicas(const ReplicaFunction& f, int m) = 0;

    /// ⟨poly_i⟩ for several polynomials.
    virtual std::vector<double> expect_many(std::span<const SpinPolynomial> polys)
    {
        std::vector<double> out;
        for (const auto& p : polys) out.push_back(expect(p));
        return out;
    }

    /// Product of single-replica expectations: ⟨Π_i f_i(σ^i)⟩ under the product measure.
    double expect_factorized(std::span<const SpinPolynomial> factors)
    {
        double r = 1.0;
        for (const auto& f : factors) r *= expect(f);
        return r;
    }
};

struct ExactOptions {
    unsigned volume_cap = 24;
    unsigned joint_bits_cap = 20;   // joint enumeration of m replicas when m·|V| <= cap
    std::size_t table_samples = 4000;
    std::uint64_t sample_seed = 0;
    Enumeration strategy = Enumeration::automatic;
};

/// Exact Gibbs table over all 2^|V| configurations.
class ExactEnsemble final : public Ensemble {
public:
    explicit ExactEnsemble(const SpinPolynomial& exponent, ExactOptions opt = {})
        : n_(exponent.volume()), opt_(opt)
    {
        require(n_ >= 1, Errc::invalid_argument, "empty volume");
        require(n_ <= opt.volume_cap, Errc::cap_exceeded,
                "|V| = " + std::to_string(n_) + " exceeds the enumeration cap " + std::to_string(opt.volume_cap));
        auto e = enumerate_polynomial(exponent, opt.strategy);
        const double emax = *std::max_element(e.begin(), e.end());
        double z = 0.0;
        for (auto& v : e) {
            v = std::exp(v - emax);
            z += v;
        }
        for (auto& v : e) v /= z;
        probs_ = std::move(e);
        log_z_ = emax + std::log(z);
    }

    std::size_t volume() const override { return n_; }
    double log_partition() const noexcept { return log_z_; }
    const std::vector<double>& probabilities() const noexcept { return probs_; }
    double probability(std::uint64_t bits) const { return probs_.at(bits); }

    double expect_bits(const std::function<double(std::uint64_t)>& f) const
    {
        double s = 0.0;
        for (std::size_t b = 0; b < probs_.size(); ++b) s += probs_[b] * f(b);
        return s;
    }

    std::vector<double> values(const SpinPolynomial& poly) const
    {
        require(poly.volume() == n_, Errc::dimension_mismatch, "polynomial volume differs from ensemble");
        return enumerate_polynomial(poly, opt_.strategy);
    }

    double expect(const SpinPolynomial& poly, const std::function<double(double)>& transform) override
    {
        const auto v = values(poly);
        double s = 0.0;
        for (std::size_t b = 0; b < v.size(); ++b) s += probs_[b] * transform(v[b]);
        return s;
    }
    using Ensemble::expect;

    /// Single pass over the table; cost 2^|V| times the total monomial count.
    std::vector<double> expect_many(std::span<const SpinPolynomial> polys) override
    {
        std::vector<double> out(polys.size(), 0.0);
        for (std::size_t b = 0; b < probs_.size(); ++b)
            for (std::size_t i = 0; i < polys.size(); ++i) out[i] += probs_[b] * detail::evaluate_bits(polys[i], b);
        return out;
    }

    /// Φ(σ) = Σ_τ G(τ) φ(R(σ, τ)) for every σ, via XOR convolution.
    const std::vector<double>& conditional(const OverlapFunction& phi)
    {
        if (auto it = cache_.find(phi.id); it != cache_.end()) return it->second;
        if (transformed_.empty()) {
            transformed_ = probs_;
            walsh_hadamard(transformed_);
            kraw_ = krawtchouk_table(n_);
        }
        std::vector<double> hat(n_ + 1, 0.0);
        for (std::size_t j = 0; j <= n_; ++j)
            for (std::size_t k = 0; k <= n_; ++k) hat[j] += phi(overlap_from_distance(k, n_)) * kraw_[k][j];
        std::vector<double> out(transformed_.size());
        for (std::size_t s = 0; s < out.size(); ++s) out[s] = transformed_[s] * hat[std::popcount(s)];
        walsh_hadamard(out);
        const double inv = 1.0 / static_cast<double>(out.size());
        for (auto& v : out) v *= inv;
        return cache_.emplace(phi.id, std::move(out)).first->second;
    }

    double expect_star(std::span<const OverlapFunction> phis) override
    {
        if (phis.empty()) return 1.0;
        std::vector<const std::vector<double>*> tables;
        for (const auto& p : phis) tables.push_back(&conditional(p));
        double s = 0.0;
        for (std::size_t b = 0; b < probs_.size(); ++b) {
            double prod = probs_[b];
            for (auto* t : tables) prod *= (*t)[b];
            s += prod;
        }
        return s;
    }

    double expect_replicas(const ReplicaFunction& f, int m) override
    {
        require(m >= 1, Errc::invalid_argument, "m must be >= 1");
        std::vector<SpinConfiguration> rs(static_cast<std::size_t>(m), SpinConfiguration(n_));
        if (static_cast<std::size_t>(m) * n_ <= opt_.joint_bits_cap) {
            const std::size_t per = probs_.size();
            std::vector<std::uint64_t> idx(static_cast<std::size_t>(m), 0);
            double s = 0.0;
            while (true) {
                double w = 1.0;
                for (int i = 0; i < m; ++i) {
                    w *= probs_[idx[i]];
                    rs[i] = SpinConfiguration::from_bits(idx[i], n_);
                }
                s += w * f(rs);
                int k = m - 1;
                while (k >= 0 && ++idx[k] == per) idx[k--] = 0;
                if (k < 0) break;
            }
            return s;
        }
        // Monte Carlo over the exact table
        PhiloxEngine rng(opt_.sample_seed, 0x7AB1Eu);
        double s = 0.0;
        for (std::size_t t = 0; t < opt_.table_samples; ++t) {
            for (int i = 0; i < m; ++i) rs[i] = SpinConfiguration::from_bits(sample(rng), n_);
            s += f(rs);
        }
        return s / static_cast<double>(opt_.table_samples);
    }

    bool joint_exact(int m) const noexcept { return static_cast<std::size_t>(m) * n_ <= opt_.joint_bits_cap; }

    /// One configuration drawn from the table.
    std::uint64_t sample(PhiloxEngine& rng)
    {
        if (cdf_.empty()) {
            cdf_.resize(probs_.size());
            double c = 0.0;
            for (std::size_t b = 0; b < probs_.size(); ++b) cdf_[b] = (c += probs_[b]);
        }
        const double u = rng.uniform() * cdf_.back();
        const auto i = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
        return std::min(i, probs_.size() - 1);
    }

private:
    std::size_t n_;
    ExactOptions opt_;
    std::vector<double> probs_;
    double log_z_ = 0.0;
    std::vector<double> transformed_;
    std::vector<std::vector<double>> kraw_;
    std::map<std::string, std::vector<double>> cache_;
    std::vector<double> cdf_;
};

inline ExactEnsemble enumerate(const SpinPolynomial& exponent, ExactOptions opt = {})
{
    return ExactEnsemble(exponent, opt);
}

// ---------------------------------------------------------------------------
// Glauber heat-bath dynamics.

/// P(σ_s = +1 | rest) = 1 / (1 + e^{-2 h_s}).
inline double heat_bath_probability(const SpinPolynomial& exponent, const SpinConfiguration& sigma, SiteIndex s)
{
    return 1.0 / (1.0 + std::exp(-2.0 * exponent.local_field(sigma, s)));
}

/// Probability that one single-site heat-bath move at s takes σ to σ with
/// σ_s replaced by `target`.
inline double heat_bath_transition(const SpinPolynomial& exponent, const SpinConfiguration& sigma, SiteIndex s,
                                   int target)
{
    const double up = heat_bath_probability(exponent, sigma, s);
    return target > 0 ? up : 1.0 - up;
}

struct McmcOptions {
    int replicas = 2;
    std::size_t sweeps = 10'000; // post-burn-in sweeps
    std::size_t burn_in = 1'000;
    std::size_t thin = 10;
    std::uint64_t seed = 0;
};

/// Independent heat-bath chains, one per replica, each on its own RNG
/// stream. `visit` receives one ReplicaSet every `thin` sweeps after burn-in.
template <class Visit>
void run_heat_bath(const SpinPolynomial& exponent, const McmcOptions& opt, Visit&& visit)
{
    require(opt.replicas >= 1, Errc::invalid_argument, "m must be >= 1");
    require(opt.thin >= 1, Errc::invalid_argument, "thin must be >= 1");
    const std::size_t n = exponent.volume();
    std::vector<PhiloxEngine> rng;
    ReplicaSet state;
    for (int r = 0; r < opt.replicas; ++r) {
        rng.emplace_back(mix_seed(opt.seed, {static_cast<std::uint64_t>(r)}), 0xC4A1Eu);
        SpinConfiguration s(n);
        for (std::size_t x = 0; x < n; ++x) s.set(x, rng.back()() >> 63 ? 1 : -1);
        state.push_back(std::move(s));
    }
    auto sweep = [&] {
        for (int r = 0; r < opt.replicas; ++r)
            for (SiteIndex x = 0; x < n; ++x) {
                const double up = heat_bath_probability(exponent, state[r], x);
                state[r].set(x, rng[r].uniform() < up ? 1 : -1);
            }
    };
    for (std::size_t t = 0; t < opt.burn_in; ++t) sweep();
    for (std::size_t t = 1; t <= opt.sweeps; ++t) {
        sweep();
        if (t % opt.thin == 0) visit(static_cast<const ReplicaSet&>(state));
    }
}

inline std::vector<ReplicaSet> mcmc_replicas(const SpinPolynomial& exponent, const McmcOptions& opt)
{
    std::vector<ReplicaSet> out;
    out.reserve(opt.sweeps / std::max<std::size_t>(opt.thin, 1));
    run_heat_bath(exponent, opt, [&](const ReplicaSet& rs) { out.push_back(rs); });
    return out;
}

/// Batch-means estimate of ⟨f⟩ along a sampled chain.
inline Estimate mcmc_estimate(const std::vector<ReplicaSet>& samples,
                              const std::function<double(const ReplicaSet&)>& f, std::size_t batches = 50)
{
    std::vector<double> series;
    series.reserve(samples.size());
    for (const auto& rs : samples) series.push_back(f(rs));
    return batch_means(series, batches);
}

/// Ensemble backed by stored heat-bath samples.
class McmcEnsemble final : public Ensemble {
public:
    McmcEnsemble(const SpinPolynomial& exponent, const McmcOptions& opt)
        : n_(exponent.volume()), replicas_(opt.replicas), samples_(mcmc_replicas(exponent, opt))
    {
        require(!samples_.empty(), Errc::invalid_argument, "MCMC produced no samples (sweeps < thin)");
    }

    std::size_t volume() const override { return n_; }
    const std::vector<ReplicaSet>& samples() const noexcept { return samples_; }

    double expect(const SpinPolynomial& poly, const std::function<double(double)>& transform) override
    {
        double s = 0.0;
        for (const auto& rs : samples_)
            for (const auto& c : rs) s += transform(poly.evaluate(c));
        return s / static_cast<double>(samples_.size() * rs_size());
    }
    using Ensemble::expect;

    double expect_star(std::span<const OverlapFunction> phis) override
    {
        require(phis.size() + 1 <= rs_size(), Errc::precondition, "not enough MCMC replicas for this observable");
        double s = 0.0;
        for (const auto& rs : samples_) {
            double prod = 1.0;
            for (std::size_t l = 0; l < phis.size(); ++l) prod *= phis[l](overlap(rs[0], rs[l + 1]));
            s += prod;
        }
        return s / static_cast<double>(samples_.size());
    }

    double expect_replicas(const ReplicaFunction& f, int m) override
    {
        require(m >= 1 && static_cast<std::size_t>(m) <= rs_size(), Errc::precondition,
                "not enough MCMC replicas for this observable");
        double s = 0.0;
        for (const auto& rs : samples_) s += f(std::span<const SpinConfiguration>(rs.data(), static_cast<std::size_t>(m)));
        return s / static_cast<double>(samples_.size());
    }

private:
    std::size_t rs_size() const noexcept { return static_cast<std::size_t>(replicas_); }

    std::size_t n_;
    int replicas_;
    std::vector<ReplicaSet> samples_;
};

// ---------------------------------------------------------------------------

struct FreeEnergyStats {
    double mean_f = 0.0;
    double var_f = 0.0;
    std::vector<double> f_samples;   // F_n = log Z_n per realization
    std::vector<double> psi_samples; // ψ_n = F_n / |V|
    double p_n = 0.0;                // mean ψ_n
    double p_n_std_error = 0.0;
};

/// Disorder statistics of the exact log-partition function.
inline FreeEnergyStats free_energy_stats(const Lattice& lat, const ModelSpec& spec, std::size_t n_disorder,
                                         std::uint64_t seed, unsigned workers = 1, ExactOptions opt = {})
{
    require(n_disorder >= 1, Errc::invalid_argument, "n_disorder must be >= 1");
    FreeEnergyStats st;
    st.f_samples.resize(n_disorder);
    parallel_for(n_disorder, workers, [&](std::size_t r) {
        const auto real = realize(spec, lat, seed, r);
        st.f_samples[r] = ExactEnsemble(real.exponent, opt).log_partition();
    });
    const auto vol = static_cast<double>(lat.volume());
    for (double f : st.f_samples) st.psi_samples.push_back(f / vol);
    st.mean_f = mean_of(st.f_samples);
    st.var_f = variance_of(st.f_samples);
    const auto e = estimate_of(st.psi_samples);
    st.p_n = e.value;
    st.p_n_std_error = e.std_error;
    return st;
}

} // namespace rfim
