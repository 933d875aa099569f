#pragma once

#include "rfim/error.hpp"
#include "rfim/gibbs.hpp"
#include "rfim/model.hpp"
#include "rfim/overlaps.hpp"
#include "rfim/parallel.hpp"
#include "rfim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rfim {

// ---------------------------------------------------------------------------
// ψ and f libraries. Every registered function maps [-1,1] into [-1,1].

namespace detail {

inline void check_bounded(const OverlapFunction& f)
{
    for (int i = 0; i <= 2000; ++i) {
        const double r = -1.0 + i / 1000.0;
        const double v = f(r);
        require(std::isfinite(v) && std::abs(v) <= 1.0, Errc::invalid_argument,
                "overlap function '" + f.id + "' leaves [-1,1]");
    }
}

inline double parse_number(const std::string& s, const std::string& what)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(Errc::invalid_argument, "malformed number in " + what);
}

} // namespace detail

inline OverlapFunction overlap_one() { return {"one", [](double) { return 1.0; }}; }
inline OverlapFunction overlap_identity() { return {"id", [](double r) { return r; }}; }
inline OverlapFunction overlap_power(int p)
{
    require(p >= 1 && p <= 6, Errc::invalid_argument, "overlap power must be in 1..6");
    if (p == 1) return overlap_identity();
    return {"pow:" + std::to_string(p), [p](double r) { return std::pow(r, p); }};
}
/// 1{r >= q}
inline OverlapFunction overlap_threshold(double q)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "thr:%.17g", q);
    return {buf, [q](double r) { return r >= q ? 1.0 : 0.0; }};
}

inline OverlapFunction product(const OverlapFunction& a, const OverlapFunction& b)
{
    if (a.id == "one") return b;
    if (b.id == "one") return a;
    return {a.id + "*" + b.id, [fa = a.fn, fb = b.fn](double r) { return fa(r) * fb(r); }};
}

/// ψ specs: "id", "pow:p", "thr:q".
inline OverlapFunction parse_psi(const std::string& spec)
{
    OverlapFunction f;
    if (spec == "id") f = overlap_identity();
    else if (spec == "one") f = overlap_one();
    else if (spec.rfind("pow:", 0) == 0) f = overlap_power(static_cast<int>(detail::parse_number(spec.substr(4), spec)));
    else if (spec.rfind("thr:", 0) == 0) f = overlap_threshold(detail::parse_number(spec.substr(4), spec));
    else fail(Errc::invalid_argument, "unknown psi '" + spec + "'");
    detail::check_bounded(f);
    return f;
}

/// f as a star product Π_{ℓ=2}^{m} φ_ℓ(R_{1,ℓ}); entry ℓ-2 holds φ_ℓ.
struct StarFunction {
    std::string id;
    std::vector<OverlapFunction> factors;
};

/// f specs: "one", "r12", "r12^2", "r12*r13", "ind(r12>=q)".
inline StarFunction parse_f(const std::string& spec, int m)
{
    require(m >= 2, Errc::invalid_argument, "m must be >= 2");
    StarFunction f{spec, std::vector<OverlapFunction>(static_cast<std::size_t>(m - 1), overlap_one())};
    if (spec == "one") {
    } else if (spec == "r12") {
        f.factors[0] = overlap_identity();
    } else if (spec == "r12^2") {
        f.factors[0] = overlap_power(2);
    } else if (spec == "r12*r13") {
        require(m >= 3, Errc::invalid_argument, "f = r12*r13 needs m >= 3");
        f.factors[0] = overlap_identity();
        f.factors[1] = overlap_identity();
    } else if (spec.rfind("ind(r12>=", 0) == 0 && spec.back() == ')') {
        f.factors[0] = overlap_threshold(detail::parse_number(spec.substr(9, spec.size() - 10), spec));
    } else {
        fail(Errc::invalid_argument, "unknown f '" + spec + "'");
    }
    for (const auto& phi : f.factors) detail::check_bounded(phi);
    return f;
}

// ---------------------------------------------------------------------------

enum class Mode { exact, mcmc };

inline const char* to_string(Mode m) noexcept { return m == Mode::exact ? "exact" : "mcmc"; }

struct EstimatorConfig {
    Mode mode = Mode::exact;
    std::size_t n_disorder = 400;
    std::size_t sweeps = 10'000;
    std::size_t burn_in = 1'000;
    std::size_t thin = 10;
    std::size_t table_samples = 2'000;
    bool paired = true;
    unsigned workers = 1;
    unsigned volume_cap = 24;
};

/// Builds the ensemble of each realization and collects fn's values by index.
/// `replicas` is the number of MCMC chains needed by fn.
inline std::vector<std::vector<double>> sweep_realizations(
    const ModelSpec& spec, const Lattice& lat, const EstimatorConfig& cfg, std::uint64_t seed, int replicas,
    const std::function<std::vector<double>(Ensemble&, const Realization&)>& fn)
{
    require(cfg.n_disorder >= 1, Errc::invalid_argument, "n_disorder must be >= 1");
    std::vector<std::vector<double>> out(cfg.n_disorder);
    parallel_for(cfg.n_disorder, cfg.workers, [&](std::size_t r) {
        const auto real = realize(spec, lat, seed, r);
        if (cfg.mode == Mode::exact) {
            ExactOptions opt;
            opt.volume_cap = cfg.volume_cap;
            opt.table_samples = cfg.table_samples;
            opt.sample_seed = real.aux_seed;
            ExactEnsemble ens(real.exponent, opt);
            out[r] = fn(ens, real);
        } else {
            McmcOptions opt;
            opt.replicas = std::max(1, replicas);
            opt.sweeps = cfg.sweeps;
            opt.burn_in = cfg.burn_in;
            opt.thin = cfg.thin;
            opt.seed = real.aux_seed;
            McmcEnsemble ens(real.exponent, opt);
            out[r] = fn(ens, real);
        }
    });
    return out;
}

inline std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t k)
{
    std::vector<double> c;
    c.reserve(rows.size());
    for (const auto& r : rows) c.push_back(r.at(k));
    return c;
}

using Observable = std::function<double(Ensemble&, const Realization&)>;

/// ν(O) = E⟨O⟩: disorder mean of the inner Gibbs expectation.
inline Estimate nu_estimate(const Observable& obs, const ModelSpec& spec, const Lattice& lat,
                            const EstimatorConfig& cfg, std::uint64_t seed, int replicas = 2)
{
    require(cfg.n_disorder >= 2, Errc::invalid_argument, "nu_estimate needs n_disorder >= 2");
    const auto rows = sweep_realizations(spec, lat, cfg, seed, replicas,
                                         [&](Ensemble& e, const Realization& r) { return std::vector<double>{obs(e, r)}; });
    return estimate_of(column(rows, 0));
}

// ---------------------------------------------------------------------------

struct GgResidualReport {
    int m = 2;
    std::string f_spec;
    std::string psi_spec;
    double residual = 0.0;
    double std_error = 0.0;
    std::size_t n_disorder = 0;
    Mode mode = Mode::exact;
    bool paired = true;
    std::uint64_t seed = 0;
    // disorder means of the terms
    double nu_f_psi_new = 0.0;           // ν(f ψ(R_{1,m+1}))
    double nu_f = 0.0;                   // ν(f)
    double nu_psi = 0.0;                 // ν(ψ(R_{1,2}))
    std::vector<double> nu_f_psi_old;    // ν(f ψ(R_{1,ℓ})), ℓ = 2..m
};

namespace detail {

/// Per-realization values of the GG terms: [A, B, C, D_2..D_m].
inline std::vector<double> gg_terms(Ensemble& ens, const StarFunction& f, const OverlapFunction& psi)
{
    std::vector<double> v;
    auto with_new = f.factors;
    with_new.push_back(psi);
    v.push_back(ens.expect_star(with_new));
    v.push_back(ens.expect_star(f.factors));
    v.push_back(ens.expect_star(std::vector<OverlapFunction>{psi}));
    for (std::size_t l = 0; l < f.factors.size(); ++l) {
        auto fac = f.factors;
        fac[l] = product(fac[l], psi);
        v.push_back(ens.expect_star(fac));
    }
    return v;
}

} // namespace detail

/// ν(f ψ(R_{1,m+1})) - (1/m) ν(f) ν(ψ(R_{1,2})) - (1/m) Σ_{ℓ=2}^m ν(f ψ(R_{1,ℓ})).
/// Paired mode evaluates every term on the same disorder draws; otherwise each
/// term gets its own draws.
inline GgResidualReport gg_residual(int m, const std::string& f_spec, const std::string& psi_spec,
                                    const ModelSpec& spec, const Lattice& lat, const EstimatorConfig& cfg,
                                    std::uint64_t seed)
{
    const auto f = parse_f(f_spec, m);
    const auto psi = parse_psi(psi_spec);
    const double inv_m = 1.0 / m;

    GgResidualReport rep;
    rep.m = m;
    rep.f_spec = f_spec;
    rep.psi_spec = psi_spec;
    rep.n_disorder = cfg.n_disorder;
    rep.mode = cfg.mode;
    rep.paired = cfg.paired;
    rep.seed = seed;

    const std::size_t nterms = 3 + static_cast<std::size_t>(m - 1);
    std::vector<std::vector<double>> cols(nterms);
    if (cfg.paired) {
        const auto rows = sweep_realizations(spec, lat, cfg, seed, m + 1, [&](Ensemble& e, const Realization&) {
            return detail::gg_terms(e, f, psi);
        });
        for (std::size_t k = 0; k < nterms; ++k) cols[k] = column(rows, k);
    } else {
        for (std::size_t k = 0; k < nterms; ++k) {
            const auto rows = sweep_realizations(spec, lat, cfg, mix_seed(seed, {0x99, k}), m + 1,
                                                 [&](Ensemble& e, const Realization&) { return detail::gg_terms(e, f, psi); });
            cols[k] = column(rows, k);
        }
    }

    std::vector<Estimate> est;
    for (const auto& c : cols) est.push_back(estimate_of(c));
    rep.nu_f_psi_new = est[0].value;
    rep.nu_f = est[1].value;
    rep.nu_psi = est[2].value;
    double d_sum = 0.0;
    for (std::size_t k = 3; k < nterms; ++k) {
        rep.nu_f_psi_old.push_back(est[k].value);
        d_sum += est[k].value;
    }
    rep.residual = rep.nu_f_psi_new - inv_m * rep.nu_f * rep.nu_psi - inv_m * d_sum;

    if (cfg.paired) {
        // delta method on the linearized per-realization residual
        std::vector<double> lin(cfg.n_disorder);
        for (std::size_t r = 0; r < cfg.n_disorder; ++r) {
            double d = 0.0;
            for (std::size_t k = 3; k < nterms; ++k) d += cols[k][r];
            lin[r] = cols[0][r] - inv_m * (cols[1][r] * rep.nu_psi + rep.nu_f * cols[2][r]) - inv_m * d;
        }
        rep.std_error = estimate_of(lin).std_error;
    } else {
        double var = est[0].std_error * est[0].std_error;
        var += inv_m * inv_m * (rep.nu_psi * rep.nu_psi * est[1].std_error * est[1].std_error +
                                rep.nu_f * rep.nu_f * est[2].std_error * est[2].std_error);
        for (std::size_t k = 3; k < nterms; ++k) var += inv_m * inv_m * est[k].std_error * est[k].std_error;
        rep.std_error = std::sqrt(var);
    }
    return rep;
}

/// ν(|Δ_{n;p} - ν(Δ_{n;p})|), the centering estimated from the same draws.
inline Estimate delta_concentration(int p, const ModelSpec& spec, const Lattice& lat, const EstimatorConfig& cfg,
                                    std::uint64_t seed)
{
    require(p >= 1, Errc::invalid_argument, "p must be >= 1");
    require(p == 1 || p <= spec.p_max, Errc::invalid_argument, "p exceeds p_max");
    const auto first = sweep_realizations(spec, lat, cfg, seed, 1, [&](Ensemble& e, const Realization& r) {
        return std::vector<double>{e.expect(delta_polynomial(r.g, &r.xi, p))};
    });
    const double center = mean_of(column(first, 0));
    const auto second = sweep_realizations(spec, lat, cfg, seed, 1, [&](Ensemble& e, const Realization& r) {
        return std::vector<double>{e.expect(delta_polynomial(r.g, &r.xi, p), [center](double v) { return std::abs(v - center); })};
    });
    return estimate_of(column(second, 0));
}

/// ν(|(β/|V|) Σ_{⟨xy⟩} (σ_xσ_y - ν(σ_xσ_y))|).
inline Estimate energy_ergodicity(const ModelSpec& spec, const Lattice& lat, const EstimatorConfig& cfg,
                                  std::uint64_t seed)
{
    const auto& edges = lat.edges();
    if (edges.empty() || spec.beta == 0.0) return {0.0, 0.0};
    std::vector<SpinPolynomial> bond_polys;
    for (auto [a, b] : edges) {
        SpinPolynomial p(lat.volume());
        p.add(1.0, {a, b});
        bond_polys.push_back(std::move(p.finalize()));
    }
    const auto first = sweep_realizations(spec, lat, cfg, seed, 1,
                                          [&](Ensemble& e, const Realization&) { return e.expect_many(bond_polys); });
    const double scale = spec.beta / static_cast<double>(lat.volume());
    SpinPolynomial centered(lat.volume());
    for (std::size_t k = 0; k < edges.size(); ++k) {
        centered.add(scale, {edges[k].first, edges[k].second});
        centered.add_constant(-scale * mean_of(column(first, k)));
    }
    centered.finalize();
    const auto second = sweep_realizations(spec, lat, cfg, seed, 1, [&](Ensemble& e, const Realization&) {
        return std::vector<double>{e.expect(centered, [](double v) { return std::abs(v); })};
    });
    return estimate_of(column(second, 0));
}

struct SelfAveragingReport {
    Estimate overlap;       // ν(R_{1,2} - ⟨R_{1,2}⟩)²
    Estimate magnetization; // ν(m(σ) - ⟨m(σ)⟩)²
};

inline SelfAveragingReport self_averaging(const ModelSpec& spec, const Lattice& lat, const EstimatorConfig& cfg,
                                          std::uint64_t seed)
{
    const auto mpoly = magnetization_polynomial(lat.volume());
    const std::vector<OverlapFunction> r1{overlap_identity()};
    const std::vector<OverlapFunction> r2{overlap_power(2)};
    const auto rows = sweep_realizations(spec, lat, cfg, seed, 2, [&](Ensemble& e, const Realization&) {
        const double q = e.expect_star(r1);
        const double mm = e.expect(mpoly);
        return std::vector<double>{std::max(0.0, e.expect_star(r2) - q * q),
                                   std::max(0.0, e.expect(mpoly, [](double v) { return v * v; }) - mm * mm)};
    });
    return {estimate_of(column(rows, 0)), estimate_of(column(rows, 1))};
}

struct UltrametricityReport {
    double epsilon = 0.0;
    double violation_prob = 0.0;
    double std_error = 0.0;
    std::size_t n_disorder = 0;
    std::size_t samples_per_disorder = 0; // 0 when the triple law is enumerated exactly
};

/// R_{2,3} < min(R_{1,2}, R_{1,3}) - ε, decided on hamming distances:
/// 2(d_{23} - max(d_{12}, d_{13})) > εN. Ties within 1e-9 of εN do not count.
inline bool ultrametric_violated(std::span<const SpinConfiguration> rs, double eps)
{
    const auto d12 = static_cast<double>(disagreements(rs[0], rs[1]));
    const auto d13 = static_cast<double>(disagreements(rs[0], rs[2]));
    const auto d23 = static_cast<double>(disagreements(rs[1], rs[2]));
    return 2.0 * (d23 - std::max(d12, d13)) > eps * static_cast<double>(rs[0].size()) + 1e-9;
}

/// ν(1{R_{2,3} < min(R_{1,2}, R_{1,3}) - ε}) over three replicas.
inline UltrametricityReport ultrametricity_violation(double eps, const ModelSpec& spec, const Lattice& lat,
                                                     const EstimatorConfig& cfg, std::uint64_t seed)
{
    require(eps > 0.0, Errc::invalid_argument, "epsilon must be > 0");
    const ReplicaFunction violated = [eps](std::span<const SpinConfiguration> rs) {
        return ultrametric_violated(rs, eps) ? 1.0 : 0.0;
    };
    const auto rows = sweep_realizations(spec, lat, cfg, seed, 3, [&](Ensemble& e, const Realization&) {
        return std::vector<double>{e.expect_replicas(violated, 3)};
    });
    const auto est = estimate_of(column(rows, 0));
    UltrametricityReport rep;
    rep.epsilon = eps;
    rep.violation_prob = std::clamp(est.value, 0.0, 1.0);
    rep.std_error = est.std_error;
    rep.n_disorder = cfg.n_disorder;
    if (cfg.mode == Mode::exact) rep.samples_per_disorder = 3 * lat.volume() <= 20 ? 0 : cfg.table_samples;
    else rep.samples_per_disorder = cfg.sweeps / cfg.thin;
    return rep;
}

} // namespace rfim
