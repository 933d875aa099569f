#pragma once

#include "rfim/error.hpp"
#include "rfim/lattice.hpp"
#include "rfim/philox.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace rfim {

/// A zero-mean, unit-variance scalar law for g_x and xi. `match_order` is the
/// number k of leading moments shared with the standard Gaussian; it is checked
/// against exact moments at construction.
class DisorderFamily {
public:
    enum class Kind { rademacher, uniform, gaussian, two_point, zero };

    static constexpr int kMatchCap = 6;
    static constexpr double kTwoPointMass = 0.25;

    explicit DisorderFamily(Kind kind) : kind_(kind)
    {
        switch (kind) {
        case Kind::rademacher: name_ = "rademacher"; atoms_ = {{-1.0, 0.5}, {1.0, 0.5}}; break;
        case Kind::uniform: name_ = "uniform"; break;
        case Kind::gaussian: name_ = "gaussian"; break;
        case Kind::two_point: {
            name_ = "two_point";
            const double p = kTwoPointMass;
            atoms_ = {{-std::sqrt(p / (1.0 - p)), 1.0 - p}, {std::sqrt((1.0 - p) / p), p}};
            break;
        }
        case Kind::zero: name_ = "zero"; atoms_ = {{0.0, 1.0}}; break;
        }

        require(std::abs(raw_moment(1)) <= 1e-12, Errc::invalid_argument, name_ + ": mean is not zero");
        if (kind != Kind::zero) {
            require(std::abs(raw_moment(2) - 1.0) <= 1e-12, Errc::invalid_argument, name_ + ": variance is not one");
            match_order_ = 0;
            while (match_order_ < kMatchCap &&
                   std::abs(raw_moment(match_order_ + 1) - gaussian_moment(match_order_ + 1)) <= 1e-10)
                ++match_order_;
        }
    }

    static DisorderFamily rademacher() { return DisorderFamily(Kind::rademacher); }
    static DisorderFamily uniform() { return DisorderFamily(Kind::uniform); }
    static DisorderFamily gaussian() { return DisorderFamily(Kind::gaussian); }
    static DisorderFamily two_point() { return DisorderFamily(Kind::two_point); }
    /// Degenerate control law g ≡ 0; the unit-variance check is skipped.
    static DisorderFamily zero() { return DisorderFamily(Kind::zero); }

    static DisorderFamily by_name(const std::string& name)
    {
        if (name == "rademacher") return rademacher();
        if (name == "uniform") return uniform();
        if (name == "gaussian") return gaussian();
        if (name == "two_point") return two_point();
        if (name == "zero") return zero();
        fail(Errc::invalid_argument, "unknown disorder family '" + name + "'");
    }

    Kind kind() const noexcept { return kind_; }
    const std::string& name() const noexcept { return name_; }
    int match_order() const noexcept { return match_order_; }
    bool is_discrete() const noexcept { return !atoms_.empty(); }
    bool is_degenerate() const noexcept { return kind_ == Kind::zero; }

    /// E g^j for the standard Gaussian: (j-1)!! for even j, 0 for odd.
    static double gaussian_moment(int j) noexcept
    {
        if (j % 2 != 0) return 0.0;
        double m = 1.0;
        for (int i = j - 1; i > 1; i -= 2) m *= i;
        return m;
    }

    double raw_moment(int j) const
    {
        require(j >= 0, Errc::invalid_argument, "moment order must be >= 0");
        if (j == 0) return 1.0;
        switch (kind_) {
        case Kind::uniform: return j % 2 ? 0.0 : std::pow(3.0, j / 2.0) / (j + 1);
        case Kind::gaussian: return gaussian_moment(j);
        default: {
            double s = 0.0;
            for (auto [v, p] : atoms_) s += p * std::pow(v, j);
            return s;
        }
        }
    }

    double abs_moment(int j) const { return truncated_abs_moment(j, 0.0); }

    /// E(|g|^j : |g| >= K). Closed form for every shipped family.
    double truncated_abs_moment(int j, double K) const
    {
        require(j >= 1 && j <= 6, Errc::invalid_argument, "truncated moment order must be in 1..6");
        require(K >= 0.0, Errc::invalid_argument, "truncation level must be >= 0");
        switch (kind_) {
        case Kind::uniform: {
            const double top = std::sqrt(3.0);
            if (K >= top) return 0.0;
            return (std::pow(top, j + 1) - std::pow(K, j + 1)) / ((j + 1) * top);
        }
        case Kind::gaussian:
            // 2 ∫_K^∞ t^j φ(t) dt = 2^{j/2} Γ((j+1)/2, K²/2) / √π
            return std::pow(2.0, j / 2.0) * boost::math::tgamma((j + 1) / 2.0, K * K / 2.0) /
                   std::sqrt(std::numbers::pi);
        default: {
            double s = 0.0;
            for (auto [v, p] : atoms_)
                if (std::abs(v) >= K) s += p * std::pow(std::abs(v), j);
            return s;
        }
        }
    }

    /// E fn(g): finite sum for discrete laws, adaptive Gauss-Kronrod otherwise.
    template <class Fn>
    double expect(Fn&& fn) const
    {
        using boost::math::quadrature::gauss_kronrod;
        switch (kind_) {
        case Kind::uniform: {
            const double top = std::sqrt(3.0);
            auto integrand = [&](double t) { return fn(t); };
            return gauss_kronrod<double, 61>::integrate(integrand, -top, top, 15, 1e-14) / (2.0 * top);
        }
        case Kind::gaussian: {
            const double inv = 1.0 / std::sqrt(2.0 * std::numbers::pi);
            auto integrand = [&](double t) { return fn(t) * inv * std::exp(-0.5 * t * t); };
            return gauss_kronrod<double, 61>::integrate(integrand, -kGaussianCut, 0.0, 15, 1e-14) +
                   gauss_kronrod<double, 61>::integrate(integrand, 0.0, kGaussianCut, 15, 1e-14);
        }
        default: {
            double s = 0.0;
            for (auto [v, p] : atoms_) s += p * fn(v);
            return s;
        }
        }
    }

    /// Deterministic draw number `index` of the stream `key`.
    double sample(std::uint64_t key, std::uint64_t index, std::uint32_t tag = 0) const noexcept
    {
        switch (kind_) {
        case Kind::gaussian: return philox_normal(key, index, tag);
        case Kind::zero: return 0.0;
        case Kind::uniform: return std::sqrt(3.0) * (2.0 * to_unit(philox_words(key, index, tag)[0]) - 1.0);
        case Kind::rademacher: return (philox_words(key, index, tag)[0] >> 63) ? 1.0 : -1.0;
        case Kind::two_point:
            return to_unit(philox_words(key, index, tag)[0]) < kTwoPointMass ? atoms_[1].first : atoms_[0].first;
        }
        return 0.0;
    }

    const std::vector<std::pair<double, double>>& atoms() const noexcept { return atoms_; }

private:
    static constexpr double kGaussianCut = 14.0;

    Kind kind_;
    std::string name_;
    int match_order_ = 0;
    std::vector<std::pair<double, double>> atoms_; // (value, probability)
};

/// The realization g = (g_x) for one lattice; reproducible from (seed, family).
struct FieldRealization {
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::string family;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

inline FieldRealization sample_field(const Lattice& lat, const DisorderFamily& fam, std::uint64_t seed)
{
    FieldRealization g{std::vector<double>(lat.volume()), seed, fam.name()};
    for (std::size_t x = 0; x < lat.volume(); ++x) g.values[x] = fam.sample(seed, x, 0);
    return g;
}

/// n ↦ h(n) through the gap μ - h as a function of |V_n|.
class FieldSchedule {
public:
    FieldSchedule(double mu, std::function<double(double)> gap, std::string label)
        : mu_(mu), gap_(std::move(gap)), label_(std::move(label))
    {
        require(mu > 0.0, Errc::invalid_argument, "mu must be > 0");
    }

    /// h = μ - |V_n|^{-exponent}; the default rule uses exponent γ ∈ (0, 1/2).
    static FieldSchedule power(double mu, double exponent)
    {
        require(exponent > 0.0, Errc::invalid_argument, "schedule exponent must be > 0");
        return FieldSchedule(mu, [exponent](double vol) { return std::pow(vol, -exponent); },
                             "mu - |V|^-" + std::to_string(exponent));
    }

    double mu() const noexcept { return mu_; }
    double gap(double volume) const { return gap_(volume); }
    double h(double volume) const { return mu_ - gap_(volume); }
    const std::string& label() const noexcept { return label_; }

private:
    double mu_;
    std::function<double(double)> gap_;
    std::string label_;
};

struct ConditionRow {
    int n = 0;
    std::size_t volume = 0;
    double h = 0.0;
    double gap_sqrt_volume = 0.0;
    double third_moment_avg = 0.0;
};

struct ConditionReport {
    std::vector<ConditionRow> rows;
    bool pass = false;
    int failed_clause = 0; // 1..3, 0 when passing
    std::string message;
    double epsilon = 0.0;
    double threshold = 0.0;
};

/// Finite-n check of the decay condition: h → μ, (μ-h)√|V| → ∞, and the
/// site-averaged E(|g|^3 : |g| >= ε/(μ-h)) → 0.
inline ConditionReport check_perturbation_condition(const FieldSchedule& sched, const DisorderFamily& fam, int d,
                                                    const std::vector<int>& n_list, double eps,
                                                    double threshold = 1e-3)
{
    require(n_list.size() >= 3, Errc::invalid_argument, "n_list needs at least 3 entries");
    require(std::is_sorted(n_list.begin(), n_list.end()) &&
                std::adjacent_find(n_list.begin(), n_list.end()) == n_list.end(),
            Errc::invalid_argument, "n_list must be strictly increasing");
    require(eps > 0.0, Errc::invalid_argument, "epsilon must be > 0");
    require(d >= 1, Errc::invalid_argument, "dimension must be >= 1");

    ConditionReport rep;
    rep.epsilon = eps;
    rep.threshold = threshold;
    for (int n : n_list) {
        require(n >= 1, Errc::invalid_argument, "n must be >= 1");
        ConditionRow row;
        row.n = n;
        row.volume = static_cast<std::size_t>(std::llround(std::pow(n, d)));
        const double vol = static_cast<double>(row.volume);
        const double gap = sched.gap(vol);
        row.h = sched.mu() - gap;
        row.gap_sqrt_volume = gap * std::sqrt(vol);
        // i.i.d. sites: the site average equals the single-site truncated moment
        row.third_moment_avg = gap > 0.0 ? fam.truncated_abs_moment(3, eps / gap) : fam.abs_moment(3);
        rep.rows.push_back(row);
    }

    auto fail_at = [&](int clause, std::string msg) {
        rep.pass = false;
        rep.failed_clause = clause;
        rep.message = std::move(msg);
        return rep;
    };
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        const auto& r = rep.rows[i];
        if (!(sched.mu() - r.h > 0.0)) return fail_at(1, "mu - h <= 0 at n=" + std::to_string(r.n));
        if (i > 0 && r.h < rep.rows[i - 1].h) return fail_at(1, "h(n) not monotone at n=" + std::to_string(r.n));
    }
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (!(rep.rows[i].gap_sqrt_volume > rep.rows[i - 1].gap_sqrt_volume))
            return fail_at(2, "(mu-h)sqrt|V| not increasing at n=" + std::to_string(rep.rows[i].n));
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].third_moment_avg > rep.rows[i - 1].third_moment_avg)
            return fail_at(3, "truncated third moment increases at n=" + std::to_string(rep.rows[i].n));
    if (rep.rows.back().third_moment_avg > threshold)
        return fail_at(3, "truncated third moment above threshold at max n");
    rep.pass = true;
    return rep;
}

} // namespace rfim
