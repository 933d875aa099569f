#include "oracles.hpp"
#include "rfim/gibbs.hpp"
#include "rfim/identities.hpp"
#include "rfim/overlaps.hpp"

#include <gtest/gtest.h>

using namespace rfim;

namespace {

ModelParams params(double beta, double gap)
{
    ModelParams p;
    p.beta = beta;
    p.mu = 1.0;
    p.h = 1.0 - gap;
    return p;
}

SpinPolynomial site_poly(std::size_t n, std::initializer_list<SiteIndex> sites)
{
    SpinPolynomial p(n);
    p.add(1.0, sites);
    return std::move(p.finalize());
}

SpinPolynomial random_poly(PhiloxEngine& rng, std::size_t n, int terms, int max_order)
{
    SpinPolynomial p(n);
    for (int t = 0; t < terms; ++t) {
        std::vector<SiteIndex> idx(1 + rng() % static_cast<unsigned>(max_order));
        for (auto& x : idx) x = static_cast<SiteIndex>(rng() % n);
        p.add(2.0 * rng.uniform() - 1.0, idx);
    }
    p.add_constant(0.3);
    return std::move(p.finalize());
}

} // namespace

TEST(Enumeration, SingleSiteClosedForms)
{
    const Lattice lat(1, 1);
    const PSpinDisorder xi(1, 3, DisorderFamily::gaussian());
    const FieldRealization zero{{0.0}, 0, "zero"};
    const ExactEnsemble e0(exponent_polynomial(lat, zero, &xi, params(0.4, 0.5)));
    EXPECT_NEAR(e0.log_partition(), std::log(2.0), 1e-15);
    EXPECT_NEAR(e0.probability(0), 0.5, 1e-15);
    EXPECT_NEAR(e0.probability(1), 0.5, 1e-15);

    const FieldRealization g{{1.3}, 0, "fixed"};
    ExactEnsemble e1(exponent_polynomial(lat, g, &xi, params(0.4, 0.5)));
    const double b = 0.5 * 1.3;
    EXPECT_NEAR(e1.log_partition(), std::log(2.0 * std::cosh(b)), 1e-14);
    EXPECT_NEAR(e1.expect(site_poly(1, {0})), std::tanh(b), 1e-14);
}

TEST(Enumeration, TwoSiteBond)
{
    const Lattice lat(1, 2);
    const FieldRealization zero{{0.0, 0.0}, 0, "zero"};
    const PSpinDisorder xi(1, 3, DisorderFamily::gaussian());
    ExactEnsemble e(exponent_polynomial(lat, zero, &xi, params(0.7, 0.5)));
    EXPECT_NEAR(e.expect(site_poly(2, {0, 1})), 0.60437, 5e-6);
    EXPECT_NEAR(e.expect(site_poly(2, {0, 1})), std::tanh(0.7), 1e-14);
}

TEST(Enumeration, MatchesBruteForceOracle)
{
    struct Case { int d, n; bool perturbed; };
    for (auto c : {Case{1, 5, false}, Case{1, 5, true}, Case{2, 2, true}, Case{2, 3, false}, Case{1, 7, true}}) {
        const Lattice lat(c.d, c.n);
        const auto g = sample_field(lat, DisorderFamily::gaussian(), 44);
        const PSpinDisorder xi(45, 3, DisorderFamily::gaussian());
        auto prm = params(0.8, 0.6);
        if (c.perturbed) {
            prm.c_n = 0.9;
            prm.alpha = {1.0, -1.0};
        }
        const auto n = lat.volume();
        const auto want = oracle::brute_probabilities(
            [&](const std::vector<int>& s) { return oracle::naive_exponent(s, c.d, c.n, g.values, &xi, prm); }, n);
        for (auto how : {Enumeration::gray, Enumeration::walsh, Enumeration::automatic}) {
            ExactOptions opt;
            opt.strategy = how;
            const ExactEnsemble e(exponent_polynomial(lat, g, &xi, prm), opt);
            double total = 0.0;
            for (std::size_t b = 0; b < want.size(); ++b) {
                EXPECT_NEAR(e.probability(b), want[b], 1e-12);
                EXPECT_GT(e.probability(b), 0.0);
                total += e.probability(b);
            }
            EXPECT_NEAR(total, 1.0, 1e-12);
        }
    }
}

TEST(Enumeration, GrayAndWalshAgreeWithDirectEvaluation)
{
    PhiloxEngine rng(12);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 1 + rng() % 12;
        const auto poly = random_poly(rng, n, 1 + static_cast<int>(rng() % 40), 4);
        const auto gray = enumerate_polynomial(poly, Enumeration::gray);
        const auto walsh = enumerate_polynomial(poly, Enumeration::walsh);
        for (std::uint64_t b = 0; b < gray.size(); ++b) {
            const double direct = poly.evaluate(SpinConfiguration::from_bits(b, n));
            EXPECT_NEAR(gray[b], direct, 1e-12);
            EXPECT_NEAR(walsh[b], direct, 1e-12);
        }
    }
}

TEST(Enumeration, LogSumExpDoesNotOverflow)
{
    const std::size_t n = 10;
    SpinPolynomial p(n);
    for (SiteIndex x = 0; x < n; ++x) p.add(700.0, {x});
    const ExactEnsemble e(p.finalize());
    EXPECT_NEAR(e.log_partition(), 7000.0, 1e-9);
    EXPECT_TRUE(std::isfinite(e.log_partition()));
    EXPECT_NEAR(e.probability((1u << n) - 1), 1.0, 1e-12);
}

TEST(Enumeration, CapExceeded)
{
    ExactOptions opt;
    opt.volume_cap = 8;
    try {
        ExactEnsemble e(SpinPolynomial(9).finalize(), opt);
        FAIL() << "expected cap error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::cap_exceeded);
    }
}

TEST(Enumeration, SiteRelabelingPermutesTable)
{
    const Lattice lat(2, 2);
    const auto g = sample_field(lat, DisorderFamily::uniform(), 3);
    const PSpinDisorder xi(4, 3, DisorderFamily::gaussian());
    const auto poly = exponent_polynomial(lat, g, &xi, params(0.9, 0.5));
    const std::vector<SiteIndex> perm{2, 0, 3, 1};
    SpinPolynomial relabeled(4);
    for (const auto& t : poly.terms()) {
        std::vector<SiteIndex> s;
        for (auto x : t.sites) s.push_back(perm[x]);
        relabeled.add(t.coef, s);
    }
    relabeled.add_constant(poly.constant());
    const ExactEnsemble a(poly), b(relabeled.finalize());
    for (std::uint64_t bits = 0; bits < 16; ++bits) {
        std::uint64_t mapped = 0;
        for (SiteIndex x = 0; x < 4; ++x)
            if (bits >> x & 1) mapped |= std::uint64_t{1} << perm[x];
        EXPECT_NEAR(a.probability(bits), b.probability(mapped), 1e-15);
    }
}

TEST(Enumeration, FlipSymmetryWithoutField)
{
    const Lattice lat(1, 6);
    const FieldRealization zero{std::vector<double>(6, 0.0), 0, "zero"};
    ExactEnsemble e(exponent_polynomial(lat, zero, nullptr, params(1.1, 0.5)));
    for (SiteIndex x = 0; x < 6; ++x) EXPECT_LE(std::abs(e.expect(site_poly(6, {x}))), 1e-15);
}

TEST(Enumeration, FreeEnergyMonotoneInBeta)
{
    for (int n = 2; n <= 10; n += 2) {
        const Lattice lat(1, n);
        const FieldRealization zero{std::vector<double>(lat.volume(), 0.0), 0, "zero"};
        double prev = -1e300;
        for (double beta = 0.0; beta <= 2.0; beta += 0.25) {
            const double f = ExactEnsemble(exponent_polynomial(lat, zero, nullptr, params(beta, 0.5))).log_partition();
            EXPECT_GE(f, prev);
            prev = f;
        }
    }
}

TEST(Replicas, StarExpectationMatchesBruteForce)
{
    const Lattice lat(1, 5);
    const auto g = sample_field(lat, DisorderFamily::gaussian(), 8);
    const PSpinDisorder xi(9, 3, DisorderFamily::gaussian());
    auto prm = params(0.7, 0.8);
    prm.c_n = 0.5;
    prm.alpha = {1.0, 1.0};
    ExactEnsemble e(exponent_polynomial(lat, g, &xi, prm));
    const std::vector<OverlapFunction> lib{overlap_identity(), overlap_power(2), overlap_power(3),
                                           overlap_threshold(0.2), overlap_one()};
    for (std::size_t a = 0; a < lib.size(); ++a)
        for (std::size_t b = 0; b < lib.size(); ++b) {
            const std::vector<OverlapFunction> two{lib[a], lib[b]};
            const double want = oracle::brute_replica_expectation(
                e.probabilities(), 5, 3, [&](const std::vector<std::vector<int>>& rs) {
                    return lib[a](oracle::naive_overlap(rs[0], rs[1])) * lib[b](oracle::naive_overlap(rs[0], rs[2]));
                });
            EXPECT_NEAR(e.expect_star(two), want, 1e-12);
        }
    const std::vector<OverlapFunction> three{overlap_identity(), overlap_power(2), overlap_identity()};
    const double want3 = oracle::brute_replica_expectation(
        e.probabilities(), 5, 4, [&](const std::vector<std::vector<int>>& rs) {
            const double r12 = oracle::naive_overlap(rs[0], rs[1]);
            const double r13 = oracle::naive_overlap(rs[0], rs[2]);
            const double r14 = oracle::naive_overlap(rs[0], rs[3]);
            return r12 * r13 * r13 * r14;
        });
    EXPECT_NEAR(e.expect_star(three), want3, 1e-12);
}

TEST(Replicas, GeneralObservables)
{
    const Lattice lat(1, 4);
    const auto g = sample_field(lat, DisorderFamily::rademacher(), 2);
    ExactEnsemble e(exponent_polynomial(lat, g, nullptr, params(0.5, 0.7)));
    const ReplicaFunction one = [](std::span<const SpinConfiguration>) { return 1.0; };
    EXPECT_NEAR(e.expect_replicas(one, 3), 1.0, 1e-13);
    for (SiteIndex x = 0; x < 4; ++x) {
        const double m = e.expect(site_poly(4, {x}));
        const ReplicaFunction prod = [x](std::span<const SpinConfiguration> rs) {
            return static_cast<double>(rs[0][x] * rs[1][x]);
        };
        EXPECT_NEAR(e.expect_replicas(prod, 2), m * m, 1e-13);
    }
    const ReplicaFunction tri = [](std::span<const SpinConfiguration> rs) {
        return overlap(rs[1], rs[2]) * overlap(rs[0], rs[1]);
    };
    const double want = oracle::brute_replica_expectation(e.probabilities(), 4, 3, [](const auto& rs) {
        return oracle::naive_overlap(rs[1], rs[2]) * oracle::naive_overlap(rs[0], rs[1]);
    });
    EXPECT_NEAR(e.expect_replicas(tri, 3), want, 1e-13);
}

TEST(Replicas, TableSamplingFallback)
{
    const Lattice lat(1, 8);
    const auto g = sample_field(lat, DisorderFamily::rademacher(), 2);
    ExactOptions opt;
    opt.joint_bits_cap = 8; // force sampling for m = 3
    opt.table_samples = 40000;
    opt.sample_seed = 5;
    ExactEnsemble e(exponent_polynomial(lat, g, nullptr, params(0.5, 0.7)), opt);
    ASSERT_FALSE(e.joint_exact(3));
    const ReplicaFunction r23 = [](std::span<const SpinConfiguration> rs) { return overlap(rs[1], rs[2]); };
    const std::vector<OverlapFunction> id{overlap_identity()};
    // sd of R is at most 1
    EXPECT_NEAR(e.expect_replicas(r23, 3), e.expect_star(id), 4.0 / std::sqrt(40000.0));
}

TEST(Replicas, IndependentSpinOverlapClosedForm)
{
    const Lattice lat(1, 6);
    const auto g = sample_field(lat, DisorderFamily::gaussian(), 10);
    const double gap = 0.6;
    ExactEnsemble e(exponent_polynomial(lat, g, nullptr, params(0.0, gap)));
    double want = 0.0;
    for (double v : g.values) want += std::pow(std::tanh(gap * v), 2);
    want /= 6.0;
    const std::vector<OverlapFunction> id{overlap_identity()};
    EXPECT_NEAR(e.expect_star(id), want, 1e-13);
}

TEST(HeatBath, DetailedBalance)
{
    const Lattice lat(1, 8);
    const auto g = sample_field(lat, DisorderFamily::rademacher(), 7);
    const PSpinDisorder xi(3, 3, DisorderFamily::gaussian());
    auto prm = params(0.5, 0.7);
    prm.c_n = 0.6;
    prm.alpha = {1.0, 1.0};
    const auto poly = exponent_polynomial(lat, g, &xi, prm);
    const ExactEnsemble e(poly);
    PhiloxEngine rng(1);
    for (int t = 0; t < 2000; ++t) {
        const std::uint64_t b = rng() % 256;
        const auto x = static_cast<SiteIndex>(rng() % 8);
        const auto s = SpinConfiguration::from_bits(b, 8);
        auto s2 = s;
        s2.flip(x);
        const double fwd = e.probability(b) * heat_bath_transition(poly, s, x, s2[x]);
        const double bwd = e.probability(s2.low_bits()) * heat_bath_transition(poly, s2, x, s[x]);
        EXPECT_NEAR(fwd, bwd, 1e-12);
    }
}

TEST(HeatBath, FairCoinsAtInfiniteTemperature)
{
    const Lattice lat(1, 6);
    const FieldRealization zero{std::vector<double>(6, 0.0), 0, "zero"};
    McmcOptions opt;
    opt.replicas = 1;
    opt.sweeps = 20000;
    opt.burn_in = 10;
    opt.thin = 1;
    opt.seed = 4;
    const auto samples = mcmc_replicas(exponent_polynomial(lat, zero, nullptr, params(0.0, 0.5)), opt);
    // every update is an independent fair coin, so the exact standard error is 1/sqrt(n)
    const double n = static_cast<double>(samples.size());
    const double se = 1.0 / std::sqrt(n);
    for (std::size_t x = 0; x < 6; ++x) {
        const auto est = mcmc_estimate(samples, [x](const ReplicaSet& rs) { return static_cast<double>(rs[0][x]); });
        EXPECT_LE(std::abs(est.value), 4.0 * se) << "site " << x;
        EXPECT_NEAR(est.std_error, se, 0.3 * se) << "site " << x;
        double lag1 = 0.0;
        for (std::size_t t = 1; t < samples.size(); ++t) lag1 += samples[t][0][x] * samples[t - 1][0][x];
        EXPECT_LE(std::abs(lag1 / (n - 1.0)), 4.0 / std::sqrt(n - 1.0)) << "site " << x;
    }
}

TEST(HeatBath, OverlapAgreesWithExact)
{
    const Lattice lat(1, 8);
    const auto g = sample_field(lat, DisorderFamily::rademacher(), 7);
    const auto poly = exponent_polynomial(lat, g, nullptr, params(0.5, std::pow(8.0, -0.25)));
    ExactEnsemble e(poly);
    McmcOptions opt;
    opt.sweeps = 40000;
    opt.thin = 2;
    opt.seed = 11;
    const auto samples = mcmc_replicas(poly, opt);
    const auto est = mcmc_estimate(samples, [](const ReplicaSet& rs) { return overlap(rs[0], rs[1]); });
    const std::vector<OverlapFunction> id{overlap_identity()};
    EXPECT_LE(std::abs(est.value - e.expect_star(id)), 3.0 * est.std_error);
}

TEST(HeatBath, ChainsAreReproducible)
{
    const auto poly = exponent_polynomial(Lattice(1, 5), FieldRealization{std::vector<double>(5, 0.3), 0, "c"}, nullptr,
                                          params(0.5, 0.5));
    McmcOptions opt;
    opt.sweeps = 100;
    opt.thin = 10;
    opt.seed = 3;
    EXPECT_EQ(mcmc_replicas(poly, opt), mcmc_replicas(poly, opt));
    opt.replicas = 0;
    EXPECT_THROW(mcmc_replicas(poly, opt), Error);
}

TEST(FreeEnergy, DegenerateCases)
{
    ModelSpec spec;
    spec.family = "zero";
    EXPECT_NEAR(free_energy_stats(Lattice(1, 6), spec, 20, 1).var_f, 0.0, 1e-24);
    spec.family = "rademacher";
    spec.beta = 0.0;
    const auto st = free_energy_stats(Lattice(1, 1), spec, 50, 1);
    EXPECT_NEAR(st.var_f, 0.0, 1e-24);
    EXPECT_NEAR(st.mean_f, std::log(2.0 * std::cosh(1.0)), 1e-14);
}

TEST(FreeEnergy, VarianceGrowthBound)
{
    ModelSpec spec;
    const Lattice lat(1, 10);
    const auto st = free_energy_stats(lat, spec, 200, 7);
    EXPECT_LE(st.var_f, 2.0 * std::pow(10.0, 1.5));
    EXPECT_EQ(st.f_samples.size(), 200u);
    EXPECT_EQ(free_energy_stats(lat, spec, 200, 7, 4).f_samples, st.f_samples);
}
