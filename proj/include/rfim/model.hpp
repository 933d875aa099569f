#pragma once

#include "rfim/disorder.hpp"
#include "rfim/hamiltonian.hpp"
#include "rfim/lattice.hpp"
#include "rfim/philox.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace rfim {

/// Model block shared by estimators: everything needed to draw one disorder
/// realization at a given side length.
struct ModelSpec {
    int d = 1;
    double beta = 0.5;
    double mu = 1.0;
    double gamma = 0.25;           // μ - h = |V|^{-γ}
    std::string family = "rademacher";
    std::string xi_family;         // empty: same as family
    std::vector<double> alpha;     // α_p for p = 2..p_max
    double c_exponent = 0.25;      // c_n = |V|^{-c_exponent}
    int p_max = 3;

    FieldSchedule schedule() const { return FieldSchedule::power(mu, gamma); }

    ModelParams params_for(std::size_t volume) const
    {
        const auto vol = static_cast<double>(volume);
        ModelParams p;
        p.beta = beta;
        p.mu = mu;
        p.h = schedule().h(vol);
        p.alpha = alpha;
        p.c_n = std::pow(vol, -c_exponent);
        p.p_max = p_max;
        p.validate();
        return p;
    }

    DisorderFamily field_family() const { return DisorderFamily::by_name(family); }
    DisorderFamily coupling_family() const { return DisorderFamily::by_name(xi_family.empty() ? family : xi_family); }
};

struct Realization {
    FieldRealization g;
    PSpinDisorder xi;
    ModelParams params;
    SpinPolynomial exponent;
    std::uint64_t aux_seed = 0; // sampling stream for this realization
};

/// Realization r at side n draws from streams keyed by (seed, n, r), so
/// growing the grid or the disorder count never perturbs existing cells.
inline Realization realize(const ModelSpec& spec, const Lattice& lat, std::uint64_t seed, std::uint64_t r,
                           PSpinOptions opt = {})
{
    const auto n = static_cast<std::uint64_t>(lat.side());
    const auto field_fam = spec.field_family();
    Realization out{sample_field(lat, field_fam, mix_seed(seed, {n, r, 0})),
                    PSpinDisorder(mix_seed(seed, {n, r, 1}), spec.p_max, spec.coupling_family()),
                    spec.params_for(lat.volume()), SpinPolynomial(lat.volume()), mix_seed(seed, {n, r, 2})};
    out.exponent = exponent_polynomial(lat, out.g, &out.xi, out.params, opt);
    return out;
}

} // namespace rfim
