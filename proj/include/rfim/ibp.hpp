#pragma once

#include "rfim/disorder.hpp"
#include "rfim/error.hpp"
#include "rfim/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace rfim {

/// Smooth test function with exact derivatives and their global sup-norms
/// (infinity where unbounded).
struct TestFunction1D {
    std::string name;
    std::function<double(int, double)> derivative; // derivative(j, y) = f^{(j)}(y)
    std::function<double(int)> sup_norm;           // ‖f^{(j)}‖_∞

    double operator()(double y) const { return derivative(0, y); }

    /// f(y) = sin(a y): f^{(j)} = a^j sin(a y + jπ/2), ‖f^{(j)}‖ = a^j.
    static TestFunction1D sine(double a)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "sin(%gy)", a);
        return {buf,
                [a](int j, double y) { return std::pow(a, j) * std::sin(a * y + j * std::numbers::pi / 2.0); },
                [a](int j) { return std::pow(a, j); }};
    }

    /// f(y) = y^p.
    static TestFunction1D monomial(int p)
    {
        return {"y^" + std::to_string(p),
                [p](int j, double y) {
                    if (j > p) return 0.0;
                    double c = 1.0;
                    for (int i = 0; i < j; ++i) c *= p - i;
                    return c * std::pow(y, p - j);
                },
                [p](int j) {
                    if (j > p) return 0.0;
                    if (j == p) {
                        double c = 1.0;
                        for (int i = 1; i <= p; ++i) c *= i;
                        return c;
                    }
                    return std::numeric_limits<double>::infinity();
                }};
    }
};

namespace detail {

/// 0·∞ = 0: a factor whose derivative vanishes identically kills the product.
inline double sup_product(double a, double b) noexcept
{
    if (a == 0.0 || b == 0.0) return 0.0;
    return a * b;
}

inline double factorial(int k) noexcept
{
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

} // namespace detail

/// f(x, y) = u(x) v(y); mixed partials and their sup-norms factor.
struct TestFunction2D {
    std::string name;
    TestFunction1D u;
    TestFunction1D v;

    static TestFunction2D product(TestFunction1D u, TestFunction1D v)
    {
        std::string un = u.name;
        for (char& c : un)
            if (c == 'y') c = 'x';
        return {un + "*" + v.name, std::move(u), std::move(v)};
    }

    double operator()(double x, double y) const { return u.derivative(0, x) * v.derivative(0, y); }
    double partial(int i, int j, double x, double y) const { return u.derivative(i, x) * v.derivative(j, y); }
    double sup_norm(int i, int j) const { return detail::sup_product(u.sup_norm(i), v.sup_norm(j)); }
};

struct IbpBoundReport {
    std::string family_x;       // empty for univariate
    std::string family_y;
    std::string function;
    int k = 0;
    double K1 = 0.0;            // K for the univariate case
    double K2 = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
    std::optional<std::string> error; // precondition failure; lhs/rhs unset

    bool bivariate() const noexcept { return !family_x.empty(); }
};

inline constexpr double kIbpQuadratureSlack = 1e-9;

/// |E y f(y) - E f'(y)| against
/// 2(‖f^{(k-1)}‖+‖f^{(k)}‖)/(k-1)! · E(|y|^k : |y| >= K) + (k+1)K/k! · ‖f^{(k)}‖ · E|y|^k.
inline IbpBoundReport univariate_gap(const DisorderFamily& fam, const TestFunction1D& f, int k, double K)
{
    IbpBoundReport rep;
    rep.family_y = fam.name();
    rep.function = f.name;
    rep.k = k;
    rep.K1 = K;
    require(k >= 2, Errc::precondition, "k must be >= 2");
    require(K >= 1.0, Errc::precondition, "K must be >= 1");
    if (fam.match_order() < k)
        fail(Errc::precondition, fam.name() + " matches only " + std::to_string(fam.match_order()) +
                                     " Gaussian moments, k = " + std::to_string(k));

    rep.lhs = std::abs(fam.expect([&](double y) { return y * f.derivative(0, y) - f.derivative(1, y); }));

    const double s_km1 = f.sup_norm(k - 1);
    const double s_k = f.sup_norm(k);
    const double tail = fam.truncated_abs_moment(k, K);
    rep.rhs = detail::sup_product(2.0 * (s_km1 + s_k) / detail::factorial(k - 1), tail) +
              detail::sup_product((k + 1) * K / detail::factorial(k) * s_k, fam.abs_moment(k));
    rep.holds = rep.lhs <= rep.rhs + (fam.is_discrete() ? 0.0 : kIbpQuadratureSlack);
    return rep;
}

/// |E xy f(x,y) - E ∂²f/∂x∂y| for independent x, y against the five-term
/// bivariate bound.
inline IbpBoundReport bivariate_gap(const DisorderFamily& fx, const DisorderFamily& fy, const TestFunction2D& f, int k,
                                    double K1, double K2)
{
    IbpBoundReport rep;
    rep.family_x = fx.name();
    rep.family_y = fy.name();
    rep.function = f.name;
    rep.k = k;
    rep.K1 = K1;
    rep.K2 = K2;
    require(k >= 2, Errc::precondition, "k must be >= 2");
    require(K1 >= 1.0 && K2 >= 1.0, Errc::precondition, "K1, K2 must be >= 1");
    for (const auto* fam : {&fx, &fy})
        if (fam->match_order() < k)
            fail(Errc::precondition, fam->name() + " matches only " + std::to_string(fam->match_order()) +
                                         " Gaussian moments, k = " + std::to_string(k));

    rep.lhs = std::abs(fx.expect([&](double x) {
        return fy.expect([&](double y) { return x * y * f.partial(0, 0, x, y) - f.partial(1, 1, x, y); });
    }));

    using detail::factorial;
    using detail::sup_product;
    const double dy_km1 = f.sup_norm(0, k - 1);      // ∂^{k-1}f/∂y^{k-1}
    const double dy_k = f.sup_norm(0, k);            // ∂^k f/∂y^k
    const double dx_km1_y = f.sup_norm(k - 1, 1);    // ∂^k f/∂x^{k-1}∂y
    const double dx_k_y = f.sup_norm(k, 1);          // ∂^{k+1}f/∂x^k∂y

    const double x1_K1 = fx.truncated_abs_moment(1, K1);
    const double yk_K2 = fy.truncated_abs_moment(k, K2);
    const double xk_K2 = fx.truncated_abs_moment(k, K2);
    const double yk = fy.abs_moment(k);
    const double xk = fx.abs_moment(k);
    const double yk1_K2 = fy.truncated_abs_moment(k + 1, K2);
    const double xk1_K1 = fx.truncated_abs_moment(k + 1, K1);

    const double c1 = 2.0 / factorial(k - 1);
    const double c2 = (k + 1) / factorial(k);

    double rhs = 0.0;
    rhs += sup_product(c1 * (dy_km1 + dy_k), x1_K1 * yk_K2);
    rhs += sup_product(c1 * (dx_km1_y + dx_k_y), xk_K2);
    rhs += 2.0 * c2 * K1 * (sup_product(K2 * dy_k, yk) + sup_product(dx_k_y, xk));
    rhs += c2 * K1 * (sup_product(dy_k, yk1_K2) + sup_product(dx_k_y, xk));
    rhs += c2 * (sup_product(K2 * dy_k, x1_K1 * yk) + sup_product(dx_k_y, xk1_K1));
    rep.rhs = rhs;
    const bool discrete = fx.is_discrete() && fy.is_discrete();
    rep.holds = rep.lhs <= rep.rhs + (discrete ? 0.0 : kIbpQuadratureSlack);
    return rep;
}

struct IbpCell {
    std::optional<DisorderFamily> family_x; // empty: univariate cell
    DisorderFamily family_y;
    std::optional<TestFunction1D> f1;
    std::optional<TestFunction2D> f2;
    int k = 2;
    double K1 = 1.0;
    double K2 = 1.0;
};

struct IbpSummary {
    std::size_t cells = 0;
    std::size_t holds = 0;
    std::size_t violations = 0;
    std::size_t precondition_errors = 0;
};

/// Families {rademacher, uniform, gaussian, two_point}, sin(a·) for a ∈ {0.5, 1, 2}
/// (sin(ax)sin(ay) in two variables), k ∈ {2, 3}, K ∈ {1, 2, 5}: univariate cells
/// for every family, bivariate cells for every ordered family pair with K1 = K2 = K.
inline std::vector<IbpCell> default_ibp_grid()
{
    const std::vector<DisorderFamily> fams{DisorderFamily::rademacher(), DisorderFamily::uniform(),
                                           DisorderFamily::gaussian(), DisorderFamily::two_point()};
    const std::vector<double> as{0.5, 1.0, 2.0};
    std::vector<IbpCell> grid;
    for (int k : {2, 3})
        for (double K : {1.0, 2.0, 5.0})
            for (double a : as) {
                for (const auto& fy : fams)
                    grid.push_back({std::nullopt, fy, TestFunction1D::sine(a), std::nullopt, k, K, K});
                for (const auto& fx : fams)
                    for (const auto& fy : fams)
                        grid.push_back({fx, fy, std::nullopt,
                                        TestFunction2D::product(TestFunction1D::sine(a), TestFunction1D::sine(a)), k, K,
                                        K});
            }
    return grid;
}

inline std::vector<IbpBoundReport> sweep_certify(const std::vector<IbpCell>& grid, unsigned workers = 1)
{
    std::vector<IbpBoundReport> out(grid.size());
    parallel_for(grid.size(), workers, [&](std::size_t i) {
        const auto& c = grid[i];
        try {
            out[i] = c.family_x ? bivariate_gap(*c.family_x, c.family_y, *c.f2, c.k, c.K1, c.K2)
                                : univariate_gap(c.family_y, *c.f1, c.k, c.K1);
        } catch (const Error& e) {
            if (e.code() != Errc::precondition) throw;
            IbpBoundReport r;
            r.family_x = c.family_x ? c.family_x->name() : "";
            r.family_y = c.family_y.name();
            r.function = c.family_x ? c.f2->name : c.f1->name;
            r.k = c.k;
            r.K1 = c.K1;
            r.K2 = c.family_x ? c.K2 : 0.0;
            r.error = e.what();
            out[i] = std::move(r);
        }
    });
    return out;
}

inline IbpSummary summarize(const std::vector<IbpBoundReport>& reports)
{
    IbpSummary s;
    s.cells = reports.size();
    for (const auto& r : reports) {
        if (r.error) ++s.precondition_errors;
        else if (r.holds) ++s.holds;
        else ++s.violations;
    }
    return s;
}

} // namespace rfim
