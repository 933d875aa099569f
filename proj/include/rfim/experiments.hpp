#pragma once

#include "rfim/error.hpp"
#include "rfim/gibbs.hpp"
#include "rfim/ibp.hpp"
#include "rfim/identities.hpp"
#include "rfim/lattice.hpp"
#include "rfim/model.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace rfim {

inline constexpr int kConfigVersion = 1;

struct TargetSpec {
    std::string name;
    std::string label;
    int m = 2;
    std::string f = "r12";
    std::string psi = "id";
    int p = 1;
    double eps = 0.2;
    double bound_coef = 2.0; // free_energy_variance: Var F_n <= coef · μ² |V|^{3/2}
    std::string grid = "default";
    std::optional<std::vector<double>> alpha;
    std::optional<std::size_t> n_disorder;
};

struct ExperimentConfig {
    ModelSpec model;
    EstimatorConfig estimator;
    std::vector<TargetSpec> targets;
    std::vector<int> n_grid;
    std::uint64_t seed = 0;
    std::string csv_path = "results.csv";
    std::string summary_path = "summary.json";
    std::string hash; // FNV-1a of the canonical config text
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string fmt_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class SchemaReader {
public:
    SchemaReader(const nlohmann::json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path))
    {
        if (!j.is_object()) fail(Errc::schema, path_ + ": expected an object");
        for (const auto& [k, v] : j.items())
            if (!allowed.count(k)) fail(Errc::schema, at(k) + ": unknown key");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }

    template <class T>
    T get(const std::string& key, std::optional<T> fallback = std::nullopt) const
    {
        if (!j_.contains(key)) {
            if (fallback) return *fallback;
            fail(Errc::schema, at(key) + ": required key missing");
        }
        const auto& v = j_.at(key);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw std::runtime_error("");
            } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
                if (!v.is_number_integer()) throw std::runtime_error("");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw std::runtime_error("");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw std::runtime_error("");
            }
            return v.get<T>();
        } catch (const std::exception&) {
            fail(Errc::schema, at(key) + ": wrong type");
        }
    }

    const nlohmann::json& raw(const std::string& key) const { return j_.at(key); }

private:
    const nlohmann::json& j_;
    std::string path_;
};

inline std::vector<double> read_double_list(const nlohmann::json& v, const std::string& path)
{
    if (!v.is_array()) fail(Errc::schema, path + ": expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) fail(Errc::schema, path + "[" + std::to_string(i) + "]: expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

} // namespace detail

inline const std::set<std::string>& known_targets()
{
    static const std::set<std::string> names{"gg_residual",         "delta_concentration",      "self_averaging",
                                             "energy_ergodicity",   "ultrametricity_violation", "free_energy_variance",
                                             "ibp_certify"};
    return names;
}

/// Schema-checks a config document; errors name the offending field path.
inline ExperimentConfig parse_config(const nlohmann::json& j)
{
    using detail::SchemaReader;
    ExperimentConfig cfg;
    SchemaReader top(j, "", {"version", "seed", "n_grid", "model", "estimator", "targets", "output"});
    const int version = top.get<int>("version");
    if (version != kConfigVersion) fail(Errc::schema, "version: unsupported version " + std::to_string(version));
    cfg.seed = top.get<std::uint64_t>("seed");

    const auto& grid = top.raw("n_grid");
    if (!grid.is_array() || grid.empty()) fail(Errc::schema, "n_grid: expected a non-empty array");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!grid[i].is_number_integer() || grid[i].get<int>() < 1)
            fail(Errc::schema, "n_grid[" + std::to_string(i) + "]: expected an integer >= 1");
        if (i > 0 && grid[i].get<int>() <= grid[i - 1].get<int>())
            fail(Errc::schema, "n_grid[" + std::to_string(i) + "]: grid must be strictly increasing");
        cfg.n_grid.push_back(grid[i].get<int>());
    }

    {
        SchemaReader m(top.raw("model"), "model",
                       {"d", "beta", "mu", "gamma", "family", "xi_family", "alpha", "c_exponent", "p_max"});
        auto& s = cfg.model;
        s.d = m.get<int>("d", 1);
        s.beta = m.get<double>("beta");
        s.mu = m.get<double>("mu", 1.0);
        s.gamma = m.get<double>("gamma", 0.25);
        s.family = m.get<std::string>("family", std::string("rademacher"));
        s.xi_family = m.get<std::string>("xi_family", std::string());
        if (m.has("alpha")) s.alpha = detail::read_double_list(m.raw("alpha"), "model.alpha");
        s.c_exponent = m.get<double>("c_exponent", 0.25);
        s.p_max = m.get<int>("p_max", 3);
        try {
            (void)s.field_family();
            (void)s.coupling_family();
            (void)s.params_for(16);
        } catch (const Error& e) {
            fail(Errc::schema, std::string("model: ") + e.what());
        }
        if (s.d < 1) fail(Errc::schema, "model.d: must be >= 1");
    }

    int default_m = 2;
    if (top.has("estimator")) {
        SchemaReader e(top.raw("estimator"), "estimator",
                       {"mode", "m", "n_disorder", "sweeps", "burn_in", "thin", "table_samples", "paired", "volume_cap"});
        auto& c = cfg.estimator;
        const auto mode = e.get<std::string>("mode", std::string("exact"));
        if (mode == "exact") c.mode = Mode::exact;
        else if (mode == "mcmc") c.mode = Mode::mcmc;
        else fail(Errc::schema, "estimator.mode: expected 'exact' or 'mcmc'");
        default_m = e.get<int>("m", 2);
        c.n_disorder = e.get<std::size_t>("n_disorder", std::size_t{400});
        c.sweeps = e.get<std::size_t>("sweeps", std::size_t{10'000});
        c.burn_in = e.get<std::size_t>("burn_in", std::size_t{1'000});
        c.thin = e.get<std::size_t>("thin", std::size_t{10});
        c.table_samples = e.get<std::size_t>("table_samples", std::size_t{2'000});
        c.paired = e.get<bool>("paired", true);
        c.volume_cap = e.get<unsigned>("volume_cap", 24u);
        if (c.n_disorder < 2) fail(Errc::schema, "estimator.n_disorder: must be >= 2");
        if (c.thin < 1) fail(Errc::schema, "estimator.thin: must be >= 1");
        if (c.volume_cap > 26) fail(Errc::schema, "estimator.volume_cap: must be <= 26");
    }

    const auto& targets = top.raw("targets");
    if (!targets.is_array()) fail(Errc::schema, "targets: expected an array");
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const std::string path = "targets[" + std::to_string(i) + "]";
        if (!targets[i].is_object() || !targets[i].contains("name") || !targets[i]["name"].is_string())
            fail(Errc::schema, path + ".name: required string");
        TargetSpec t;
        t.name = targets[i]["name"].get<std::string>();
        if (!known_targets().count(t.name)) fail(Errc::schema, path + ".name: unknown target '" + t.name + "'");
        std::set<std::string> allowed{"name", "label", "alpha", "n_disorder"};
        if (t.name == "gg_residual") allowed.insert({"m", "f", "psi"});
        if (t.name == "delta_concentration") allowed.insert("p");
        if (t.name == "ultrametricity_violation") allowed.insert("eps");
        if (t.name == "free_energy_variance") allowed.insert("bound_coef");
        if (t.name == "ibp_certify") allowed = {"name", "label", "grid"};
        SchemaReader r(targets[i], path, allowed);
        t.label = r.get<std::string>("label", t.name);
        t.m = r.get<int>("m", default_m);
        t.f = r.get<std::string>("f", std::string("r12"));
        t.psi = r.get<std::string>("psi", std::string("id"));
        t.p = r.get<int>("p", 1);
        t.eps = r.get<double>("eps", 0.2);
        t.bound_coef = r.get<double>("bound_coef", 2.0);
        t.grid = r.get<std::string>("grid", std::string("default"));
        if (r.has("alpha")) t.alpha = detail::read_double_list(r.raw("alpha"), path + ".alpha");
        if (r.has("n_disorder")) {
            t.n_disorder = r.get<std::size_t>("n_disorder");
            if (*t.n_disorder < 2) fail(Errc::schema, path + ".n_disorder: must be >= 2");
        }
        try {
            if (t.name == "gg_residual") {
                (void)parse_f(t.f, t.m);
                (void)parse_psi(t.psi);
            }
            if (t.name == "delta_concentration")
                require(t.p >= 1 && (t.p == 1 || t.p <= cfg.model.p_max), Errc::invalid_argument, "p must be in 1..p_max");
            if (t.name == "ultrametricity_violation") require(t.eps > 0.0, Errc::invalid_argument, "eps must be > 0");
            if (t.name == "ibp_certify") require(t.grid == "default", Errc::invalid_argument, "only grid 'default' exists");
            if (t.alpha) {
                ModelSpec probe = cfg.model;
                probe.alpha = *t.alpha;
                (void)probe.params_for(16);
            }
        } catch (const Error& e) {
            fail(Errc::schema, path + ": " + e.what());
        }
        cfg.targets.push_back(std::move(t));
    }

    if (top.has("output")) {
        SchemaReader o(top.raw("output"), "output", {"csv", "summary"});
        cfg.csv_path = o.get<std::string>("csv", cfg.csv_path);
        cfg.summary_path = o.get<std::string>("summary", cfg.summary_path);
    }
    cfg.hash = detail::hex64(detail::fnv1a(j.dump()));
    return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(Errc::schema, std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------

struct ResultRow {
    std::size_t target_index = 0;
    std::string quantity;
    int n = 0;            // 0 when not volume-dependent
    std::size_t volume = 0;
    double value = 0.0;
    double std_error = 0.0;
};

struct TrendVerdict {
    std::string target;
    std::string label;
    std::string quantity;
    std::string rule;
    std::vector<int> n_grid;
    std::vector<double> values;
    std::vector<double> std_errors;
    bool pass = false;
    std::string detail;
};

/// Consecutive grid points may rise by at most 3 combined standard errors.
inline bool monotone_within(const std::vector<double>& v, const std::vector<double>& se, std::string& why,
                            bool absolute = false)
{
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double a = absolute ? std::abs(v[i - 1]) : v[i - 1];
        const double b = absolute ? std::abs(v[i]) : v[i];
        const double allow = 3.0 * std::sqrt(se[i - 1] * se[i - 1] + se[i] * se[i]);
        if (b > a + allow) {
            why = "increase between grid points " + std::to_string(i - 1) + " and " + std::to_string(i);
            return false;
        }
    }
    return true;
}

struct RunResult {
    std::string csv;
    nlohmann::json summary;
    bool all_pass = false;
};

inline const char* kTrendCaveat =
    "finite-volume trend only; assumes (beta, mu) is a generic point where the free energy is differentiable in mu";

/// Evaluates every target at every grid point. Output bytes depend only on
/// the config, never on `workers`.
inline RunResult run(const ExperimentConfig& cfg, unsigned workers = 1,
                     const std::function<void(const std::string&)>& progress = {})
{
    std::vector<ResultRow> rows;
    std::vector<std::optional<std::string>> errors(cfg.targets.size());

    for (std::size_t ti = 0; ti < cfg.targets.size(); ++ti) {
        const auto& t = cfg.targets[ti];
        ModelSpec spec = cfg.model;
        if (t.alpha) spec.alpha = *t.alpha;
        EstimatorConfig est = cfg.estimator;
        est.workers = workers;
        if (t.n_disorder) est.n_disorder = *t.n_disorder;

        try {
            if (t.name == "ibp_certify") {
                const auto reports = sweep_certify(default_ibp_grid(), workers);
                const auto s = summarize(reports);
                rows.push_back({ti, "violations", 0, 0, static_cast<double>(s.violations), 0.0});
                rows.push_back({ti, "holds", 0, 0, static_cast<double>(s.holds), 0.0});
                rows.push_back({ti, "precondition_errors", 0, 0, static_cast<double>(s.precondition_errors), 0.0});
                continue;
            }
            for (int n : cfg.n_grid) {
                if (progress) progress(t.label + " n=" + std::to_string(n));
                const Lattice lat(spec.d, n);
                if (est.mode == Mode::exact && lat.volume() > est.volume_cap)
                    fail(Errc::cap_exceeded, "|V| = " + std::to_string(lat.volume()) + " at n = " + std::to_string(n) +
                                                 " exceeds the exact enumeration cap");
                const auto vol = lat.volume();
                if (t.name == "gg_residual") {
                    const auto r = gg_residual(t.m, t.f, t.psi, spec, lat, est, cfg.seed);
                    rows.push_back({ti, "residual", n, vol, r.residual, r.std_error});
                } else if (t.name == "delta_concentration") {
                    const auto r = delta_concentration(t.p, spec, lat, est, cfg.seed);
                    rows.push_back({ti, "abs_deviation", n, vol, r.value, r.std_error});
                } else if (t.name == "self_averaging") {
                    const auto r = self_averaging(spec, lat, est, cfg.seed);
                    rows.push_back({ti, "overlap_variance", n, vol, r.overlap.value, r.overlap.std_error});
                    rows.push_back({ti, "magnetization_variance", n, vol, r.magnetization.value, r.magnetization.std_error});
                } else if (t.name == "energy_ergodicity") {
                    const auto r = energy_ergodicity(spec, lat, est, cfg.seed);
                    rows.push_back({ti, "abs_deviation", n, vol, r.value, r.std_error});
                } else if (t.name == "ultrametricity_violation") {
                    const auto r = ultrametricity_violation(t.eps, spec, lat, est, cfg.seed);
                    rows.push_back({ti, "violation_prob", n, vol, r.violation_prob, r.std_error});
                } else if (t.name == "free_energy_variance") {
                    const auto r = free_energy_stats(lat, spec, est.n_disorder, cfg.seed, workers);
                    // sd of the sample variance under normality: var·sqrt(2/(n-1))
                    const double se = r.var_f * std::sqrt(2.0 / static_cast<double>(est.n_disorder - 1));
                    rows.push_back({ti, "var_F", n, vol, r.var_f, se});
                }
            }
        } catch (const Error& e) {
            errors[ti] = e.what();
        }
    }

    // CSV
    std::ostringstream csv;
    if (!cfg.targets.empty())
        csv << "target,label,quantity,n,volume,m,f,psi,p,eps,value,std_error,mode,n_disorder,seed,config_hash\n";
    for (const auto& r : rows) {
        const auto& t = cfg.targets[r.target_index];
        const bool gg = t.name == "gg_residual";
        const std::size_t nd = t.n_disorder.value_or(cfg.estimator.n_disorder);
        csv << t.name << ',' << t.label << ',' << r.quantity << ',' << r.n << ',' << r.volume << ','
            << (gg ? std::to_string(t.m) : "") << ',' << (gg ? t.f : "") << ',' << (gg ? t.psi : "") << ','
            << (t.name == "delta_concentration" ? std::to_string(t.p) : "") << ','
            << (t.name == "ultrametricity_violation" ? detail::fmt_double(t.eps) : "") << ','
            << detail::fmt_double(r.value) << ',' << detail::fmt_double(r.std_error) << ','
            << (t.name == "ibp_certify" ? "exact" : to_string(cfg.estimator.mode)) << ','
            << (t.name == "ibp_certify" ? 0 : nd) << ',' << cfg.seed << ',' << cfg.hash << '\n';
    }

    // verdicts
    std::vector<TrendVerdict> verdicts;
    for (std::size_t ti = 0; ti < cfg.targets.size(); ++ti) {
        const auto& t = cfg.targets[ti];
        std::vector<std::string> quantities;
        for (const auto& r : rows)
            if (r.target_index == ti && std::find(quantities.begin(), quantities.end(), r.quantity) == quantities.end())
                quantities.push_back(r.quantity);
        if (errors[ti]) {
            verdicts.push_back({t.name, t.label, "", "error", {}, {}, {}, false, *errors[ti]});
            continue;
        }
        for (const auto& q : quantities) {
            if (t.name == "ibp_certify" && q != "violations") continue;
            TrendVerdict v{t.name, t.label, q, "", {}, {}, {}, false, ""};
            for (const auto& r : rows)
                if (r.target_index == ti && r.quantity == q) {
                    v.n_grid.push_back(r.n);
                    v.values.push_back(r.value);
                    v.std_errors.push_back(r.std_error);
                }
            if (t.name == "ibp_certify") {
                v.rule = "zero-violations";
                v.pass = v.values.at(0) == 0.0;
            } else if (t.name == "free_energy_variance") {
                v.rule = "below-bound";
                v.pass = true;
                for (std::size_t i = 0; i < v.values.size(); ++i) {
                    const double vol = std::pow(static_cast<double>(v.n_grid[i]), cfg.model.d);
                    const double bound = t.bound_coef * cfg.model.mu * cfg.model.mu * std::pow(vol, 1.5);
                    if (!(v.values[i] <= bound)) {
                        v.pass = false;
                        v.detail = "Var F_n above bound at n = " + std::to_string(v.n_grid[i]);
                    }
                }
            } else {
                const bool abs_rule = t.name == "gg_residual";
                v.rule = abs_rule ? "abs-monotone-decrease-3sigma" : "monotone-decrease-3sigma";
                v.pass = monotone_within(v.values, v.std_errors, v.detail, abs_rule);
                if (v.pass) v.detail = kTrendCaveat;
            }
            verdicts.push_back(std::move(v));
        }
    }

    RunResult out;
    out.csv = csv.str();
    out.all_pass = true;
    nlohmann::json vs = nlohmann::json::array();
    for (const auto& v : verdicts) {
        out.all_pass = out.all_pass && v.pass;
        vs.push_back({{"target", v.target},
                      {"label", v.label},
                      {"quantity", v.quantity},
                      {"rule", v.rule},
                      {"n_grid", v.n_grid},
                      {"values", v.values},
                      {"std_errors", v.std_errors},
                      {"verdict", v.pass ? "PASS" : "FAIL"},
                      {"detail", v.detail}});
    }
    out.summary = {{"version", kConfigVersion},
                   {"config_hash", cfg.hash},
                   {"seed", cfg.seed},
                   {"mode", to_string(cfg.estimator.mode)},
                   {"verdicts", vs},
                   {"all_pass", out.all_pass}};
    return out;
}

} // namespace rfim
