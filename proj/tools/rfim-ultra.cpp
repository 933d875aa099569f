// rfim-ultra: command-line front end for the rfim library.

#include "rfim/experiments.hpp"
#include "rfim/overlaps.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<int> parse_int_list(const std::string& s)
{
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        int v = 0;
        try {
            v = std::stoi(item, &pos);
        } catch (const std::exception&) {
            pos = std::string::npos;
        }
        if (pos != item.size()) rfim::fail(rfim::Errc::invalid_argument, "not an integer list: " + s);
        out.push_back(v);
    }
    return out;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) rfim::fail(rfim::Errc::invalid_argument, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) rfim::fail(rfim::Errc::invalid_argument, "cannot write " + path.string());
    out << text;
}

struct ModelArgs {
    int d = 1;
    int n = 8;
    double beta = 0.5;
    double mu = 1.0;
    double gamma = 0.25;
    std::string family = "rademacher";
    std::uint64_t seed = 7;

    void attach(CLI::App* app)
    {
        app->add_option("--d", d, "lattice dimension")->check(CLI::PositiveNumber);
        app->add_option("--n", n, "side length")->check(CLI::PositiveNumber);
        app->add_option("--beta", beta, "inverse temperature");
        app->add_option("--mu", mu, "field ceiling");
        app->add_option("--gamma", gamma, "decay exponent of mu - h");
        app->add_option("--family", family, "field distribution");
        app->add_option("--seed", seed, "disorder seed");
    }

    rfim::ModelSpec spec() const
    {
        rfim::ModelSpec s;
        s.d = d;
        s.beta = beta;
        s.mu = mu;
        s.gamma = gamma;
        s.family = family;
        return s;
    }
};

json gibbs_header(const ModelArgs& a, const rfim::Lattice& lat, const rfim::Realization& r)
{
    return {{"d", a.d}, {"n", a.n}, {"volume", lat.volume()}, {"beta", a.beta}, {"mu", a.mu},
            {"h", r.params.h}, {"family", a.family}, {"seed", a.seed}};
}

int cmd_run(const std::string& config_path, unsigned workers, const std::string& out_dir, bool gg_only)
{
    auto cfg = rfim::parse_config_text(read_file(config_path));
    if (gg_only) std::erase_if(cfg.targets, [](const auto& t) { return t.name != "gg_residual"; });
    const auto res = rfim::run(cfg, workers, [](const std::string& msg) { std::cerr << "[run] " << msg << '\n'; });
    const fs::path base = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
    write_file(base / cfg.csv_path, res.csv);
    write_file(base / cfg.summary_path, res.summary.dump(2) + "\n");
    std::cout << res.summary.dump(2) << '\n';
    return res.all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Random field Ising model overlap laboratory"};
    app.require_subcommand(1);

    // lattice info
    auto* lattice = app.add_subcommand("lattice", "lattice geometry");
    lattice->require_subcommand(1);
    auto* lattice_info = lattice->add_subcommand("info", "volume and edge count");
    int ld = 1, ln = 8;
    lattice_info->add_option("--d", ld)->required();
    lattice_info->add_option("--n", ln)->required();

    // condition check
    auto* condition = app.add_subcommand("condition", "perturbation decay condition");
    condition->require_subcommand(1);
    auto* condition_check = condition->add_subcommand("check", "finite-n check of a field schedule");
    double c_mu = 1.0, c_gamma = 0.25, c_eps = 1.0, c_threshold = 1e-3;
    std::string c_family = "rademacher", c_ns = "16,64,256";
    int c_d = 1;
    condition_check->add_option("--mu", c_mu);
    condition_check->add_option("--gamma", c_gamma);
    condition_check->add_option("--family", c_family);
    condition_check->add_option("--d", c_d);
    condition_check->add_option("--ns", c_ns, "comma-separated side lengths");
    condition_check->add_option("--eps", c_eps);
    condition_check->add_option("--threshold", c_threshold);

    // gibbs enumerate / mcmc
    auto* gibbs = app.add_subcommand("gibbs", "Gibbs expectations for one disorder draw");
    gibbs->require_subcommand(1);
    ModelArgs ge, gm;
    auto* gibbs_enum = gibbs->add_subcommand("enumerate", "exact enumeration");
    ge.attach(gibbs_enum);
    auto* gibbs_mcmc = gibbs->add_subcommand("mcmc", "heat-bath Monte Carlo");
    gm.attach(gibbs_mcmc);
    rfim::McmcOptions mopt;
    gibbs_mcmc->add_option("--sweeps", mopt.sweeps);
    gibbs_mcmc->add_option("--burn-in", mopt.burn_in);
    gibbs_mcmc->add_option("--thin", mopt.thin);
    gibbs_mcmc->add_option("--chain-seed", mopt.seed);

    // gg run
    auto* gg = app.add_subcommand("gg", "Ghirlanda-Guerra residuals");
    gg->require_subcommand(1);
    auto* gg_run = gg->add_subcommand("run", "run the gg_residual targets of a config");
    std::string config_path, out_dir;
    unsigned workers = 1;
    gg_run->add_option("--config", config_path)->required();
    gg_run->add_option("--workers", workers)->check(CLI::PositiveNumber);
    gg_run->add_option("--out", out_dir);

    // ibp certify
    auto* ibp = app.add_subcommand("ibp", "integration-by-parts bounds");
    ibp->require_subcommand(1);
    auto* ibp_certify = ibp->add_subcommand("certify", "evaluate both bounds over a grid");
    std::string grid = "default";
    ibp_certify->add_option("--grid", grid)->check(CLI::IsMember({"default"}));
    ibp_certify->add_option("--workers", workers)->check(CLI::PositiveNumber);
    ibp_certify->add_option("--out", out_dir);

    // run / validate
    auto* run = app.add_subcommand("run", "run every target of a config");
    run->add_option("--config", config_path)->required();
    run->add_option("--workers", workers)->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir);
    auto* validate = app.add_subcommand("validate", "check a config against the schema");
    validate->add_option("--config", config_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (lattice_info->parsed()) {
            const rfim::Lattice lat(ld, ln);
            std::cout << json{{"d", ld}, {"n", ln}, {"volume", lat.volume()}, {"edges", lat.edges().size()}}.dump()
                      << '\n';
            return 0;
        }
        if (condition_check->parsed()) {
            const auto rep = rfim::check_perturbation_condition(rfim::FieldSchedule::power(c_mu, c_gamma),
                                                                rfim::DisorderFamily::by_name(c_family), c_d,
                                                                parse_int_list(c_ns), c_eps, c_threshold);
            json rows = json::array();
            for (const auto& r : rep.rows)
                rows.push_back({{"n", r.n},
                                {"volume", r.volume},
                                {"h", r.h},
                                {"gap_sqrt_volume", r.gap_sqrt_volume},
                                {"third_moment_avg", r.third_moment_avg}});
            std::cout << json{{"pass", rep.pass},
                              {"failed_clause", rep.failed_clause},
                              {"message", rep.message},
                              {"epsilon", rep.epsilon},
                              {"threshold", rep.threshold},
                              {"rows", rows}}
                             .dump(2)
                      << '\n';
            return 0;
        }
        if (gibbs_enum->parsed()) {
            const rfim::Lattice lat(ge.d, ge.n);
            const auto real = rfim::realize(ge.spec(), lat, ge.seed, 0);
            rfim::ExactEnsemble ens(real.exponent);
            const auto mpoly = rfim::magnetization_polynomial(lat.volume());
            const std::vector<rfim::OverlapFunction> r1{rfim::overlap_identity()};
            json site = json::array();
            for (std::size_t x = 0; x < lat.volume(); ++x) {
                rfim::SpinPolynomial p(lat.volume());
                p.add(1.0, {static_cast<rfim::SiteIndex>(x)});
                site.push_back(ens.expect(p.finalize()));
            }
            auto out = gibbs_header(ge, lat, real);
            out["F_n"] = ens.log_partition();
            out["magnetization"] = ens.expect(mpoly);
            out["overlap"] = ens.expect_star(r1);
            out["site_magnetizations"] = site;
            std::cout << out.dump(2) << '\n';
            return 0;
        }
        if (gibbs_mcmc->parsed()) {
            const rfim::Lattice lat(gm.d, gm.n);
            const auto real = rfim::realize(gm.spec(), lat, gm.seed, 0);
            mopt.replicas = 2;
            const auto samples = rfim::mcmc_replicas(real.exponent, mopt);
            const auto m = rfim::mcmc_estimate(samples, [](const rfim::ReplicaSet& rs) {
                return 0.5 * (rfim::magnetization(rs[0]) + rfim::magnetization(rs[1]));
            });
            const auto q = rfim::mcmc_estimate(samples, [](const rfim::ReplicaSet& rs) { return rfim::overlap(rs[0], rs[1]); });
            auto out = gibbs_header(gm, lat, real);
            out["samples"] = samples.size();
            out["magnetization"] = {{"value", m.value}, {"std_error", m.std_error}};
            out["overlap"] = {{"value", q.value}, {"std_error", q.std_error}};
            std::cout << out.dump(2) << '\n';
            return 0;
        }
        if (gg_run->parsed()) return cmd_run(config_path, workers, out_dir, true);
        if (run->parsed()) return cmd_run(config_path, workers, out_dir, false);
        if (validate->parsed()) {
            const auto cfg = rfim::parse_config_text(read_file(config_path));
            std::cout << json{{"valid", true}, {"config_hash", cfg.hash}, {"targets", cfg.targets.size()}}.dump() << '\n';
            return 0;
        }
        if (ibp_certify->parsed()) {
            const auto reports = rfim::sweep_certify(rfim::default_ibp_grid(), workers);
            std::ostringstream csv;
            csv << "family_x,family_y,function,k,K1,K2,lhs,rhs,holds,error\n";
            for (const auto& r : reports) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,", r.k, r.K1, r.K2, r.lhs, r.rhs);
                csv << r.family_x << ',' << r.family_y << ',' << r.function << ',' << buf << (r.holds ? 1 : 0) << ','
                    << r.error.value_or("") << '\n';
            }
            const auto s = rfim::summarize(reports);
            const json summary{{"cells", s.cells},
                               {"holds", s.holds},
                               {"violations", s.violations},
                               {"precondition_errors", s.precondition_errors},
                               {"verdict", s.violations == 0 ? "PASS" : "FAIL"}};
            if (out_dir.empty()) {
                std::cout << csv.str();
                std::cerr << summary.dump(2) << '\n';
            } else {
                write_file(fs::path(out_dir) / "ibp.csv", csv.str());
                write_file(fs::path(out_dir) / "ibp_summary.json", summary.dump(2) + "\n");
                std::cout << summary.dump(2) << '\n';
            }
            return s.violations == 0 ? 0 : 1;
        }
    } catch (const rfim::Error& e) {
        std::cerr << "error [" << rfim::to_string(e.code()) << "]: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
