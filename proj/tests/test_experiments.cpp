#include "rfim/experiments.hpp"

#include <gtest/gtest.h>

using namespace rfim;
using nlohmann::json;

namespace {

json small_config()
{
    return json::parse(R"({
      "version": 1,
      "seed": 7,
      "n_grid": [2, 3, 4],
      "model": {"d": 1, "beta": 0.5, "mu": 1.0, "gamma": 0.25, "family": "rademacher"},
      "estimator": {"mode": "exact", "n_disorder": 20},
      "targets": [
        {"name": "gg_residual", "m": 2, "f": "r12", "psi": "id"},
        {"name": "gg_residual", "label": "gg_pow2_alpha", "f": "r12", "psi": "pow:2", "alpha": [1, 1]},
        {"name": "delta_concentration", "p": 2},
        {"name": "self_averaging"},
        {"name": "energy_ergodicity"},
        {"name": "ultrametricity_violation", "eps": 0.2},
        {"name": "free_energy_variance"}
      ]
    })");
}

std::string schema_error(const json& j)
{
    try {
        parse_config(j);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::schema);
        return e.what();
    }
    return "";
}

} // namespace

TEST(Config, ParsesValidDocument)
{
    const auto cfg = parse_config(small_config());
    EXPECT_EQ(cfg.seed, 7u);
    EXPECT_EQ(cfg.n_grid, (std::vector<int>{2, 3, 4}));
    ASSERT_EQ(cfg.targets.size(), 7u);
    EXPECT_EQ(cfg.targets[1].label, "gg_pow2_alpha");
    EXPECT_EQ(*cfg.targets[1].alpha, (std::vector<double>{1, 1}));
    EXPECT_EQ(cfg.estimator.n_disorder, 20u);
    EXPECT_EQ(cfg.hash.size(), 16u);
}

TEST(Config, UnknownKeysReportFieldPaths)
{
    auto j = small_config();
    j["extra"] = 1;
    EXPECT_NE(schema_error(j).find("extra: unknown key"), std::string::npos);
    j = small_config();
    j["model"]["temperature"] = 1;
    EXPECT_NE(schema_error(j).find("model.temperature: unknown key"), std::string::npos);
    j = small_config();
    j["targets"][2]["eps"] = 0.1;
    EXPECT_NE(schema_error(j).find("targets[2].eps: unknown key"), std::string::npos);
    j = small_config();
    j["estimator"]["sweeps"] = "many";
    EXPECT_NE(schema_error(j).find("estimator.sweeps: wrong type"), std::string::npos);
}

TEST(Config, RejectsBadValues)
{
    auto j = small_config();
    j["version"] = 2;
    EXPECT_NE(schema_error(j).find("version"), std::string::npos);
    j = small_config();
    j["n_grid"] = {4, 3};
    EXPECT_NE(schema_error(j).find("n_grid[1]"), std::string::npos);
    j = small_config();
    j["targets"][0]["name"] = "magic";
    EXPECT_NE(schema_error(j).find("targets[0].name"), std::string::npos);
    j = small_config();
    j["targets"][0]["psi"] = "pow:9";
    EXPECT_NE(schema_error(j).find("targets[0]"), std::string::npos);
    j = small_config();
    j["model"]["family"] = "cauchy";
    EXPECT_NE(schema_error(j).find("model"), std::string::npos);
    j = small_config();
    j.erase("seed");
    EXPECT_NE(schema_error(j).find("seed: required"), std::string::npos);
    EXPECT_THROW(parse_config_text("{not json"), Error);
}

TEST(Config, HashTracksContent)
{
    auto j = small_config();
    const auto a = parse_config(j).hash;
    j["seed"] = 8;
    EXPECT_NE(parse_config(j).hash, a);
    EXPECT_EQ(parse_config(small_config()).hash, a);
}

TEST(Run, EmptyTargets)
{
    auto j = small_config();
    j["targets"] = json::array();
    const auto res = run(parse_config(j));
    EXPECT_EQ(res.csv, "");
    EXPECT_TRUE(res.summary["verdicts"].empty());
    EXPECT_TRUE(res.all_pass);
}

TEST(Run, RowsProvenanceAndDeterminism)
{
    const auto cfg = parse_config(small_config());
    const auto a = run(cfg, 1);
    const auto b = run(cfg, 4);
    EXPECT_EQ(a.csv, b.csv);
    EXPECT_EQ(a.summary.dump(), b.summary.dump());

    std::istringstream in(a.csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("target,label,quantity,n,", 0), 0u);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_NE(line.find(",exact,20,7," + cfg.hash), std::string::npos) << line;
    }
    // six single-quantity targets and self_averaging with two, at three sizes
    EXPECT_EQ(rows, 3u * 8u);
    EXPECT_EQ(a.summary["verdicts"].size(), 8u);
    for (const auto& v : a.summary["verdicts"]) EXPECT_EQ(v["values"].size(), 3u);
}

TEST(Run, CapacityViolationIsPerTarget)
{
    auto j = small_config();
    j["n_grid"] = {2, 30};
    j["targets"].push_back({{"name", "ibp_certify"}});
    const auto res = run(parse_config(j));
    EXPECT_FALSE(res.all_pass);
    std::size_t errors = 0;
    for (const auto& v : res.summary["verdicts"]) {
        if (v["rule"] == "error") {
            ++errors;
            EXPECT_NE(v["detail"].get<std::string>().find("cap"), std::string::npos);
        }
        if (v["target"] == "ibp_certify") EXPECT_EQ(v["verdict"], "PASS");
    }
    EXPECT_EQ(errors, 7u);
}

TEST(Verdict, MonotoneWithAllowance)
{
    std::string why;
    EXPECT_TRUE(monotone_within({1.0, 0.8, 0.81, 0.5}, {0.01, 0.01, 0.01, 0.01}, why));
    EXPECT_FALSE(monotone_within({1.0, 0.8, 0.9, 0.5}, {0.01, 0.01, 0.01, 0.01}, why));
    EXPECT_FALSE(why.empty());
    EXPECT_TRUE(monotone_within({-0.3, 0.2, -0.1}, {0.0, 0.0, 0.0}, why, true));
    EXPECT_FALSE(monotone_within({-0.3, 0.2, -0.1}, {0.0, 0.0, 0.0}, why, false));
}
