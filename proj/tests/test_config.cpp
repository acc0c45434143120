#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nldecay/runner.hpp"

using namespace nldecay;
namespace fs = std::filesystem;

namespace {

Config parse(const std::string& text) {
    std::istringstream is(text);
    return Config::parse(is, "test.conf");
}

int error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("nldecay_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::vector<std::string>& header) {
    std::ifstream is(p);
    std::string line;
    std::getline(is, line);
    header.clear();
    std::stringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');) header.push_back(cell);
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        std::vector<double> row;
        std::stringstream rs(line);
        for (std::string cell; std::getline(rs, cell, ',');) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

const char* small_simulate = R"(mode = simulate
name = small
horizon = 20
sample_dt = 1
p_list = 2, 3
k_list = 1

[grid]
dim = 1
L = 32
n = 256

[kernel]
kind = bump
support_radius = 1
parameter = 1

[initial]
kind = gaussian
width = 1

[check]
slope = false
)";

} // namespace

TEST(Config, SectionsCommentsAndLists) {
    const auto c = parse("a = 1 # trailing\n# whole line\n\n[grid]\nL = 2.5\nlist = 1, 2,3\nflag = yes\n");
    EXPECT_EQ(c.get_long("a"), 1);
    EXPECT_EQ(c.get_double("grid.L"), 2.5);
    EXPECT_EQ(c.get_doubles("grid.list", {}), (std::vector<double>{1.0, 2.0, 3.0}));
    EXPECT_TRUE(c.get_bool("grid.flag", false));
    EXPECT_EQ(c.get_double("missing", 4.0), 4.0);
    EXPECT_EQ(c.line_of("grid.L"), 5);
}

TEST(Config, MalformedInputIsLineAnchored) {
    EXPECT_EQ(error_line("a = 1\nno equals sign\n"), 2);
    EXPECT_EQ(error_line("a = 1\n[broken\n"), 2);
    EXPECT_EQ(error_line("a = 1\na = 2\n"), 2);
    EXPECT_EQ(error_line("a =\n"), 1);
    EXPECT_EQ(error_line("bad key = 3\n"), 1);
    try {
        parse("x = 1\ny = abc\n").get_double("y");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 2);
        EXPECT_NE(std::string(e.what()).find("test.conf:2:"), std::string::npos);
    }
}

TEST(Config, UnknownKeysAreRejected) {
    auto c = parse("mode = constants\nname = x\n[grid]\ndim = 1\ntypo = 3\n");
    RunContext ctx;
    ctx.out_dir = scratch("unknown").string();
    try {
        run_config(c, "constants", ctx);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 5);
    }
}

TEST(Config, ModeMismatchIsAConfigError) {
    RunContext ctx;
    ctx.out_dir = scratch("mismatch").string();
    EXPECT_THROW(run_config(parse("mode = simulate\n"), "dispersal", ctx), ConfigError);
    EXPECT_THROW(run_config(parse("mode = plot\n"), "plot", ctx), ConfigError);
}

TEST(Runner, ConstantsMatchTheLedger) {
    RunContext ctx;
    ctx.out_dir = scratch("constants").string();
    const auto s = run_config(parse("mode = constants\nname = led\np_list = 3\nk_list = 0, 1\n"), "constants", ctx);
    ASSERT_TRUE(s.passed());
    const auto doc = Json::parse(slurp(fs::path(ctx.out_dir) / "led_ledger.json"));
    ASSERT_EQ(doc["ledgers"].size(), 2u);
    for (const auto& j : doc["ledgers"]) {
        const auto c = constants_for(1, 3.0, j["k"].get<double>());
        EXPECT_EQ(j["C1"]["value"].get<double>(), c.C1);
        EXPECT_EQ(j["C_main"]["value"].get<double>(), c.C_main);
        EXPECT_EQ(j["C_deriv"]["value"].get<double>(), c.C_deriv);
        EXPECT_EQ(j["c_p"]["value"].get<double>(), c.c_p);
    }
    EXPECT_TRUE(fs::exists(fs::path(ctx.out_dir) / "led.json"));
}

TEST(Runner, SimulationEnvelopeDominatesAndOutputIsDeterministic) {
    RunContext a, b;
    a.out_dir = scratch("sim_a").string();
    b.out_dir = scratch("sim_b").string();
    const auto sa = run_config(parse(small_simulate), "simulate", a);
    const auto sb = run_config(parse(small_simulate), "simulate", b);
    EXPECT_TRUE(sa.passed());
    for (const auto& f : sa.artifacts) EXPECT_EQ(slurp(fs::path(a.out_dir) / f), slurp(fs::path(b.out_dir) / f)) << f;
    std::vector<std::string> header;
    const auto rows = read_csv(fs::path(a.out_dir) / "small.csv", header);
    ASSERT_FALSE(rows.empty());
    auto col = [&](const std::string& n) {
        return static_cast<std::size_t>(std::find(header.begin(), header.end(), n) - header.begin());
    };
    for (const auto& [v, e] : {std::pair{"lp2", "env_p2"}, std::pair{"lp3", "env_p3"}, std::pair{"dk1", "env_dk1"}}) {
        ASSERT_LT(col(v), header.size());
        ASSERT_LT(col(e), header.size());
        for (const auto& r : rows) EXPECT_LE(r[col(v)], r[col(e)]);
    }
}

TEST(Runner, SeedOverrideChangesVerificationDraws) {
    const std::string text = R"(mode = verify-inequality
name = ver
p_list = 3
[grid]
dim = 1
L = 16
n = 256
[kernel]
kind = box
support_radius = 1
parameter = 1
[verify]
checks = main
trials = 50
families = gaussian_mixture
)";
    RunContext a, b;
    a.out_dir = scratch("ver_a").string();
    b.out_dir = scratch("ver_b").string();
    b.seed = 99;
    const auto sa = run_config(parse(text), "verify-inequality", a);
    const auto sb = run_config(parse(text), "verify-inequality", b);
    EXPECT_TRUE(sa.passed());
    EXPECT_TRUE(sb.passed());
    EXPECT_NE(slurp(fs::path(a.out_dir) / "ver_reports.json"), slurp(fs::path(b.out_dir) / "ver_reports.json"));
}

TEST(Runner, BundledBoxConfigPasses) {
    RunContext ctx;
    ctx.out_dir = scratch("bundled").string();
    const auto cfg = Config::load(std::string(NLDECAY_CATALOG_DIR) + "/thm13_box_1d.conf");
    const auto s = run_config(cfg, "simulate", ctx);
    EXPECT_TRUE(s.passed());
    std::vector<std::string> header;
    const auto rows = read_csv(fs::path(ctx.out_dir) / (s.name + ".csv"), header);
    const auto lp = std::find(header.begin(), header.end(), "lp2") - header.begin();
    const auto env = std::find(header.begin(), header.end(), "env_p2") - header.begin();
    for (const auto& r : rows) EXPECT_LE(r[lp], r[env]);
}

TEST(Runner, CatalogListsEveryConfig) {
    const auto entries = catalog_entries(NLDECAY_CATALOG_DIR);
    EXPECT_EQ(entries.size(), 9u);
    for (const auto& e : entries) EXPECT_NO_THROW(Config::load(e.string()));
    EXPECT_THROW(catalog_entries("/nonexistent/dir"), Error);
}

TEST(Runner, LoglogSlopeOfPowerLaw) {
    std::vector<double> t, v;
    for (int i = 1; i <= 100; ++i) {
        t.push_back(i);
        v.push_back(3.0 * std::pow(i, -0.75));
    }
    EXPECT_NEAR(loglog_slope_last_decade(t, v), -0.75, 1e-12);
}
