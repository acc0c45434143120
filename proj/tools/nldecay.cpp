// Command-line runner for the decay experiments.
//
// Exit codes: 0 all enabled checks passed, 1 a check failed, 2 the
// configuration is malformed or invalid, 3 runtime error.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>

#include "nldecay/runner.hpp"

#ifndef NLDECAY_CATALOG_DIR
#define NLDECAY_CATALOG_DIR "experiments"
#endif

namespace {

int report(const nldecay::RunSummary& s) {
    for (const auto& c : s.checks) std::cout << (c.passed ? "PASS " : "FAIL ") << s.name << ": " << c.name << '\n';
    for (const auto& a : s.artifacts) std::cout << "wrote " << a << '\n';
    return s.passed() ? 0 : 1;
}

template <class Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const nldecay::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decay estimates for nonlocal diffusion equations"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    unsigned threads = 1;
    auto common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", config_path, "experiment config (key = value)");
        if (config_required) opt->required();
        sub->add_option("--seed", seed, "override the config seed")->check(CLI::NonNegativeNumber);
        sub->add_option("--threads", threads, "worker threads for trial loops")->check(CLI::PositiveNumber);
        sub->add_option("--out", out_dir, "output directory (default: $NLDECAY_OUT or .)");
    };

    const std::vector<std::pair<std::string, std::string>> modes = {
        {"simulate", "run an evolution and compare with the decay envelopes"},
        {"verify-inequality", "randomized checks of the energy inequalities"},
        {"envelope", "rescaled-kernel runs against the epsilon-independent envelope"},
        {"dispersal", "heterogeneous dispersal: equilibrium and relative-entropy decay"},
    };
    for (const auto& [name, help] : modes) common(app.add_subcommand(name, help), true);

    auto* constants = app.add_subcommand("constants", "print the constant ledger as JSON");
    common(constants, false);
    int dim = 1;
    double p = 2.0, k = 0.0;
    constants->add_option("--dim", dim, "dimension when no config is given")->check(CLI::Range(1, 3));
    constants->add_option("--p", p, "exponent p >= 2")->check(CLI::Range(2.0, 1e6));
    constants->add_option("--k", k, "derivative order k >= 0")->check(CLI::NonNegativeNumber);

    auto* catalog = app.add_subcommand("catalog", "list or run the experiment catalog");
    std::string catalog_dir = NLDECAY_CATALOG_DIR;
    bool run_all = false;
    catalog->add_option("--dir", catalog_dir, "catalog directory");
    catalog->add_flag("--run", run_all, "run every entry");
    catalog->add_option("--seed", seed, "override every config seed")->check(CLI::NonNegativeNumber);
    catalog->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    catalog->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    nldecay::RunContext ctx;
    if (!out_dir.empty())
        ctx.out_dir = out_dir;
    else if (const char* env = std::getenv("NLDECAY_OUT"))
        ctx.out_dir = env;
    if (seed >= 0) ctx.seed = static_cast<std::uint64_t>(seed);
    ctx.threads = threads;

    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "catalog") {
        return guarded([&] {
            const auto entries = nldecay::catalog_entries(catalog_dir);
            if (!run_all) {
                for (const auto& e : entries) {
                    const auto cfg = nldecay::Config::load(e.string());
                    std::cout << e.stem().string() << '\t' << cfg.get_string("mode", "?") << '\n';
                }
                return 0;
            }
            int worst = 0;
            for (const auto& e : entries) {
                const int rc = guarded([&] {
                    const auto cfg = nldecay::Config::load(e.string());
                    return report(nldecay::run_config(cfg, cfg.get_string("mode", ""), ctx));
                });
                worst = std::max(worst, rc);
            }
            return worst;
        });
    }
    if (sub == "constants" && config_path.empty()) {
        return guarded([&] {
            std::ostringstream cfg_text;
            cfg_text << "grid.dim = " << dim << "\np_list = " << nldecay::format_double(p)
                     << "\nk_list = " << nldecay::format_double(k) << "\nname = constants\n";
            std::istringstream is(cfg_text.str());
            const auto cfg = nldecay::Config::parse(is, "<command line>");
            const auto s = nldecay::run_config(cfg, "constants", ctx);
            std::cout << s.info["ledgers"].dump(2) << '\n';
            return s.passed() ? 0 : 1;
        });
    }
    return guarded([&] {
        const auto cfg = nldecay::Config::load(config_path);
        return report(nldecay::run_config(cfg, sub, ctx));
    });
}
