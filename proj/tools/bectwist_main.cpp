// Command-line entry point: one subcommand per run mode.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bectwist/orchestration/pipeline.hpp"

namespace {

enum Exit : int { ok = 0, internal = 1, invalid = 2, failed = 3 };

struct Args {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> workers;
    bool quiet = false;
};

void print_error(const std::string &code, const std::string &message,
                 const std::string &run_dir = {}) {
    bectwist::json e = {{"status", "error"}, {"error", {{"code", code}, {"message", message}}}};
    if (!run_dir.empty())
        e["error"]["run_dir"] = run_dir;
    std::cout << e.dump() << std::endl;
}

int run(bectwist::RunMode mode, const Args &args) {
    using namespace bectwist;
    ExperimentConfig cfg;
    try {
        json doc = load_json_file(args.config);
        for (const auto &o : args.overrides)
            apply_override(doc, o);
        doc["mode"] = std::string(to_string(mode));
        cfg = config_from_json(doc);
        if (args.seed)
            cfg.ensemble.master_seed = *args.seed;
        if (args.out_dir)
            cfg.output.dir = *args.out_dir;
        if (args.workers)
            cfg.output.workers = *args.workers;
        cfg.validate();
    } catch (const Error &e) {
        print_error(e.code(), e.what());
        return invalid;
    } catch (const std::exception &e) {
        print_error("config", e.what());
        return invalid;
    }

    RunOptions opt;
    if (!args.quiet)
        opt.log = [](const std::string &m) { std::cerr << "[bectwist] " << m << std::endl; };
    try {
        const auto r = run_experiment(cfg, opt);
        json out = {{"status", "ok"},
                    {"run_dir", r.manifest.run_dir},
                    {"config_hash", r.manifest.config_hash},
                    {"summary", r.summary}};
        std::cout << out.dump(2) << std::endl;
        return ok;
    } catch (const StageError &e) {
        print_error(e.code(), e.what(), e.run_dir());
        return failed;
    } catch (const ConfigError &e) {
        print_error(e.code(), e.what());
        return invalid;
    } catch (const Error &e) {
        print_error(e.code(), e.what());
        return failed;
    } catch (const std::exception &e) {
        print_error("internal", e.what());
        return internal;
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Two-component condensate squeezing simulations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", BECTWIST_VERSION);

    Args args;
    std::optional<bectwist::RunMode> chosen;
    const std::pair<const char *, const char *> commands[] = {
        {"groundstate", "Imaginary-time ground state"},
        {"gpe", "Mean-field echo sequence"},
        {"tw", "Truncated-Wigner ensemble and theta sweep"},
        {"twomode", "Two-mode analytic curves and optima"},
        {"lambda-est", "Effective squeezing parameter from chi overlaps and phase diffusion"},
        {"sweep", "Parameter sweep over independent sub-runs"},
    };
    for (const auto &[name, help] : commands) {
        auto *sub = app.add_subcommand(name, help);
        sub->add_option("--config", args.config, "JSON configuration file")->required();
        sub->add_option("--set", args.overrides, "Override key=value (dotted keys)")
            ->take_all()
            ->allow_extra_args(false);
        sub->add_option("--seed", args.seed, "Master seed of the trajectory streams");
        sub->add_option("--out-dir", args.out_dir, "Directory receiving run directories");
        sub->add_option("--workers", args.workers, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--quiet", args.quiet, "No progress output on stderr");
        sub->callback([&chosen, n = std::string(name)] {
            chosen = bectwist::run_mode_from_string(n);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        print_error("usage", e.what());
        return invalid;
    }
    return run(*chosen, args);
}
