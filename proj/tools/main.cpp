// Command-line front end: optimize, benchmark, screen, sweep.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "optimice/cli.hpp"

int main(int argc, char** argv)
{
    using namespace optimice;

    CLI::App app{"Batch Bayesian optimization with MICE, Morris screening and emulator sweeps"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string model_path;

    auto add_common = [&](CLI::App* cmd, bool config_required) {
        auto* opt = cmd->add_option("--config", config_path, "key = value run configuration");
        if (config_required)
            opt->required();
        cmd->add_option("--out", out_dir, "output directory (overrides output_dir)");
        cmd->add_option("--seed", seed, "master seed (overrides seed)");
    };
    auto* optimize = app.add_subcommand("optimize", "run the optimizer once");
    auto* benchmark = app.add_subcommand("benchmark", "repeat each scheme over seeded trials");
    auto* screen = app.add_subcommand("screen", "Morris elementary-effects screening");
    auto* sweep = app.add_subcommand("sweep", "one-at-a-time sweeps on a saved emulator");
    add_common(optimize, true);
    add_common(benchmark, true);
    add_common(screen, true);
    add_common(sweep, false);
    sweep->add_option("--model", model_path, "model file written by optimize")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    return guarded(
        [&] {
            RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
            if (seed)
                config.optimizer.seed = *seed;
            const std::filesystem::path out = out_dir.empty() ? config.output_dir : std::filesystem::path(out_dir);
            if (optimize->parsed())
                cmd_optimize(config, out, std::cout);
            else if (benchmark->parsed())
                cmd_benchmark(config, out, std::cout);
            else if (screen->parsed())
                cmd_screen(config, out, std::cout);
            else
                cmd_sweep(model_path, config, out, std::cout);
        },
        std::cerr);
}
