// she <experiment> --config FILE [--seed N] [--reps N] [--out DIR]
//     [--format csv|json|both] [--parallelism N|auto]

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "she/app.hpp"

int main(int argc, char** argv) {
    CLI::App cli{"Monte-Carlo experiments for the stochastic heat equation"};
    std::string experiment;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> reps;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<std::string> parallelism;
    bool print_config = false;
    bool check_only = false;

    cli.add_option("experiment", experiment,
                   "simulate | tails | moments | suscept | independence | trichotomy | bounds | kernel-audit")
        ->required();
    cli.add_option("--config", config_path, "YAML config; flags override its values")->check(CLI::ExistingFile);
    cli.add_option("--seed", seed, "Master seed");
    cli.add_option("--reps", reps, "Replicas per ensemble");
    cli.add_option("--out", out, "Output directory");
    cli.add_option("--format", format, "csv | json | both")->check(CLI::IsMember({"csv", "json", "both"}));
    cli.add_option("--parallelism", parallelism, "Worker threads, or auto");
    cli.add_flag("--print-config", print_config, "Print the effective config and exit");
    cli.add_flag("--validate", check_only, "Validate the effective config and exit");
    CLI11_PARSE(cli, argc, argv);

    she::ExperimentConfig cfg;
    try {
        if (!config_path.empty()) {
            cfg = she::load_config(config_path);
        }
        cfg.experiment = she::parse_experiment(experiment);
        if (seed) {
            cfg.seed = *seed;
        }
        if (reps) {
            cfg.n_reps = *reps;
        }
        if (out) {
            cfg.output_dir = *out;
        }
        if (format) {
            cfg.format = she::parse_format(*format);
        }
        if (parallelism) {
            if (*parallelism == "auto") {
                cfg.parallelism = 0;
            } else {
                std::size_t used = 0;
                cfg.parallelism = std::stoi(*parallelism, &used);
                if (used != parallelism->size() || cfg.parallelism < 1) {
                    throw she::ConfigError("--parallelism: expected a positive integer or auto");
                }
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(she::ExitCode::config);
    }

    if (print_config) {
        std::cout << she::serialize_config(cfg);
        return 0;
    }
    if (check_only) {
        const auto v = she::validate(cfg);
        for (const auto& msg : v) {
            std::cerr << "config: " << msg << "\n";
        }
        return static_cast<int>(v.empty() ? she::ExitCode::ok : she::ExitCode::config);
    }

    const auto report = she::run(cfg);
    std::cerr << report.message;
    for (const auto& f : report.files) {
        std::cout << f.string() << "\n";
    }
    return static_cast<int>(report.code);
}
