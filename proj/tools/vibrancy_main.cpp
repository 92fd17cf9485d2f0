#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vibrancy/pipeline.hpp"

namespace {

using vibrancy::pipeline::RunConfig;

struct CliOverrides {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
    std::optional<double> caliper;
    std::optional<int> jobs;
};

RunConfig load_config(const CliOverrides& cli) {
    RunConfig config;
    if (!cli.config_path.empty()) config = RunConfig::from_json_file(cli.config_path);
    if (cli.out_dir) config.out_dir = *cli.out_dir;
    if (cli.seed) {
        config.seed = *cli.seed;
        if (config.synth_config) config.synth_config->seed = *cli.seed;
    }
    if (cli.alpha) config.alpha = *cli.alpha;
    if (cli.caliper) config.caliper = *cli.caliper;
    if (cli.jobs) config.jobs = *cli.jobs;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neighborhood vibrancy and crime analysis pipeline"};
    app.require_subcommand(1);

    CliOverrides cli;
    app.add_option("--config", cli.config_path, "JSON run configuration");
    app.add_option("--out", cli.out_dir, "Output directory (overrides config)");
    app.add_option("--seed", cli.seed, "Run seed (overrides config)");
    app.add_option("--alpha", cli.alpha, "Trend significance level (overrides config)");
    app.add_option("--caliper", cli.caliper, "Matching caliper in propensity SD units");
    app.add_option("--jobs", cli.jobs, "Worker threads for independent models/experiments");

    const std::map<std::string, std::pair<const char*, std::function<void(const RunConfig&)>>>
        commands = {
            {"synth", {"Generate a synthetic input bundle", vibrancy::pipeline::cmd_synth}},
            {"ingest", {"Parse inputs and assign events to block groups",
                        vibrancy::pipeline::cmd_ingest}},
            {"measures", {"Build vibrancy/crime measures and series",
                          vibrancy::pipeline::cmd_measures}},
            {"trends", {"Classify per-neighborhood yearly trends", vibrancy::pipeline::cmd_trends}},
            {"regress", {"Fit the regression model suite", vibrancy::pipeline::cmd_regress}},
            {"match", {"Run the propensity-score matching experiments",
                       vibrancy::pipeline::cmd_match}},
            {"report", {"Bundle plot data and enriched GeoJSON", vibrancy::pipeline::cmd_report}},
            {"all", {"Run the full pipeline", vibrancy::pipeline::cmd_all}},
        };

    std::string chosen;
    for (const auto& [name, entry] : commands) {
        CLI::App* sub = app.add_subcommand(name, entry.first);
        sub->fallthrough();  // global flags may follow the subcommand
        sub->callback([&chosen, name = name] { chosen = name; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig config = load_config(cli);
        commands.at(chosen).second(config);
    } catch (const vibrancy::pipeline::MissingFile& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
