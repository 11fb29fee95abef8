#include "freespan/cli_commands.hpp"
#include "freespan/version.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    using namespace freespan;

    CLI::App app{"freespan: exposure-length change detection for free-span cable DAS data"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::string data_dir, model_dir, out_path, report_path;
    std::uint64_t seed = 0;
    bool seed_given = false;

    CLI::App* sim = app.add_subcommand("simulate", "Generate the synthetic trial grid");
    sim->add_option("--config", config_path, "Experiment config JSON")->required();
    sim->add_option("--out", out_path, "Output directory for .das/.json trial pairs")->required();
    sim->add_option("--seed", seed, "Override the grid seed")->each([&](const std::string&) {
        seed_given = true;
    });

    CLI::App* train = app.add_subcommand("train", "Train the feature extractor and section models");
    train->add_option("--config", config_path, "Experiment config JSON")->required();
    train->add_option("--data-dir", data_dir, "Directory of trial pairs")->required();
    train->add_option("--model-dir", model_dir, "Output directory for model files")->required();

    CLI::App* score = app.add_subcommand("score", "Score evaluation trials against section models");
    score->add_option("--config", config_path, "Experiment config JSON")->required();
    score->add_option("--model-dir", model_dir, "Directory holding pls.json and *.svm.json")->required();
    score->add_option("--data-dir", data_dir, "Directory of trial pairs")->required();
    score->add_option("--out", out_path, "Output directory for report.csv and summary.json")->required();

    CLI::App* evaluate = app.add_subcommand("evaluate", "Compute the evaluation metrics from a report");
    evaluate->add_option("--report", report_path, "Path to report.csv")->required();
    evaluate->add_option("--out", out_path, "Output path for the evaluation JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            cli::Config cfg = cli::load_config(config_path);
            if (seed_given) cfg.grid.seed = seed;
            cli::cmd_simulate(cfg, out_path, config_path);
        } else if (train->parsed()) {
            const cli::Config cfg = cli::load_config(config_path);
            cli::cmd_train(cfg, data_dir, model_dir, config_path);
        } else if (score->parsed()) {
            const cli::Config cfg = cli::load_config(config_path);
            cli::cmd_score(cfg, model_dir, data_dir, out_path, config_path);
        } else if (evaluate->parsed()) {
            cli::cmd_evaluate(report_path, out_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
