// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"NeuroKalman: recursive Bayesian navigation filter, trainer, and drift lab"};
    app.require_subcommand(1);

    nk::cli::CommonArgs common;
    std::string checkpoint, split, experiment;
    std::vector<std::string> checkpoints;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        sub->add_option("-c,--config", common.config_path, "Run configuration file")
            ->required(config_required);
        sub->add_option("-o,--out", common.out_dir, "Output directory");
        sub->add_option("-s,--seed", common.seed, "Seed override");
        sub->add_option("--set", common.overrides, "Config override (section.key=value)");
    };

    CLI::App* train = app.add_subcommand("train", "Train a model and write a checkpoint");
    add_common(train, true);

    CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on generated worlds");
    add_common(eval, true);
    eval->add_option("-k,--checkpoint", checkpoint, "Checkpoint to evaluate")->required();
    eval->add_option("--split", split, "easy | hard | full");

    CLI::App* lab = app.add_subcommand("lab", "Drift / contraction / ablation experiments");
    add_common(lab, true);
    lab->add_option("-e,--experiment", experiment,
                    "drift | contraction | ablate-gain | ablate-memory | ablate-aux")
        ->required();
    lab->add_option("-k,--checkpoint", checkpoints, "Checkpoint(s) for drift/contraction");

    CLI::App* verify = app.add_subcommand("verify", "Run the numerical property suites");
    (void)verify;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : nk::cli::kExitUsage;
    }

    if (train->parsed()) return nk::cli::cmd_train(common);
    if (eval->parsed()) return nk::cli::cmd_eval(common, checkpoint, split);
    if (lab->parsed()) return nk::cli::cmd_lab(common, experiment, checkpoints);
    return nk::cli::cmd_verify();
}
