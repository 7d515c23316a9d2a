#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "slime/cli.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string run_dir;
    std::string out_root;
};

void add_common_options(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "Config file (key = value with sections)");
    cmd->add_option("--set", args.overrides, "Override a config key, e.g. --set p=3.0")
        ->take_all();
    cmd->add_option("--run-dir", args.run_dir,
                    "Exact output directory (skips the timestamped layout)");
    cmd->add_option("--out-root", args.out_root,
                    "Output root for timestamped run directories");
}

slime::RunConfig build_config(const CommonArgs& args) {
    slime::RunConfig config = slime::default_run_config();
    if (!args.config_path.empty()) {
        slime::apply_config_file(config, args.config_path);
    }
    for (const std::string& kv : args.overrides) {
        slime::apply_override_kv(config, kv);
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SLIME preference optimization: training, gradient verification, "
                 "ablations, and objective comparisons on a toy policy"};
    app.require_subcommand(1);

    CommonArgs train_args;
    std::string train_objective;
    int train_synthetic = 0;
    std::string train_data;
    std::string train_seed;
    CLI::App* train_cmd = app.add_subcommand("train", "Run one alignment training job");
    add_common_options(train_cmd, train_args);
    train_cmd->add_option("--objective", train_objective, "slime, dpo, or simpo");
    train_cmd->add_option("--synthetic", train_synthetic,
                          "Use a synthetic corpus of this many pairs");
    train_cmd->add_option("--data", train_data, "Load pairs from this JSONL file");
    train_cmd->add_option("--seed", train_seed, "Master seed");

    CommonArgs gradcheck_args;
    double corrupt_analytic = 0.0;
    CLI::App* gradcheck_cmd =
        app.add_subcommand("gradcheck", "Verify analytic gradients against finite differences");
    add_common_options(gradcheck_cmd, gradcheck_args);
    gradcheck_cmd
        ->add_option("--corrupt-analytic", corrupt_analytic,
                     "Test hook: scale analytic values by (1 + x) to confirm the check trips")
        ->group("");

    CommonArgs ablate_args;
    CLI::App* ablate_cmd =
        app.add_subcommand("ablate", "Train every loss-component variant and exponent sweep");
    add_common_options(ablate_cmd, ablate_args);

    CommonArgs compare_args;
    CLI::App* compare_cmd =
        app.add_subcommand("compare", "Train slime/simpo/dpo from one shared snapshot");
    add_common_options(compare_cmd, compare_args);

    CommonArgs gen_args;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic corpus as JSONL");
    add_common_options(gen_cmd, gen_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) {
            if (!train_objective.empty()) {
                train_args.overrides.push_back("objective=" + train_objective);
            }
            if (train_synthetic > 0) {
                train_args.overrides.push_back("data_source=synthetic");
                train_args.overrides.push_back("n_pairs=" + std::to_string(train_synthetic));
            }
            if (!train_data.empty()) {
                train_args.overrides.push_back("data_source=jsonl");
                train_args.overrides.push_back("jsonl_path=" + train_data);
            }
            if (!train_seed.empty()) {
                train_args.overrides.push_back("seed=" + train_seed);
            }
            const slime::RunConfig config = build_config(train_args);
            const std::string run_dir = slime::make_run_directory(
                config, "train", train_args.run_dir, train_args.out_root);
            return slime::cmd_train(config, run_dir);
        }
        if (gradcheck_cmd->parsed()) {
            const slime::RunConfig config = build_config(gradcheck_args);
            const std::string run_dir = slime::make_run_directory(
                config, "gradcheck", gradcheck_args.run_dir, gradcheck_args.out_root);
            return slime::cmd_gradcheck(config, run_dir, corrupt_analytic);
        }
        if (ablate_cmd->parsed()) {
            const slime::RunConfig config = build_config(ablate_args);
            const std::string run_dir = slime::make_run_directory(
                config, "ablate", ablate_args.run_dir, ablate_args.out_root);
            return slime::cmd_ablate(config, run_dir);
        }
        if (compare_cmd->parsed()) {
            const slime::RunConfig config = build_config(compare_args);
            const std::string run_dir = slime::make_run_directory(
                config, "compare", compare_args.run_dir, compare_args.out_root);
            return slime::cmd_compare(config, run_dir);
        }
        if (gen_cmd->parsed()) {
            const slime::RunConfig config = build_config(gen_args);
            const std::string run_dir = slime::make_run_directory(
                config, "gen-data", gen_args.run_dir, gen_args.out_root);
            return slime::cmd_gen_data(config, run_dir);
        }
    } catch (const slime::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const slime::TrainingAbort& e) {
        std::cerr << "abort: " << e.what() << '\n' << e.diagnostic();
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
