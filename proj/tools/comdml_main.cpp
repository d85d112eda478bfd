// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "comdml/experiment.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Experiment config file (JSON)");
    cmd->add_option("--out", args.out_dir, "Output directory for CSV artifacts");
    cmd->add_option("--seed", args.seed, "Master seed override")
        ->each([&args](const std::string&) { args.seed_set = true; });
}

comdml::ExperimentConfig make_config(const CommonArgs& args) {
    comdml::ExperimentConfig cfg = args.config_path.empty()
                                       ? comdml::default_config()
                                       : comdml::load_config(args.config_path);
    if (args.seed_set) cfg.seed = args.seed;
    return cfg;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string item = csv.substr(pos, comma == std::string::npos ? std::string::npos
                                                                            : comma - pos);
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized training workload balancing simulator"};
    app.require_subcommand(1);

    CommonArgs run_args;
    std::string mode;
    std::string compare_csv;
    int rounds = -1;
    int agents = -1;
    CLI::App* run_cmd = app.add_subcommand("run", "Run a timing and/or learning experiment");
    add_common(run_cmd, run_args);
    run_cmd->add_option("--mode", mode, "timing | learning | both");
    run_cmd->add_option("--compare", compare_csv, "Comma-separated methods for timing mode");
    run_cmd->add_option("--rounds", rounds, "Simulated rounds override");
    run_cmd->add_option("--agents", agents, "Agent count override");

    CommonArgs oracle_args;
    int instances = 100;
    CLI::App* oracle_cmd =
        app.add_subcommand("oracle", "Compare the greedy scheduler against the exact solver");
    add_common(oracle_cmd, oracle_args);
    oracle_cmd->add_option("--instances", instances, "Number of random instances");
    oracle_cmd->add_option("--agents", agents, "Agent count override");

    CommonArgs profile_args;
    CLI::App* profile_cmd =
        app.add_subcommand("profile", "Dump split profiles for the configured model");
    add_common(profile_cmd, profile_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (run_cmd->parsed()) {
            comdml::ExperimentConfig cfg = make_config(run_args);
            if (!mode.empty()) cfg.mode = mode;
            if (!compare_csv.empty()) cfg.compare = split_list(compare_csv);
            if (rounds >= 0) cfg.rounds = rounds;
            if (agents >= 0) cfg.agents.count = agents;
            comdml::validate_config(cfg);
            comdml::run_experiment(cfg, run_args.out_dir);
            std::printf("wrote CSV artifacts to %s\n", run_args.out_dir.c_str());
        } else if (oracle_cmd->parsed()) {
            comdml::ExperimentConfig cfg = make_config(oracle_args);
            if (agents >= 0) cfg.agents.count = agents;
            comdml::validate_config(cfg);
            const auto report = comdml::run_oracle_check(cfg, instances, oracle_args.out_dir);
            std::printf("instances=%d max_ratio=%.9g mean_ratio=%.9g\n", report.instances,
                        report.max_ratio, report.mean_ratio);
        } else if (profile_cmd->parsed()) {
            comdml::ExperimentConfig cfg = make_config(profile_args);
            comdml::run_profile_dump(cfg, profile_args.out_dir);
            std::printf("wrote %s/splits.csv\n", profile_args.out_dir.c_str());
        }
    } catch (const comdml::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
