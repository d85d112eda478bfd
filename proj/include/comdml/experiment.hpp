// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "comdml/config.hpp"

namespace comdml {

// Runs the configured simulation and/or learning experiment and writes
// timing.csv / pairs.csv / learning.csv into out_dir. Deterministic for a
// fixed (config, seed).
void run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

// Everything a learning run needs, realized from a config: timing profiles
// whose batch counts reflect the actual data partition, the linked topology,
// the seeded network template and the dataset.
struct TrainingSetup {
    std::vector<AgentProfile> agents;
    SplitNet net;
    SyntheticDataset data;
    TrainingOptions opts;
};

TrainingSetup build_training_setup(const ExperimentConfig& cfg);

struct OracleCheckReport {
    int instances = 0;
    double max_ratio = 0.0;
    double mean_ratio = 0.0;
};

// Generates random instances from the config's distributions, solves each
// with the greedy scheduler and the exact oracle, and writes oracle.csv.
OracleCheckReport run_oracle_check(const ExperimentConfig& cfg, int instances,
                                   const std::string& out_dir);

// Writes splits.csv for the configured model.
void run_profile_dump(const ExperimentConfig& cfg, const std::string& out_dir);

} // namespace comdml
