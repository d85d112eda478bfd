// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "comdml/dataset.hpp"
#include "comdml/profiler.hpp"
#include "comdml/simulator.hpp"
#include "comdml/training.hpp"

namespace comdml {

// 1 relative CPU = this many batches/s of the full model.
inline constexpr double kBatchesPerSecondPerCpu = 10.0;
// Decimal megabits: 1 Mbps = 125,000 bytes/s.
inline constexpr double kBytesPerSecondPerMbps = 125e3;

struct AgentsConfig {
    int count = 10;
    std::vector<double> speeds_cpu{4.0, 2.0, 1.0, 0.5, 0.2}; // relative CPUs
    std::string assignment = "tiles"; // "tiles" cycles the speed set; "random" draws per agent
    int num_batches = 50;
    int batch_size = 100;
};

struct TopologyConfig {
    std::string kind = "full"; // full | random | ring
    double edge_prob = 0.2;
    std::optional<std::uint64_t> seed;              // defaults to a stream of the master seed
    std::string bandwidth_assignment = "edge";      // "edge" or "agent" (one class per agent)
    std::vector<double> bandwidths_mbps{10.0, 20.0, 50.0, 100.0};
    std::vector<double> bandwidth_weights;          // optional, parallel to bandwidths_mbps
};

struct ChurnConfig {
    double fraction = 0.2;
    int period_rounds = 100;
    std::optional<std::uint64_t> seed;
};

struct AggregationConfig {
    std::string algorithm = "halving_doubling"; // or "ring"
    double latency_s = 0.0;
    std::optional<double> model_bytes; // defaults to the model's total parameter bytes
};

struct FlagsConfig {
    bool partial_model_transfer = false;
    bool uniform_average = false;
    double improvement_threshold = 0.0;
    bool count_label_bytes = false; // add label bytes to the per-batch transfer volume
};

struct LearningDataConfig {
    int classes = 2;
    int dim = 16;
    int samples = 4000;
    double mean_scale = 2.0;
    double sigma = 1.0;
    double label_skew = 0.0;
};

struct LearningConfig {
    LearningDataConfig data;
    std::vector<int> hidden_widths{16, 32, 32, 16};
    int rounds = 50;
    double lr = 0.001;
    double decay_factor = 0.2;
    int plateau_rounds = 10;
    double plateau_tol = 1e-4;
    int drift_bins = 32;
    int drift_probe_samples = 256;
};

struct ExperimentConfig {
    AgentsConfig agents;
    std::string model_preset = "resnet56-like"; // or "custom" with model_layers
    std::vector<LayerSpec> model_layers;
    double model_aux_cost_frac = 0.0;
    int model_aux_out_classes = 10;
    TopologyConfig topology;
    std::optional<ChurnConfig> churn;
    AggregationConfig aggregation;
    int rounds = 10;
    double sample_rate = 1.0;
    std::uint64_t seed = 1;
    std::string mode = "timing"; // timing | learning | both
    FlagsConfig flags;
    LearningConfig learning;
    std::vector<std::string> compare; // methods for timing mode; empty = {"comdml"}
};

ExperimentConfig default_config();

// Parses and validates a config file. Unknown keys are errors.
ExperimentConfig load_config(const std::string& path);

void validate_config(const ExperimentConfig& cfg);

// Builders realizing a config into simulator/learning inputs.
std::vector<AgentProfile> build_agents(const ExperimentConfig& cfg);
ModelSpec build_model(const ExperimentConfig& cfg);
Topology build_topology(const ExperimentConfig& cfg);
ChurnPolicy build_churn(const ExperimentConfig& cfg);
AllReduceModel build_aggregation(const ExperimentConfig& cfg, const ModelSpec& model);
MixtureSpec build_mixture(const ExperimentConfig& cfg);

} // namespace comdml
