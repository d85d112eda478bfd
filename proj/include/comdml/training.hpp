// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "comdml/dataset.hpp"
#include "comdml/profiler.hpp"
#include "comdml/scheduler.hpp"
#include "comdml/splitnet.hpp"

namespace comdml {

struct WeightedModel {
    const SplitNet* net = nullptr;
    double weight = 1.0;
};

struct AggregateResult {
    std::vector<DenseLayer> layers;           // weighted mean over all models
    std::map<int, DenseLayer> aux_by_split;   // per split m, mean over models with split_at == m
};

// Coordinate-wise weighted mean of main-layer parameters. Aux heads are
// averaged only across models sharing the same split_at; models with other
// splits keep their own heads (the caller applies aux_by_split selectively).
AggregateResult aggregate(std::span<const WeightedModel> models);

struct DriftEstimate {
    int round = 0;
    double distance = 0.0; // L1 distance of normalized histograms, in [0, 2]
    int bins = 0;
};

// Empirical distance between the prefix-output distribution at some round and
// a reference sample, via 1-D histograms over the shared range.
DriftEstimate drift_estimate(std::span<const double> outputs_r,
                             std::span<const double> outputs_ref, int bins);

enum class PlanSource { comdml, no_offload };

struct LrSchedule {
    double eta0 = 0.001;
    double decay_factor = 0.2;
    int plateau_rounds = 10;   // rounds without improvement before decaying
    double plateau_tol = 1e-4; // minimum loss improvement that resets the counter
};

struct TrainingOptions {
    PlanSource plan_source = PlanSource::comdml;
    int rounds = 50;
    int batch_size = 100;
    LrSchedule lr;
    bool uniform_average = false;     // equal aggregation weights instead of sample counts
    double improvement_threshold = 0.0;
    int drift_bins = 32;
    int drift_probe_samples = 256;
    std::uint64_t seed = 1;
};

struct RoundMetrics {
    int round = 0;
    double loss = 0.0;     // global training loss of the aggregated model
    double accuracy = 0.0; // global training accuracy
    double lr = 0.0;
    PairingPlan plan;
    std::vector<DriftEstimate> drifts; // one per split point, reference = final round
    double drift_mean = 0.0;
};

struct TrainingResult {
    double initial_loss = 0.0;
    double initial_accuracy = 0.0;
    std::vector<RoundMetrics> rounds;
};

// ModelSpec mirror of a SplitNet, used to drive the pairing scheduler from
// the toy network's actual shapes.
ModelSpec model_spec_for_net(const SplitNet& net, int batch_size);

// Full decentralized training loop: pair, local-loss split updates in
// parallel, reassemble, aggregate, evaluate. Agents and dataset partitions
// correspond by position. Reproducible for any worker count.
TrainingResult run_training(std::span<const AgentProfile> agents, const SplitNet& net_template,
                            const SyntheticDataset& data, const TrainingOptions& opts);

} // namespace comdml
