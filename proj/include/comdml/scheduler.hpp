// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "comdml/time_model.hpp"

namespace comdml {

struct SplitEstimate {
    int split_id = 0;
    double est_s = 0.0;
};

struct EstimateResult {
    double est_time_s = 0.0; // min over per_split
    int best_split = 0;      // attains est_time_s; ties toward smaller m
    std::vector<SplitEstimate> per_split;
};

// Estimated round time of agent i if it offloads to helper j, per split:
// max(prefix compute on i, j's own time + transfer + suffix compute on j).
EstimateResult agent_training_time(const AgentProfile& i, const AgentProfile& j,
                                   double tau_hat_j, double c_ij,
                                   std::span<const SplitProfile> splits);

// The helper-side time a candidate broadcasts: its individual training time.
double fast_agent_time_estimate(const AgentProfile& j);

struct GreedyOptions {
    // Pair only when the estimate beats the offloader's individual time by
    // more than this many seconds.
    double improvement_threshold = 0.0;
    // Optional trace of the order agents were processed in; for tests.
    std::vector<AgentId>* processing_order = nullptr;
};

// Greedy pairing: agents in descending individual-time order each pick the
// connected, strictly-faster, still-unpaired helper minimizing the estimate,
// pairing only on strict improvement. Deterministic: ties break toward the
// lower agent id, then the smaller split index.
PairingPlan greedy_pair(std::span<const AgentProfile> agents, const SplitTable& splits,
                        const GreedyOptions& opts = {});

} // namespace comdml
