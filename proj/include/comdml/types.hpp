// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <vector>

#include "comdml/errors.hpp"

namespace comdml {

using AgentId = int;

// Relative per-batch training-time fractions of the two sides of a split
// model, plus the intermediate activation volume crossing the split.
struct SplitProfile {
    int split_id = 0;          // m; slow side keeps layers 1..m
    double slow_frac = 1.0;    // prefix compute relative to the unsplit model (incl. aux head)
    double fast_frac = 1.0;    // suffix compute relative to the unsplit model
    double interm_bytes = 0.0; // activation bytes shipped per batch
};

// The auxiliary head may push slow_frac above the pure prefix fraction.
inline constexpr double kSlowFracCap = 1.5;

struct AgentProfile {
    AgentId id = 0;
    double proc_speed = 1.0;         // batches/s when training the full model
    int num_batches = 0;             // local batch count, drives timing
    long long dataset_size = 0;      // sample count, drives aggregation weights
    std::map<AgentId, double> links; // peer -> bytes/s; absent entry = disconnected

    bool connected_to(AgentId peer) const { return links.find(peer) != links.end(); }

    double link_to(AgentId peer) const {
        auto it = links.find(peer);
        if (it == links.end())
            throw MissingLink("no link from agent " + std::to_string(id) + " to agent " +
                              std::to_string(peer));
        return it->second;
    }
};

void validate(const AgentProfile& a);
void validate(const SplitProfile& sp);

struct PairAssignment {
    AgentId slow = 0; // offloading agent
    AgentId fast = 0; // helper
    int split_id = 0; // chosen m
};

// One round's offloading decisions; pairs and independents partition the
// agent set, and no agent both offloads and helps.
struct PairingPlan {
    std::vector<PairAssignment> pairs;
    std::vector<AgentId> independents;
};

struct AgentRoundTime {
    double compute_s = 0.0;
    double comm_s = 0.0;
    double idle_s = 0.0; // against the round barrier
    double total_s = 0.0;
};

struct RoundReport {
    std::map<AgentId, AgentRoundTime> per_agent;
    double makespan_s = 0.0;
};

} // namespace comdml
