// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "comdml/profiler.hpp"
#include "comdml/time_model.hpp"

namespace comdml {

enum class TopologyKind { full, random_p, ring };

// per_edge draws a speed per link; per_agent gives each agent one
// communication class and links run at the slower endpoint's class.
enum class BandwidthAssignment { per_edge, per_agent };

struct Topology {
    TopologyKind kind = TopologyKind::full;
    double edge_prob = 0.2; // random_p only
    std::uint64_t seed = 0;
    BandwidthAssignment assignment = BandwidthAssignment::per_edge;
    // Candidate link speeds (bytes/s) with selection weights.
    std::vector<std::pair<double, double>> bandwidths{
        {1.25e6, 1.0}, {2.5e6, 1.0}, {6.25e6, 1.0}, {1.25e7, 1.0}};
};

struct ChurnPolicy {
    double fraction = 0.0; // share of agents re-profiled per churn event
    int period_rounds = 100;
    std::uint64_t seed = 0;
    // Speeds (batches/s) profiles are redrawn from; link speeds are redrawn
    // from the topology's bandwidth set.
    std::vector<double> speed_pool{40.0, 20.0, 10.0, 5.0, 2.0};
};

enum class AllReduceAlgo { halving_doubling, ring };

struct AllReduceModel {
    AllReduceAlgo algorithm = AllReduceAlgo::halving_doubling;
    double latency_s = 0.0;  // per-step latency
    double model_bytes = 1.0;
};

int allreduce_steps(AllReduceAlgo algo, int k);
double allreduce_volume_per_agent(double model_bytes, int k); // bytes sent+received per agent
double allreduce_cost(const AllReduceModel& m, int k, double min_bandwidth);

struct PairRecord {
    AgentId slow = 0;
    AgentId fast = 0;
    int split_id = 0;
    double est_s = 0.0; // scheduler estimate
    double sim_s = 0.0; // simulated pair completion, max of the two busy times
};

struct SimRound {
    RoundReport report;
    double aggregation_s = 0.0;
    double cumulative_s = 0.0; // cumulative time after this round
    std::vector<PairRecord> pairs;
    std::vector<AgentId> participants;
    std::vector<AgentId> excluded;      // sampled but dropped for lack of connectivity
    std::vector<AgentId> churned;       // agents re-profiled at the start of this round
    std::vector<AgentProfile> profiles; // snapshot, filled when record_profiles is set
};

struct SimResult {
    std::string method;
    std::vector<SimRound> rounds;
    double cumulative_time_s = 0.0;
};

struct SimOptions {
    bool partial_model_transfer = false; // charge the one-time suffix transfer per pair
    double improvement_threshold = 0.0;
    bool record_profiles = false;
};

// Generates undirected links (symmetric bandwidths) onto the agents.
void apply_topology(std::vector<AgentProfile>& agents, const Topology& topo);

// Round-based simulation of the pairing workflow: sample participants, pair,
// evaluate the plan, add the collective-aggregation cost, churn profiles on
// schedule. Fully deterministic in (inputs, seed).
SimResult run_comdml(std::vector<AgentProfile> agents, const ModelSpec& model,
                     const Topology& topo, const ChurnPolicy& churn,
                     const AllReduceModel& aggregation, int rounds, double sample_rate,
                     std::uint64_t seed, const SimOptions& opts = {});

// Baseline timing models: fedavg, braintorrent, gossip, allreduce_no_offload.
// All agents participate every round. Pass a churn policy to subject the
// baseline to the same profile dynamics as the pairing run.
SimResult run_baseline(const std::string& name, std::vector<AgentProfile> agents,
                       const Topology& topo, const AllReduceModel& aggregation, int rounds,
                       std::uint64_t seed, const ChurnPolicy& churn = {},
                       const SimOptions& opts = {});

} // namespace comdml
