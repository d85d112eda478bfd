// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <span>
#include <vector>

#include "comdml/types.hpp"

namespace comdml {

using SplitTable = std::map<AgentId, std::vector<SplitProfile>>;

// Time to finish the local task without offloading.
double individual_time(const AgentProfile& a);

// Shared arithmetic between the scheduler estimate and the simulated pair
// times. Both callers must go through these helpers so the two paths produce
// identical doubles.
inline double split_slow_time(double num_batches, double p_slow, double slow_frac) {
    return num_batches / (p_slow / slow_frac);
}

inline double split_comm_time(double num_batches, double interm_bytes, double bandwidth) {
    return num_batches * interm_bytes / bandwidth;
}

inline double split_fast_chain(double num_batches, double p_fast, double fast_frac,
                               double helper_busy_s, double interm_bytes, double bandwidth) {
    return helper_busy_s + split_comm_time(num_batches, interm_bytes, bandwidth) +
           num_batches / (p_fast / fast_frac);
}

struct PairTimes {
    double slow_total = 0.0; // offloader busy time (prefix compute only)
    double fast_total = 0.0; // helper busy time: own task + transfer + offloaded suffix
    double comm_s = 0.0;     // transfer component inside fast_total
};

// Busy times of an offloading pair. Communication is attributed to the
// helper's timeline, overlapping the offloader's prefix compute.
PairTimes pair_time(const AgentProfile& slow, const AgentProfile& fast, const SplitProfile& sp,
                    double fast_own_time);

// Evaluates a full plan. extra_pair_comm_bytes charges optional one-time
// per-pair transfer bytes (keyed by slow agent id) to the helper's link.
RoundReport plan_makespan(std::span<const AgentProfile> agents, const PairingPlan& plan,
                          const SplitTable& profiles,
                          const std::map<AgentId, double>& extra_pair_comm_bytes = {});

} // namespace comdml
