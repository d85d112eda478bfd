// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "comdml/time_model.hpp"

namespace comdml {

inline constexpr int kOracleMaxAgents = 10;

struct OracleResult {
    PairingPlan best_plan;
    double best_makespan_s = 0.0;
    unsigned long long plans_examined = 0;
};

// Exhaustive minimum-makespan search over all 1-to-1 directed matchings
// (pairs respect connectivity and the faster-helper restriction) and all
// split choices per pair. Ties break toward fewer pairs, then the
// lexicographically smallest plan. Throws TooLarge above kOracleMaxAgents.
// The default entry point evaluates top-level branches in parallel; the
// serial variant is the reference implementation used for testing.
OracleResult solve_exact(std::span<const AgentProfile> agents, const SplitTable& splits);
OracleResult solve_exact_serial(std::span<const AgentProfile> agents, const SplitTable& splits);

} // namespace comdml
