// SPDX-License-Identifier: Apache-2.0

#include "comdml/scheduler.hpp"

#include <algorithm>
#include <limits>

namespace comdml {

EstimateResult agent_training_time(const AgentProfile& i, const AgentProfile& j,
                                   double tau_hat_j, double c_ij,
                                   std::span<const SplitProfile> splits) {
    if (splits.empty()) throw NoSplits("agent_training_time: empty split list");

    const double n = static_cast<double>(i.num_batches);
    EstimateResult res;
    res.per_split.reserve(splits.size());
    res.est_time_s = std::numeric_limits<double>::infinity();
    for (const auto& sp : splits) {
        const double slow_chain = split_slow_time(n, i.proc_speed, sp.slow_frac);
        const double fast_chain =
            split_fast_chain(n, j.proc_speed, sp.fast_frac, tau_hat_j, sp.interm_bytes, c_ij);
        const double est = std::max(slow_chain, fast_chain);
        res.per_split.push_back({sp.split_id, est});
        if (est < res.est_time_s) { // strict: ties stay with the smaller m
            res.est_time_s = est;
            res.best_split = sp.split_id;
        }
    }
    return res;
}

double fast_agent_time_estimate(const AgentProfile& j) { return individual_time(j); }

PairingPlan greedy_pair(std::span<const AgentProfile> agents, const SplitTable& splits,
                        const GreedyOptions& opts) {
    // Processing order: descending individual time, ties toward lower id.
    std::vector<const AgentProfile*> order;
    order.reserve(agents.size());
    for (const auto& a : agents) order.push_back(&a);
    std::sort(order.begin(), order.end(), [](const AgentProfile* a, const AgentProfile* b) {
        const double ta = individual_time(*a);
        const double tb = individual_time(*b);
        if (ta != tb) return ta > tb;
        return a->id < b->id;
    });

    std::map<AgentId, bool> paired;
    for (const auto& a : agents)
        if (!paired.emplace(a.id, false).second)
            throw Error("duplicate agent id " + std::to_string(a.id));

    PairingPlan plan;
    for (const AgentProfile* ip : order) {
        const AgentProfile& i = *ip;
        if (paired[i.id]) continue;
        if (opts.processing_order) opts.processing_order->push_back(i.id);
        paired[i.id] = true;

        const double tau_i = individual_time(i);
        auto split_it = splits.find(i.id);

        const AgentProfile* best_j = nullptr;
        EstimateResult best_est;
        if (split_it != splits.end() && !split_it->second.empty()) {
            for (const AgentProfile* jp : order) {
                const AgentProfile& j = *jp;
                if (paired[j.id] || !i.connected_to(j.id)) continue;
                if (!(individual_time(j) < tau_i)) continue; // helpers are strictly faster
                EstimateResult est = agent_training_time(
                    i, j, fast_agent_time_estimate(j), i.link_to(j.id), split_it->second);
                if (!best_j || est.est_time_s < best_est.est_time_s ||
                    (est.est_time_s == best_est.est_time_s && j.id < best_j->id)) {
                    best_j = &j;
                    best_est = est;
                }
            }
        }

        if (best_j && tau_i - best_est.est_time_s > opts.improvement_threshold) {
            plan.pairs.push_back({i.id, best_j->id, best_est.best_split});
            paired[best_j->id] = true;
        } else {
            plan.independents.push_back(i.id);
        }
    }
    return plan;
}

} // namespace comdml
