// SPDX-License-Identifier: Apache-2.0

#include "comdml/time_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace comdml {

void validate(const AgentProfile& a) {
    if (!(a.proc_speed > 0.0))
        throw Error("agent " + std::to_string(a.id) + ": proc_speed must be > 0");
    if (a.num_batches < 0)
        throw Error("agent " + std::to_string(a.id) + ": num_batches must be >= 0");
    if (a.dataset_size < 0)
        throw Error("agent " + std::to_string(a.id) + ": dataset_size must be >= 0");
    for (const auto& [peer, bw] : a.links) {
        if (peer == a.id)
            throw Error("agent " + std::to_string(a.id) + ": self-link not allowed");
        if (!(bw > 0.0))
            throw Error("agent " + std::to_string(a.id) +
                        ": non-positive bandwidth to agent " + std::to_string(peer) +
                        " (disconnection is an absent entry, never zero)");
    }
}

void validate(const SplitProfile& sp) {
    if (!(sp.slow_frac > 0.0) || sp.slow_frac > kSlowFracCap)
        throw Error("split " + std::to_string(sp.split_id) + ": slow_frac out of (0, " +
                    std::to_string(kSlowFracCap) + "]");
    if (!(sp.fast_frac > 0.0) || sp.fast_frac > 1.0)
        throw Error("split " + std::to_string(sp.split_id) + ": fast_frac out of (0, 1]");
    if (sp.interm_bytes < 0.0)
        throw Error("split " + std::to_string(sp.split_id) + ": interm_bytes must be >= 0");
}

double individual_time(const AgentProfile& a) {
    return static_cast<double>(a.num_batches) / a.proc_speed;
}

PairTimes pair_time(const AgentProfile& slow, const AgentProfile& fast, const SplitProfile& sp,
                    double fast_own_time) {
    const double bw = slow.link_to(fast.id);
    const double n = static_cast<double>(slow.num_batches);
    PairTimes t;
    t.slow_total = split_slow_time(n, slow.proc_speed, sp.slow_frac);
    t.comm_s = split_comm_time(n, sp.interm_bytes, bw);
    t.fast_total = split_fast_chain(n, fast.proc_speed, sp.fast_frac, fast_own_time,
                                    sp.interm_bytes, bw);
    return t;
}

namespace {

const SplitProfile& find_split(const SplitTable& profiles, AgentId agent, int split_id) {
    auto it = profiles.find(agent);
    if (it == profiles.end())
        throw InvalidPlan("no split profiles for agent " + std::to_string(agent));
    for (const auto& sp : it->second)
        if (sp.split_id == split_id) return sp;
    throw InvalidPlan("split " + std::to_string(split_id) + " not in agent " +
                      std::to_string(agent) + "'s profile list");
}

} // namespace

RoundReport plan_makespan(std::span<const AgentProfile> agents, const PairingPlan& plan,
                          const SplitTable& profiles,
                          const std::map<AgentId, double>& extra_pair_comm_bytes) {
    std::map<AgentId, const AgentProfile*> by_id;
    for (const auto& a : agents) {
        validate(a);
        if (!by_id.emplace(a.id, &a).second)
            throw InvalidPlan("duplicate agent id " + std::to_string(a.id));
    }

    // Plan invariants: exact partition, no dual roles.
    std::set<AgentId> seen;
    std::set<AgentId> slows, fasts;
    auto touch = [&](AgentId id) {
        if (by_id.find(id) == by_id.end())
            throw InvalidPlan("plan references unknown agent " + std::to_string(id));
        if (!seen.insert(id).second)
            throw InvalidPlan("agent " + std::to_string(id) + " appears twice in the plan");
    };
    for (const auto& p : plan.pairs) {
        touch(p.slow);
        touch(p.fast);
        slows.insert(p.slow);
        fasts.insert(p.fast);
    }
    for (AgentId id : plan.independents) touch(id);
    if (seen.size() != agents.size())
        throw InvalidPlan("plan does not cover the agent set");
    for (AgentId s : slows)
        if (fasts.count(s))
            throw InvalidPlan("agent " + std::to_string(s) + " is both slow and fast");

    RoundReport report;
    for (AgentId id : plan.independents) {
        const AgentProfile& a = *by_id.at(id);
        AgentRoundTime t;
        t.compute_s = individual_time(a);
        t.total_s = t.compute_s;
        report.per_agent[id] = t;
    }
    for (const auto& p : plan.pairs) {
        const AgentProfile& slow = *by_id.at(p.slow);
        const AgentProfile& fast = *by_id.at(p.fast);
        const SplitProfile& sp = find_split(profiles, p.slow, p.split_id);
        const double fast_own = individual_time(fast);
        PairTimes t = pair_time(slow, fast, sp, fast_own);

        double extra_comm = 0.0;
        auto it = extra_pair_comm_bytes.find(p.slow);
        if (it != extra_pair_comm_bytes.end() && it->second > 0.0)
            extra_comm = it->second / slow.link_to(fast.id);

        AgentRoundTime st;
        st.compute_s = t.slow_total;
        st.total_s = t.slow_total;
        report.per_agent[p.slow] = st;

        AgentRoundTime ft;
        ft.comm_s = t.comm_s + extra_comm;
        ft.compute_s = t.fast_total - t.comm_s; // own task + offloaded suffix
        ft.total_s = t.fast_total + extra_comm;
        report.per_agent[p.fast] = ft;
    }

    double makespan = 0.0;
    for (const auto& [id, t] : report.per_agent) makespan = std::max(makespan, t.total_s);
    report.makespan_s = makespan;
    for (auto& [id, t] : report.per_agent) t.idle_s = makespan - t.total_s;
    return report;
}

} // namespace comdml
