// SPDX-License-Identifier: Apache-2.0

#include "comdml/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "comdml/rng.hpp"
#include "comdml/scheduler.hpp"

namespace comdml {

int allreduce_steps(AllReduceAlgo algo, int k) {
    if (k < 2) throw BadK("allreduce needs at least 2 participants, got " + std::to_string(k));
    if (algo == AllReduceAlgo::ring) return 2 * (k - 1);
    int steps = 0;
    int span = 1;
    while (span < k) { // ceil(log2 k)
        span *= 2;
        ++steps;
    }
    return 2 * steps;
}

double allreduce_volume_per_agent(double model_bytes, int k) {
    if (k < 2) throw BadK("allreduce needs at least 2 participants, got " + std::to_string(k));
    return 2.0 * model_bytes * (k - 1) / k;
}

double allreduce_cost(const AllReduceModel& m, int k, double min_bandwidth) {
    if (!(m.model_bytes > 0.0)) throw Error("allreduce model_bytes must be > 0");
    if (m.latency_s < 0.0) throw Error("allreduce latency must be >= 0");
    if (!(min_bandwidth > 0.0)) throw Error("allreduce bandwidth must be > 0");
    const int steps = allreduce_steps(m.algorithm, k);
    const double volume = allreduce_volume_per_agent(m.model_bytes, k);
    return steps * m.latency_s + volume / min_bandwidth;
}

namespace {

double weighted_pick(rng::Engine& g, const std::vector<std::pair<double, double>>& choices) {
    double total = 0.0;
    for (const auto& [v, w] : choices) total += w;
    double u = rng::uniform01(g) * total;
    for (const auto& [v, w] : choices) {
        u -= w;
        if (u < 0.0) return v;
    }
    return choices.back().first;
}

std::vector<std::pair<int, int>> topology_edges(int k, const Topology& topo, rng::Engine& g) {
    std::vector<std::pair<int, int>> edges;
    switch (topo.kind) {
    case TopologyKind::full:
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) edges.emplace_back(i, j);
        break;
    case TopologyKind::ring:
        for (int i = 0; i + 1 < k; ++i) edges.emplace_back(i, i + 1);
        if (k > 2) edges.emplace_back(0, k - 1);
        break;
    case TopologyKind::random_p:
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j)
                if (rng::uniform01(g) < topo.edge_prob) edges.emplace_back(i, j);
        break;
    }
    return edges;
}

struct AgentIndex {
    std::vector<AgentProfile>* agents = nullptr; // sorted by id
    std::map<AgentId, std::size_t> pos;

    AgentProfile& by_id(AgentId id) { return (*agents)[pos.at(id)]; }
    const AgentProfile& by_id(AgentId id) const { return (*agents)[pos.at(id)]; }
};

AgentIndex index_agents(std::vector<AgentProfile>& agents) {
    std::sort(agents.begin(), agents.end(),
              [](const AgentProfile& a, const AgentProfile& b) { return a.id < b.id; });
    AgentIndex idx;
    idx.agents = &agents;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (!idx.pos.emplace(agents[i].id, i).second)
            throw Error("duplicate agent id " + std::to_string(agents[i].id));
    }
    return idx;
}

std::vector<AgentId> apply_churn(AgentIndex& idx, const ChurnPolicy& churn, const Topology& topo,
                                 int epoch, std::vector<double>* server_bw) {
    auto& agents = *idx.agents;
    const int k = static_cast<int>(agents.size());
    const int n_churn = static_cast<int>(std::ceil(churn.fraction * k));
    std::vector<AgentId> churned;
    if (n_churn <= 0 || churn.speed_pool.empty()) return churned;

    rng::Engine g(rng::mix(churn.seed, static_cast<std::uint64_t>(epoch)));
    const auto picked = rng::sample_indices(g, k, n_churn);
    for (int i : picked) {
        AgentProfile& a = agents[static_cast<std::size_t>(i)];
        a.proc_speed = churn.speed_pool[rng::uniform_index(g, churn.speed_pool.size())];
        // Re-profiling redraws each incident link from the bandwidth set.
        for (auto& [peer, bw] : a.links) {
            const double nbw = weighted_pick(g, topo.bandwidths);
            bw = nbw;
            idx.by_id(peer).links[a.id] = nbw;
        }
        if (server_bw) (*server_bw)[static_cast<std::size_t>(i)] = weighted_pick(g, topo.bandwidths);
        churned.push_back(a.id);
    }
    return churned;
}

// Largest connected component of the subgraph induced by `members`
// (ties toward the component containing the lowest id). Everything outside it
// is excluded from the round: a collective over a disconnected set is
// undefined.
void restrict_to_component(const AgentIndex& idx, std::vector<AgentId>& members,
                           std::vector<AgentId>& excluded) {
    if (members.size() <= 1) return;
    std::map<AgentId, int> comp;
    for (AgentId id : members) comp[id] = -1;
    int n_comp = 0;
    for (AgentId root : members) {
        if (comp[root] != -1) continue;
        std::vector<AgentId> stack{root};
        comp[root] = n_comp;
        while (!stack.empty()) {
            const AgentId cur = stack.back();
            stack.pop_back();
            for (const auto& [peer, bw] : idx.by_id(cur).links) {
                auto it = comp.find(peer);
                if (it != comp.end() && it->second == -1) {
                    it->second = n_comp;
                    stack.push_back(peer);
                }
            }
        }
        ++n_comp;
    }
    std::vector<int> sizes(static_cast<std::size_t>(n_comp), 0);
    for (const auto& [id, c] : comp) sizes[static_cast<std::size_t>(c)]++;
    int best = 0;
    for (int c = 1; c < n_comp; ++c)
        if (sizes[static_cast<std::size_t>(c)] > sizes[static_cast<std::size_t>(best)]) best = c;
    // comp ids are assigned in ascending member order, so on a size tie the
    // first (lowest-id) component wins.
    std::vector<AgentId> kept;
    for (AgentId id : members) {
        if (comp[id] == best)
            kept.push_back(id);
        else
            excluded.push_back(id);
    }
    members = std::move(kept);
}

double min_member_bandwidth(const AgentIndex& idx, const std::vector<AgentId>& members) {
    std::map<AgentId, bool> in;
    for (AgentId id : members) in[id] = true;
    double best = std::numeric_limits<double>::infinity();
    for (AgentId id : members)
        for (const auto& [peer, bw] : idx.by_id(id).links)
            if (in.count(peer)) best = std::min(best, bw);
    return best;
}

} // namespace

void apply_topology(std::vector<AgentProfile>& agents, const Topology& topo) {
    std::sort(agents.begin(), agents.end(),
              [](const AgentProfile& a, const AgentProfile& b) { return a.id < b.id; });
    for (auto& a : agents) a.links.clear();
    if (topo.bandwidths.empty()) throw Error("topology has no bandwidth choices");
    rng::Engine g(rng::mix(topo.seed, 0x70));

    std::vector<double> agent_class;
    if (topo.assignment == BandwidthAssignment::per_agent)
        for (std::size_t i = 0; i < agents.size(); ++i)
            agent_class.push_back(weighted_pick(g, topo.bandwidths));

    const auto edges = topology_edges(static_cast<int>(agents.size()), topo, g);
    for (const auto& [i, j] : edges) {
        const double bw = topo.assignment == BandwidthAssignment::per_agent
                              ? std::min(agent_class[static_cast<std::size_t>(i)],
                                         agent_class[static_cast<std::size_t>(j)])
                              : weighted_pick(g, topo.bandwidths);
        agents[static_cast<std::size_t>(i)].links[agents[static_cast<std::size_t>(j)].id] = bw;
        agents[static_cast<std::size_t>(j)].links[agents[static_cast<std::size_t>(i)].id] = bw;
    }
}

SimResult run_comdml(std::vector<AgentProfile> agents, const ModelSpec& model,
                     const Topology& topo, const ChurnPolicy& churn,
                     const AllReduceModel& aggregation, int rounds, double sample_rate,
                     std::uint64_t seed, const SimOptions& opts) {
    if (rounds < 1) throw Error("rounds must be >= 1");
    if (!(sample_rate > 0.0) || sample_rate > 1.0) throw Error("sample_rate must be in (0, 1]");

    apply_topology(agents, topo);
    AgentIndex idx = index_agents(agents);
    for (const auto& a : agents) validate(a);

    const auto splits = profile_splits(model);
    for (const auto& sp : splits) validate(sp);
    SplitTable table;
    for (const auto& a : agents) table[a.id] = splits;

    const int k = static_cast<int>(agents.size());
    SimResult result;
    result.method = "comdml";
    double cumulative = 0.0;

    for (int r = 0; r < rounds; ++r) {
        SimRound round;
        if (r > 0 && churn.fraction > 0.0 && churn.period_rounds >= 1 &&
            r % churn.period_rounds == 0)
            round.churned = apply_churn(idx, churn, topo, r / churn.period_rounds, nullptr);

        const int n_sampled = std::max(1, static_cast<int>(std::ceil(sample_rate * k)));
        rng::Engine sample_gen(rng::mix(seed, 0x5A, static_cast<std::uint64_t>(r)));
        const auto picked = rng::sample_indices(sample_gen, k, std::min(n_sampled, k));
        for (int i : picked) round.participants.push_back(agents[static_cast<std::size_t>(i)].id);

        restrict_to_component(idx, round.participants, round.excluded);

        std::vector<AgentProfile> members;
        for (AgentId id : round.participants) members.push_back(idx.by_id(id));

        GreedyOptions gopts;
        gopts.improvement_threshold = opts.improvement_threshold;
        const PairingPlan plan = greedy_pair(members, table, gopts);

        std::map<AgentId, double> extras;
        if (opts.partial_model_transfer)
            for (const auto& p : plan.pairs)
                extras[p.slow] = offloaded_model_bytes(model, p.split_id);

        round.report = plan_makespan(members, plan, table, extras);

        for (const auto& p : plan.pairs) {
            const AgentProfile& slow = idx.by_id(p.slow);
            const AgentProfile& fast = idx.by_id(p.fast);
            const EstimateResult est = agent_training_time(
                slow, fast, fast_agent_time_estimate(fast), slow.link_to(fast.id), table.at(p.slow));
            PairRecord rec;
            rec.slow = p.slow;
            rec.fast = p.fast;
            rec.split_id = p.split_id;
            rec.est_s = est.est_time_s;
            rec.sim_s = std::max(round.report.per_agent.at(p.slow).total_s,
                                 round.report.per_agent.at(p.fast).total_s);
            round.pairs.push_back(rec);
        }

        if (round.participants.size() >= 2)
            round.aggregation_s =
                allreduce_cost(aggregation, static_cast<int>(round.participants.size()),
                               min_member_bandwidth(idx, round.participants));

        cumulative += round.report.makespan_s + round.aggregation_s;
        round.cumulative_s = cumulative;
        if (opts.record_profiles) round.profiles = agents;
        result.rounds.push_back(std::move(round));
    }
    result.cumulative_time_s = cumulative;
    return result;
}

SimResult run_baseline(const std::string& name, std::vector<AgentProfile> agents,
                       const Topology& topo, const AllReduceModel& aggregation, int rounds,
                       std::uint64_t seed, const ChurnPolicy& churn, const SimOptions& opts) {
    if (rounds < 1) throw Error("rounds must be >= 1");
    const bool is_fedavg = name == "fedavg";
    const bool is_braintorrent = name == "braintorrent";
    const bool is_gossip = name == "gossip";
    const bool is_allreduce = name == "allreduce_no_offload";
    if (!is_fedavg && !is_braintorrent && !is_gossip && !is_allreduce)
        throw UnknownBaseline("unknown baseline '" + name + "'");

    apply_topology(agents, topo);
    AgentIndex idx = index_agents(agents);
    for (const auto& a : agents) validate(a);

    const int k = static_cast<int>(agents.size());
    const double b = aggregation.model_bytes;

    // FedAvg talks to a virtual server over links drawn from the same
    // distribution as agent links.
    std::vector<double> server_bw(static_cast<std::size_t>(k), 0.0);
    if (is_fedavg) {
        rng::Engine g(rng::mix(seed, 0xF0));
        for (auto& bw : server_bw) bw = weighted_pick(g, topo.bandwidths);
    }

    SimResult result;
    result.method = name;
    double cumulative = 0.0;
    std::vector<double> gossip_sum(static_cast<std::size_t>(k), 0.0);

    for (int r = 0; r < rounds; ++r) {
        SimRound round;
        if (r > 0 && churn.fraction > 0.0 && churn.period_rounds >= 1 &&
            r % churn.period_rounds == 0)
            round.churned = apply_churn(idx, churn, topo, r / churn.period_rounds,
                                        is_fedavg ? &server_bw : nullptr);

        for (const auto& a : agents) round.participants.push_back(a.id);

        if (is_allreduce) {
            restrict_to_component(idx, round.participants, round.excluded);
            for (AgentId id : round.participants) {
                AgentRoundTime t;
                t.compute_s = individual_time(idx.by_id(id));
                t.total_s = t.compute_s;
                round.report.per_agent[id] = t;
            }
            if (round.participants.size() >= 2)
                round.aggregation_s =
                    allreduce_cost(aggregation, static_cast<int>(round.participants.size()),
                                   min_member_bandwidth(idx, round.participants));
        } else if (is_fedavg) {
            for (int i = 0; i < k; ++i) {
                const AgentProfile& a = agents[static_cast<std::size_t>(i)];
                AgentRoundTime t;
                t.compute_s = individual_time(a);
                t.comm_s = 2.0 * b / server_bw[static_cast<std::size_t>(i)];
                t.total_s = t.compute_s + t.comm_s;
                round.report.per_agent[a.id] = t;
            }
        } else if (is_braintorrent) {
            rng::Engine g(rng::mix(seed, 0xB7, static_cast<std::uint64_t>(r)));
            const AgentProfile& server =
                agents[rng::uniform_index(g, static_cast<std::size_t>(k))];
            round.participants.clear();
            for (const auto& a : agents) {
                if (a.id != server.id && !a.connected_to(server.id)) {
                    round.excluded.push_back(a.id);
                    continue;
                }
                round.participants.push_back(a.id);
                AgentRoundTime t;
                t.compute_s = individual_time(a);
                t.comm_s = a.id == server.id ? 0.0 : 2.0 * b / a.link_to(server.id);
                t.total_s = t.compute_s + t.comm_s;
                round.report.per_agent[a.id] = t;
            }
        } else { // gossip: push the model to one random connected peer
            rng::Engine g(rng::mix(seed, 0x60, static_cast<std::uint64_t>(r)));
            for (int i = 0; i < k; ++i) {
                const AgentProfile& a = agents[static_cast<std::size_t>(i)];
                AgentRoundTime t;
                t.compute_s = individual_time(a);
                if (!a.links.empty()) {
                    auto it = a.links.begin();
                    std::advance(it, static_cast<long>(rng::uniform_index(g, a.links.size())));
                    t.comm_s = b / it->second;
                }
                t.total_s = t.compute_s + t.comm_s;
                round.report.per_agent[a.id] = t;
                gossip_sum[static_cast<std::size_t>(i)] += t.total_s;
            }
        }

        double makespan = 0.0;
        for (const auto& [id, t] : round.report.per_agent)
            makespan = std::max(makespan, t.total_s);
        round.report.makespan_s = makespan;
        for (auto& [id, t] : round.report.per_agent) t.idle_s = makespan - t.total_s;

        if (is_gossip) {
            // No global barrier: cumulative time is the leading agent's own sum.
            cumulative = 0.0;
            for (double s : gossip_sum) cumulative = std::max(cumulative, s);
        } else {
            cumulative += round.report.makespan_s + round.aggregation_s;
        }
        round.cumulative_s = cumulative;
        if (opts.record_profiles) round.profiles = agents;
        result.rounds.push_back(std::move(round));
    }
    result.cumulative_time_s = cumulative;
    return result;
}

} // namespace comdml
