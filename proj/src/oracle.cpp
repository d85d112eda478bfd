// SPDX-License-Identifier: Apache-2.0

#include "comdml/oracle.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace comdml {

namespace {

struct Instance {
    int n = 0;
    std::vector<AgentId> ids;  // index -> agent id, ascending
    std::vector<double> tau;   // individual times
    // cost[s][f]: per-split pair completion time (empty when s cannot offload
    // to f: no link, or f is not strictly faster).
    std::vector<std::vector<std::vector<double>>> cost;
    std::vector<std::vector<int>> split_ids; // per slow agent, aligned with cost[s][f]
};

Instance build_instance(std::span<const AgentProfile> agents, const SplitTable& splits) {
    Instance inst;
    inst.n = static_cast<int>(agents.size());

    std::vector<const AgentProfile*> order;
    for (const auto& a : agents) {
        validate(a);
        order.push_back(&a);
    }
    std::sort(order.begin(), order.end(),
              [](const AgentProfile* a, const AgentProfile* b) { return a->id < b->id; });

    for (std::size_t i = 1; i < order.size(); ++i)
        if (order[i]->id == order[i - 1]->id)
            throw Error("duplicate agent id " + std::to_string(order[i]->id));

    inst.ids.resize(static_cast<std::size_t>(inst.n));
    inst.tau.resize(static_cast<std::size_t>(inst.n));
    inst.cost.assign(static_cast<std::size_t>(inst.n),
                     std::vector<std::vector<double>>(static_cast<std::size_t>(inst.n)));
    inst.split_ids.resize(static_cast<std::size_t>(inst.n));

    for (int idx = 0; idx < inst.n; ++idx) {
        inst.ids[static_cast<std::size_t>(idx)] = order[static_cast<std::size_t>(idx)]->id;
        inst.tau[static_cast<std::size_t>(idx)] =
            individual_time(*order[static_cast<std::size_t>(idx)]);
    }
    for (int s = 0; s < inst.n; ++s) {
        const AgentProfile& slow = *order[static_cast<std::size_t>(s)];
        auto it = splits.find(slow.id);
        if (it == splits.end() || it->second.empty()) continue;
        for (const auto& sp : it->second)
            inst.split_ids[static_cast<std::size_t>(s)].push_back(sp.split_id);
        const double n_batches = static_cast<double>(slow.num_batches);
        for (int f = 0; f < inst.n; ++f) {
            if (f == s) continue;
            const AgentProfile& fast = *order[static_cast<std::size_t>(f)];
            if (!slow.connected_to(fast.id)) continue;
            if (!(inst.tau[static_cast<std::size_t>(f)] < inst.tau[static_cast<std::size_t>(s)]))
                continue;
            const double bw = slow.link_to(fast.id);
            auto& per_split = inst.cost[static_cast<std::size_t>(s)][static_cast<std::size_t>(f)];
            per_split.reserve(it->second.size());
            for (const auto& sp : it->second) {
                const double slow_chain = split_slow_time(n_batches, slow.proc_speed, sp.slow_frac);
                const double fast_chain =
                    split_fast_chain(n_batches, fast.proc_speed, sp.fast_frac,
                                     inst.tau[static_cast<std::size_t>(f)], sp.interm_bytes, bw);
                per_split.push_back(std::max(slow_chain, fast_chain));
            }
        }
    }
    return inst;
}

// Assignment state per agent index during enumeration.
constexpr int kUnassigned = -2;
constexpr int kIndependent = -1;

struct SearchState {
    std::vector<int> partner; // kUnassigned / kIndependent / partner index
    std::vector<int> split;   // split id when this index is the slow side
    std::vector<char> is_slow;

    explicit SearchState(int n)
        : partner(static_cast<std::size_t>(n), kUnassigned),
          split(static_cast<std::size_t>(n), 0),
          is_slow(static_cast<std::size_t>(n), 0) {}
};

struct Best {
    bool valid = false;
    double makespan = 0.0;
    int npairs = 0;
    std::vector<int> partner;
    std::vector<int> split;
    std::vector<char> is_slow;
};

// Strict total order on complete plans: makespan, then pair count, then the
// per-index assignment sequence. Distinct plans always compare unequal, so
// the minimum is unique and any reduction order yields the same result.
bool better(const Best& best, double makespan, int npairs, const SearchState& s) {
    if (!best.valid) return true;
    if (makespan != best.makespan) return makespan < best.makespan;
    if (npairs != best.npairs) return npairs < best.npairs;
    for (std::size_t i = 0; i < s.partner.size(); ++i) {
        const int a_code = s.partner[i] == kIndependent ? 0 : 1;
        const int b_code = best.partner[i] == kIndependent ? 0 : 1;
        if (a_code != b_code) return a_code < b_code;
        if (s.partner[i] != best.partner[i]) return s.partner[i] < best.partner[i];
        if (s.split[i] != best.split[i]) return s.split[i] < best.split[i];
    }
    return false; // identical
}

bool better(const Best& best, const Best& cand) {
    if (!cand.valid) return false;
    if (!best.valid) return true;
    if (cand.makespan != best.makespan) return cand.makespan < best.makespan;
    if (cand.npairs != best.npairs) return cand.npairs < best.npairs;
    for (std::size_t i = 0; i < cand.partner.size(); ++i) {
        const int a_code = cand.partner[i] == kIndependent ? 0 : 1;
        const int b_code = best.partner[i] == kIndependent ? 0 : 1;
        if (a_code != b_code) return a_code < b_code;
        if (cand.partner[i] != best.partner[i]) return cand.partner[i] < best.partner[i];
        if (cand.split[i] != best.split[i]) return cand.split[i] < best.split[i];
    }
    return false;
}

void record(Best& best, double makespan, int npairs, const SearchState& s) {
    best.valid = true;
    best.makespan = makespan;
    best.npairs = npairs;
    best.partner = s.partner;
    best.split = s.split;
    best.is_slow = s.is_slow;
}

void enumerate(const Instance& inst, SearchState& s, int next_hint, double cur_max, int npairs,
               Best& best, unsigned long long& examined) {
    int i = next_hint;
    while (i < inst.n && s.partner[static_cast<std::size_t>(i)] != kUnassigned) ++i;
    if (i == inst.n) {
        ++examined;
        if (better(best, cur_max, npairs, s)) record(best, cur_max, npairs, s);
        return;
    }
    const std::size_t ui = static_cast<std::size_t>(i);

    s.partner[ui] = kIndependent;
    enumerate(inst, s, i + 1, std::max(cur_max, inst.tau[ui]), npairs, best, examined);
    s.partner[ui] = kUnassigned;

    for (int j = i + 1; j < inst.n; ++j) {
        const std::size_t uj = static_cast<std::size_t>(j);
        if (s.partner[uj] != kUnassigned) continue;
        // i offloads to j
        const auto& cij = inst.cost[ui][uj];
        for (std::size_t k = 0; k < cij.size(); ++k) {
            s.partner[ui] = j;
            s.partner[uj] = i;
            s.is_slow[ui] = 1;
            s.split[ui] = inst.split_ids[ui][k];
            enumerate(inst, s, i + 1, std::max(cur_max, cij[k]), npairs + 1, best, examined);
            s.partner[ui] = kUnassigned;
            s.partner[uj] = kUnassigned;
            s.is_slow[ui] = 0;
            s.split[ui] = 0;
        }
        // j offloads to i
        const auto& cji = inst.cost[uj][ui];
        for (std::size_t k = 0; k < cji.size(); ++k) {
            s.partner[ui] = j;
            s.partner[uj] = i;
            s.is_slow[uj] = 1;
            s.split[uj] = inst.split_ids[uj][k];
            enumerate(inst, s, i + 1, std::max(cur_max, cji[k]), npairs + 1, best, examined);
            s.partner[ui] = kUnassigned;
            s.partner[uj] = kUnassigned;
            s.is_slow[uj] = 0;
            s.split[uj] = 0;
        }
    }
}

OracleResult finish(const Instance& inst, const Best& best, unsigned long long examined) {
    OracleResult res;
    res.plans_examined = examined;
    res.best_makespan_s = best.valid ? best.makespan : 0.0;
    if (best.valid) {
        for (int i = 0; i < inst.n; ++i) {
            const std::size_t ui = static_cast<std::size_t>(i);
            if (best.partner[ui] == kIndependent) {
                res.best_plan.independents.push_back(inst.ids[ui]);
            } else if (best.is_slow[ui]) {
                res.best_plan.pairs.push_back(
                    {inst.ids[ui], inst.ids[static_cast<std::size_t>(best.partner[ui])],
                     best.split[ui]});
            }
        }
    }
    return res;
}

struct Branch {
    int j = kIndependent; // kIndependent or partner index of agent 0
    int slow = 0;         // which side of the pair offloads (0 = agent 0, 1 = partner)
    std::size_t k = 0;    // split position
};

// Upper bound on the plan count: matchings x split choices on a full graph.
double estimated_plans(int k, std::size_t max_splits) {
    double total = 0.0;
    for (int p = 0; 2 * p <= k; ++p) {
        double matchings = 1.0;
        for (int i = 0; i < 2 * p; ++i) matchings *= static_cast<double>(k - i);
        for (int i = 1; i <= p; ++i) matchings /= static_cast<double>(2 * i);
        double split_choices = 1.0;
        for (int i = 0; i < p; ++i) split_choices *= static_cast<double>(max_splits);
        total += matchings * split_choices;
    }
    return total;
}

OracleResult solve_impl(std::span<const AgentProfile> agents, const SplitTable& splits,
                        bool parallel) {
    if (agents.size() > static_cast<std::size_t>(kOracleMaxAgents))
        throw TooLarge("oracle limited to " + std::to_string(kOracleMaxAgents) + " agents, got " +
                       std::to_string(agents.size()));

    Instance inst = build_instance(agents, splits);
    if (inst.n == 0) {
        OracleResult res;
        res.plans_examined = 1; // the empty plan
        return res;
    }

    // Thread startup costs more than small searches; stay serial below ~500k
    // candidate plans.
    std::size_t max_splits = 1;
    for (const auto& ids : inst.split_ids) max_splits = std::max(max_splits, ids.size());
    if (!parallel || inst.n < 3 || estimated_plans(inst.n, max_splits) < 5e5) {
        SearchState s(inst.n);
        Best best;
        unsigned long long examined = 0;
        enumerate(inst, s, 0, 0.0, 0, best, examined);
        return finish(inst, best, examined);
    }

    // Top-level branches fix agent 0's assignment; each subtree is explored
    // serially and the results merge in branch order.
    std::vector<Branch> branches;
    branches.push_back({kIndependent, 0, 0});
    for (int j = 1; j < inst.n; ++j) {
        for (std::size_t k = 0; k < inst.cost[0][static_cast<std::size_t>(j)].size(); ++k)
            branches.push_back({j, 0, k});
        for (std::size_t k = 0; k < inst.cost[static_cast<std::size_t>(j)][0].size(); ++k)
            branches.push_back({j, 1, k});
    }

    // Each thread reduces into a private best; the cross-thread merge uses
    // the same strict total order, so the unique minimum is reached no matter
    // how branches are scheduled.
    Best best;
    unsigned long long examined = 0;
    const long n_branches = static_cast<long>(branches.size());
#ifdef _OPENMP
#pragma omp parallel
#endif
    {
        Best local_best;
        unsigned long long local_examined = 0;
        SearchState s(inst.n);
#ifdef _OPENMP
#pragma omp for schedule(dynamic, 1) nowait
#endif
        for (long b = 0; b < n_branches; ++b) {
            const Branch& br = branches[static_cast<std::size_t>(b)];
            double start_max = 0.0;
            int npairs = 0;
            if (br.j == kIndependent) {
                s.partner[0] = kIndependent;
                start_max = inst.tau[0];
            } else {
                const std::size_t uj = static_cast<std::size_t>(br.j);
                s.partner[0] = br.j;
                s.partner[uj] = 0;
                npairs = 1;
                if (br.slow == 0) {
                    s.is_slow[0] = 1;
                    s.split[0] = inst.split_ids[0][br.k];
                    start_max = inst.cost[0][uj][br.k];
                } else {
                    s.is_slow[uj] = 1;
                    s.split[uj] = inst.split_ids[uj][br.k];
                    start_max = inst.cost[uj][0][br.k];
                }
            }
            enumerate(inst, s, 1, start_max, npairs, local_best, local_examined);
            s.partner[0] = kUnassigned;
            s.is_slow[0] = 0;
            s.split[0] = 0;
            if (br.j != kIndependent) {
                const std::size_t uj = static_cast<std::size_t>(br.j);
                s.partner[uj] = kUnassigned;
                s.is_slow[uj] = 0;
                s.split[uj] = 0;
            }
        }
#ifdef _OPENMP
#pragma omp critical(comdml_oracle_merge)
#endif
        {
            examined += local_examined;
            if (better(best, local_best)) best = local_best;
        }
    }
    return finish(inst, best, examined);
}

} // namespace

OracleResult solve_exact(std::span<const AgentProfile> agents, const SplitTable& splits) {
    return solve_impl(agents, splits, true);
}

OracleResult solve_exact_serial(std::span<const AgentProfile> agents, const SplitTable& splits) {
    return solve_impl(agents, splits, false);
}

} // namespace comdml
