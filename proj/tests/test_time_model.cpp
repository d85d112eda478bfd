// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>

#include "comdml/rng.hpp"
#include "comdml/time_model.hpp"

using namespace comdml;

namespace {

AgentProfile agent(AgentId id, double speed, int batches) {
    AgentProfile a;
    a.id = id;
    a.proc_speed = speed;
    a.num_batches = batches;
    a.dataset_size = static_cast<long long>(batches) * 100;
    return a;
}

void link(AgentProfile& a, AgentProfile& b, double bw) {
    a.links[b.id] = bw;
    b.links[a.id] = bw;
}

} // namespace

TEST_SUITE("time_model") {

TEST_CASE("individual_time evaluates batches over speed") {
    CHECK(individual_time(agent(0, 2.0, 0)) == 0.0);
    CHECK(individual_time(agent(0, 2.0, 10)) == 5.0);
    CHECK(individual_time(agent(0, 0.2, 500)) == 2500.0);
}

TEST_CASE("pair_time with no intermediate data and symmetric speeds") {
    AgentProfile slow = agent(0, 2.0, 10);
    AgentProfile fast = agent(1, 2.0, 10);
    link(slow, fast, 1.0);
    const SplitProfile sp{1, 1.0, 1.0, 0.0};
    const PairTimes t = pair_time(slow, fast, sp, 5.0);
    CHECK(t.slow_total == doctest::Approx(5.0));
    CHECK(t.fast_total == doctest::Approx(10.0));
}

TEST_CASE("pair_time hand-evaluated example") {
    AgentProfile slow = agent(0, 2.0, 10);
    AgentProfile fast = agent(1, 4.0, 10);
    const SplitProfile sp{1, 0.5, 0.5, 1e6};

    link(slow, fast, 1e6);
    PairTimes t = pair_time(slow, fast, sp, 1.0);
    CHECK(t.slow_total == doctest::Approx(2.5));
    CHECK(t.fast_total == doctest::Approx(12.25));

    slow.links[fast.id] = 1e9;
    t = pair_time(slow, fast, sp, 1.0);
    CHECK(t.slow_total == doctest::Approx(2.5));
    CHECK(t.fast_total == doctest::Approx(2.26));
}

TEST_CASE("pair_time requires a link") {
    AgentProfile slow = agent(0, 2.0, 10);
    AgentProfile fast = agent(1, 4.0, 10);
    CHECK_THROWS_AS(pair_time(slow, fast, SplitProfile{1, 0.5, 0.5, 0.0}, 1.0), MissingLink);
}

TEST_CASE("plan_makespan over independents") {
    std::vector<AgentProfile> agents{agent(0, 2.0, 10), agent(1, 1.0, 3), agent(2, 1.0, 1)};
    PairingPlan plan;
    plan.independents = {0, 1, 2};
    const RoundReport report = plan_makespan(agents, plan, {});
    CHECK(report.makespan_s == doctest::Approx(5.0));
    CHECK(report.per_agent.at(1).idle_s == doctest::Approx(2.0));
    CHECK(report.per_agent.at(2).idle_s == doctest::Approx(4.0));
}

TEST_CASE("plan_makespan with one pair reproduces the pair_time example") {
    std::vector<AgentProfile> agents{agent(0, 2.0, 10), agent(1, 4.0, 4), agent(2, 1.0, 3),
                                     agent(3, 1.0, 1)};
    link(agents[0], agents[1], 1e6);
    SplitTable table;
    table[0] = {SplitProfile{1, 0.5, 0.5, 1e6}};
    PairingPlan plan;
    plan.pairs = {{0, 1, 1}};
    plan.independents = {2, 3};
    const RoundReport report = plan_makespan(agents, plan, table);
    CHECK(report.per_agent.at(0).total_s == doctest::Approx(2.5));
    CHECK(report.per_agent.at(1).total_s == doctest::Approx(12.25)); // own 1.0 + comm 10 + 1.25
    CHECK(report.per_agent.at(2).total_s == doctest::Approx(3.0));
    CHECK(report.per_agent.at(3).total_s == doctest::Approx(1.0));
    CHECK(report.makespan_s == doctest::Approx(12.25));
    // Communication sits on the helper's timeline.
    CHECK(report.per_agent.at(1).comm_s == doctest::Approx(10.0));
    CHECK(report.per_agent.at(0).comm_s == 0.0);
}

TEST_CASE("plan_makespan of no agents is zero") {
    const RoundReport report = plan_makespan({}, PairingPlan{}, {});
    CHECK(report.makespan_s == 0.0);
    CHECK(report.per_agent.empty());
}

TEST_CASE("plan_makespan validates the plan") {
    std::vector<AgentProfile> agents{agent(0, 2.0, 10), agent(1, 4.0, 4), agent(2, 1.0, 3)};
    link(agents[0], agents[1], 1e6);
    SplitTable table;
    table[0] = {SplitProfile{1, 0.5, 0.5, 0.0}};
    table[2] = {SplitProfile{1, 0.5, 0.5, 0.0}};

    PairingPlan missing_agent;
    missing_agent.pairs = {{0, 1, 1}};
    CHECK_THROWS_AS(plan_makespan(agents, missing_agent, table), InvalidPlan);

    PairingPlan duplicate;
    duplicate.pairs = {{0, 1, 1}};
    duplicate.independents = {0, 2};
    CHECK_THROWS_AS(plan_makespan(agents, duplicate, table), InvalidPlan);

    PairingPlan dual_role;
    link(agents[2], agents[0], 1e6);
    dual_role.pairs = {{0, 1, 1}, {2, 0, 1}};
    CHECK_THROWS_AS(plan_makespan(agents, dual_role, table), InvalidPlan);

    PairingPlan unknown_split;
    unknown_split.pairs = {{0, 1, 7}};
    unknown_split.independents = {2};
    CHECK_THROWS_AS(plan_makespan(agents, unknown_split, table), InvalidPlan);
}

TEST_CASE("idle is non-negative and makespan is the max total") {
    std::vector<AgentProfile> agents{agent(0, 0.5, 20), agent(1, 4.0, 4), agent(2, 1.0, 3)};
    link(agents[0], agents[1], 2e6);
    SplitTable table;
    table[0] = {SplitProfile{1, 0.4, 0.6, 3e5}};
    PairingPlan plan;
    plan.pairs = {{0, 1, 1}};
    plan.independents = {2};
    const RoundReport report = plan_makespan(agents, plan, table);
    double max_total = 0.0;
    for (const auto& [id, t] : report.per_agent) {
        CHECK(t.idle_s >= 0.0);
        CHECK(t.total_s == doctest::Approx(report.makespan_s - t.idle_s));
        max_total = std::max(max_total, t.total_s);
    }
    CHECK(report.makespan_s == max_total);
}

TEST_CASE("pair_time monotonicity in bandwidth and speeds") {
    rng::Engine g(42);
    for (int iter = 0; iter < 200; ++iter) {
        AgentProfile slow = agent(0, rng::uniform_range(g, 0.1, 10.0),
                                  1 + static_cast<int>(rng::uniform_index(g, 100)));
        AgentProfile fast = agent(1, rng::uniform_range(g, 0.1, 10.0), 10);
        const SplitProfile sp{1, rng::uniform_range(g, 0.05, 1.0),
                              rng::uniform_range(g, 0.05, 1.0), rng::uniform_range(g, 0.0, 1e7)};
        const double own = rng::uniform_range(g, 0.0, 20.0);
        const double bw = rng::uniform_range(g, 1e5, 1e8);

        link(slow, fast, bw);
        const PairTimes base = pair_time(slow, fast, sp, own);

        slow.links[fast.id] = bw * 2.0;
        CHECK(pair_time(slow, fast, sp, own).fast_total <= base.fast_total);
        slow.links[fast.id] = bw;

        fast.proc_speed *= 2.0;
        CHECK(pair_time(slow, fast, sp, own).fast_total <= base.fast_total);
        fast.proc_speed /= 2.0;

        slow.proc_speed *= 2.0;
        CHECK(pair_time(slow, fast, sp, own).slow_total <= base.slow_total);
    }
}

TEST_CASE("empty-pairs plan equals the max of individual times") {
    rng::Engine g(7);
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<AgentProfile> agents;
        const int k = 1 + static_cast<int>(rng::uniform_index(g, 6));
        double expect = 0.0;
        for (int i = 0; i < k; ++i) {
            agents.push_back(agent(i, rng::uniform_range(g, 0.1, 10.0),
                                   static_cast<int>(rng::uniform_index(g, 200))));
            expect = std::max(expect, individual_time(agents.back()));
        }
        PairingPlan plan;
        for (int i = 0; i < k; ++i) plan.independents.push_back(i);
        CHECK(plan_makespan(agents, plan, {}).makespan_s == expect);
    }
}

TEST_CASE("degenerate split reduces to full individual workloads") {
    // slow_frac = fast_frac = 1, no transfer: the offloader keeps its full
    // individual time and the helper adds the full offloaded task at its own
    // speed on top of its own time.
    AgentProfile slow = agent(0, 1.3, 17);
    AgentProfile fast = agent(1, 3.7, 41);
    link(slow, fast, 5e5);
    const SplitProfile sp{1, 1.0, 1.0, 0.0};
    const PairTimes t = pair_time(slow, fast, sp, individual_time(fast));
    CHECK(t.slow_total == doctest::Approx(individual_time(slow)));
    CHECK(t.fast_total == doctest::Approx(individual_time(fast) + 17.0 / 3.7));

    // With matched speeds the pair is exactly both individual times stacked.
    AgentProfile s2 = agent(0, 2.0, 10);
    AgentProfile f2 = agent(1, 2.0, 10);
    link(s2, f2, 1.0);
    const PairTimes t2 = pair_time(s2, f2, sp, individual_time(f2));
    CHECK(t2.slow_total == doctest::Approx(individual_time(s2)));
    CHECK(t2.fast_total == doctest::Approx(individual_time(f2) + individual_time(s2)));
}

TEST_CASE("plan_makespan is permutation invariant") {
    std::vector<AgentProfile> agents{agent(0, 2.0, 10), agent(1, 4.0, 4), agent(2, 1.0, 3),
                                     agent(3, 0.5, 9)};
    link(agents[0], agents[1], 1e6);
    SplitTable table;
    table[0] = {SplitProfile{1, 0.5, 0.5, 1e6}};
    PairingPlan plan;
    plan.pairs = {{0, 1, 1}};
    plan.independents = {2, 3};

    const RoundReport a = plan_makespan(agents, plan, table);
    std::reverse(agents.begin(), agents.end());
    const RoundReport b = plan_makespan(agents, plan, table);
    CHECK(a.makespan_s == b.makespan_s);
    for (const auto& [id, t] : a.per_agent) CHECK(t.total_s == b.per_agent.at(id).total_s);
}

TEST_CASE("profile invariants reject bad values") {
    AgentProfile bad = agent(0, 0.0, 1);
    CHECK_THROWS_AS(validate(bad), Error);
    AgentProfile self = agent(1, 1.0, 1);
    self.links[1] = 5.0;
    CHECK_THROWS_AS(validate(self), Error);
    AgentProfile zero_bw = agent(2, 1.0, 1);
    zero_bw.links[3] = 0.0;
    CHECK_THROWS_AS(validate(zero_bw), Error);
}

} // TEST_SUITE
