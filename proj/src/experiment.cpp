// SPDX-License-Identifier: Apache-2.0

#include "comdml/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "comdml/csv.hpp"
#include "comdml/oracle.hpp"
#include "comdml/rng.hpp"

namespace comdml {

namespace fs = std::filesystem;

namespace {

int sweep_threads(int jobs) {
    int cap = jobs;
#ifdef _OPENMP
    cap = std::min(cap, omp_get_max_threads());
#endif
    if (const char* env = std::getenv("COMDML_SIM_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) cap = std::min(cap, v);
    }
    return std::max(1, cap);
}

SimResult run_method(const std::string& method, const ExperimentConfig& cfg,
                     const ModelSpec& model, const std::vector<AgentProfile>& agents,
                     const Topology& topo, const ChurnPolicy& churn, const AllReduceModel& agg) {
    SimOptions opts;
    opts.partial_model_transfer = cfg.flags.partial_model_transfer;
    opts.improvement_threshold = cfg.flags.improvement_threshold;
    if (method == "comdml")
        return run_comdml(agents, model, topo, churn, agg, cfg.rounds, cfg.sample_rate, cfg.seed,
                          opts);
    return run_baseline(method, agents, topo, agg, cfg.rounds, cfg.seed, churn, opts);
}

void write_timing_mode(const ExperimentConfig& cfg, const std::string& out_dir) {
    const ModelSpec model = build_model(cfg);
    const auto agents = build_agents(cfg);
    const Topology topo = build_topology(cfg);
    const ChurnPolicy churn = build_churn(cfg);
    const AllReduceModel agg = build_aggregation(cfg, model);

    std::vector<std::string> methods = cfg.compare;
    if (methods.empty()) methods.push_back("comdml");

    std::vector<SimResult> results(methods.size());
    const int nt = sweep_threads(static_cast<int>(methods.size()));
    const long n_methods = static_cast<long>(methods.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(nt)
#endif
    for (long i = 0; i < n_methods; ++i)
        results[static_cast<std::size_t>(i)] =
            run_method(methods[static_cast<std::size_t>(i)], cfg, model, agents, topo, churn, agg);
    (void)nt;

    CsvWriter timing(out_dir + "/timing.csv",
                     {"method", "round", "makespan_s", "aggregation_s", "cumulative_s"});
    for (const auto& res : results)
        for (std::size_t r = 0; r < res.rounds.size(); ++r)
            timing.row({res.method, std::to_string(r), fmt9(res.rounds[r].report.makespan_s),
                        fmt9(res.rounds[r].aggregation_s), fmt9(res.rounds[r].cumulative_s)});

    CsvWriter pairs(out_dir + "/pairs.csv",
                    {"round", "slow_id", "fast_id", "split_m", "est_s", "sim_s"});
    for (const auto& res : results) {
        if (res.method != "comdml") continue;
        for (std::size_t r = 0; r < res.rounds.size(); ++r)
            for (const auto& p : res.rounds[r].pairs)
                pairs.row({std::to_string(r), std::to_string(p.slow), std::to_string(p.fast),
                           std::to_string(p.split_id), fmt9(p.est_s), fmt9(p.sim_s)});
    }
}

void write_learning_mode(const ExperimentConfig& cfg, const std::string& out_dir) {
    const TrainingSetup setup = build_training_setup(cfg);
    const TrainingResult result = run_training(setup.agents, setup.net, setup.data, setup.opts);

    CsvWriter learning(out_dir + "/learning.csv", {"round", "loss", "accuracy", "drift"});
    for (const auto& m : result.rounds)
        learning.row({std::to_string(m.round), fmt9(m.loss), fmt9(m.accuracy),
                      fmt9(m.drift_mean)});
}

} // namespace

TrainingSetup build_training_setup(const ExperimentConfig& cfg) {
    TrainingSetup setup;
    const MixtureSpec mixture = build_mixture(cfg);
    setup.data = make_gaussian_mixture(mixture, cfg.agents.count, rng::mix(cfg.seed, 0xDA7A));

    // Timing profiles drive the pairing; batch counts reflect the actual
    // partition so the scheduler sees the real workloads.
    setup.agents = build_agents(cfg);
    for (std::size_t i = 0; i < setup.agents.size(); ++i) {
        const auto n = static_cast<long long>(setup.data.partitions[i].size());
        setup.agents[i].dataset_size = n;
        setup.agents[i].num_batches =
            static_cast<int>((n + cfg.agents.batch_size - 1) / cfg.agents.batch_size);
    }
    apply_topology(setup.agents, build_topology(cfg));

    setup.net = make_split_net(mixture.dim, cfg.learning.hidden_widths, mixture.classes,
                               rng::mix(cfg.seed, 0x4E));

    setup.opts.plan_source = PlanSource::comdml;
    setup.opts.rounds = cfg.learning.rounds;
    setup.opts.batch_size = cfg.agents.batch_size;
    setup.opts.lr.eta0 = cfg.learning.lr;
    setup.opts.lr.decay_factor = cfg.learning.decay_factor;
    setup.opts.lr.plateau_rounds = cfg.learning.plateau_rounds;
    setup.opts.lr.plateau_tol = cfg.learning.plateau_tol;
    setup.opts.uniform_average = cfg.flags.uniform_average;
    setup.opts.improvement_threshold = cfg.flags.improvement_threshold;
    setup.opts.drift_bins = cfg.learning.drift_bins;
    setup.opts.drift_probe_samples = cfg.learning.drift_probe_samples;
    setup.opts.seed = cfg.seed;
    return setup;
}

void run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    validate_config(cfg);
    fs::create_directories(out_dir);
    if (cfg.mode == "timing" || cfg.mode == "both") write_timing_mode(cfg, out_dir);
    if (cfg.mode == "learning" || cfg.mode == "both") write_learning_mode(cfg, out_dir);
}

OracleCheckReport run_oracle_check(const ExperimentConfig& cfg, int instances,
                                   const std::string& out_dir) {
    validate_config(cfg);
    if (cfg.agents.count > kOracleMaxAgents)
        throw TooLarge("oracle check limited to " + std::to_string(kOracleMaxAgents) +
                       " agents, got " + std::to_string(cfg.agents.count));
    if (instances < 1) throw Error("need at least 1 instance");
    fs::create_directories(out_dir);

    const ModelSpec model = build_model(cfg);
    const auto splits = profile_splits(model);

    CsvWriter csv(out_dir + "/oracle.csv",
                  {"instance", "greedy_makespan", "opt_makespan", "ratio"});

    OracleCheckReport report;
    report.instances = instances;
    double ratio_sum = 0.0;
    for (int inst = 0; inst < instances; ++inst) {
        rng::Engine g(rng::mix(cfg.seed, 0x0C, static_cast<std::uint64_t>(inst)));
        std::vector<AgentProfile> agents(static_cast<std::size_t>(cfg.agents.count));
        for (int i = 0; i < cfg.agents.count; ++i) {
            AgentProfile& a = agents[static_cast<std::size_t>(i)];
            a.id = i;
            a.proc_speed = cfg.agents.speeds_cpu[rng::uniform_index(
                               g, cfg.agents.speeds_cpu.size())] *
                           kBatchesPerSecondPerCpu;
            a.num_batches = cfg.agents.num_batches;
            a.dataset_size =
                static_cast<long long>(cfg.agents.num_batches) * cfg.agents.batch_size;
        }
        Topology topo = build_topology(cfg);
        topo.seed = rng::mix(cfg.seed, 0x707, static_cast<std::uint64_t>(inst));
        apply_topology(agents, topo);

        SplitTable table;
        for (const auto& a : agents) table[a.id] = splits;

        const PairingPlan plan = greedy_pair(agents, table);
        const double greedy = plan_makespan(agents, plan, table).makespan_s;
        const OracleResult oracle = solve_exact(agents, table);
        const double opt = oracle.best_makespan_s;
        const double ratio = opt > 0.0 ? greedy / opt : 1.0;

        csv.row({std::to_string(inst), fmt9(greedy), fmt9(opt), fmt9(ratio)});
        report.max_ratio = std::max(report.max_ratio, ratio);
        ratio_sum += ratio;
    }
    report.mean_ratio = ratio_sum / instances;
    return report;
}

void run_profile_dump(const ExperimentConfig& cfg, const std::string& out_dir) {
    validate_config(cfg);
    fs::create_directories(out_dir);
    const ModelSpec model = build_model(cfg);
    const auto splits = profile_splits(model);
    CsvWriter csv(out_dir + "/splits.csv",
                  {"split_m", "slow_frac", "fast_frac", "interm_bytes", "offloaded_model_bytes"});
    for (const auto& sp : splits)
        csv.row({std::to_string(sp.split_id), fmt9(sp.slow_frac), fmt9(sp.fast_frac),
                 fmt9(sp.interm_bytes), fmt9(offloaded_model_bytes(model, sp.split_id))});
}

} // namespace comdml
