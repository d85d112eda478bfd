// SPDX-License-Identifier: Apache-2.0

#include "comdml/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "comdml/rng.hpp"

namespace comdml {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::string& scope,
                         const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ValidationError("unknown key '" + (scope.empty() ? key : scope + "." + key) +
                                  "'");
}

template <typename T>
void get_to(const json& obj, const std::string& scope, const std::string& key, T& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        it->get_to(out);
    } catch (const json::exception& e) {
        throw ValidationError("bad value for '" + (scope.empty() ? key : scope + "." + key) +
                              "': " + e.what());
    }
}

void get_seed(const json& obj, const std::string& scope, const std::string& key,
              std::optional<std::uint64_t>& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_number_unsigned() && !it->is_number_integer())
        throw ValidationError("'" + scope + "." + key + "' must be an unsigned integer");
    out = it->get<std::uint64_t>();
}

void parse_agents(const json& obj, AgentsConfig& cfg) {
    reject_unknown_keys(obj, "agents",
                        {"count", "speeds_cpu", "assignment", "num_batches", "batch_size"});
    get_to(obj, "agents", "count", cfg.count);
    get_to(obj, "agents", "speeds_cpu", cfg.speeds_cpu);
    get_to(obj, "agents", "assignment", cfg.assignment);
    get_to(obj, "agents", "num_batches", cfg.num_batches);
    get_to(obj, "agents", "batch_size", cfg.batch_size);
}

void parse_model(const json& node, ExperimentConfig& cfg) {
    if (node.is_string()) {
        cfg.model_preset = node.get<std::string>();
        return;
    }
    if (!node.is_object()) throw ValidationError("'model' must be a preset name or an object");
    reject_unknown_keys(node, "model", {"layers", "aux_cost_frac", "aux_out_classes"});
    cfg.model_preset = "custom";
    auto it = node.find("layers");
    if (it == node.end()) throw ValidationError("'model.layers' is required for a custom model");
    cfg.model_layers.clear();
    for (const auto& lj : *it) {
        reject_unknown_keys(lj, "model.layers[]", {"name", "cost", "out_bytes", "param_bytes"});
        LayerSpec layer;
        get_to(lj, "model.layers[]", "name", layer.name);
        get_to(lj, "model.layers[]", "cost", layer.cost);
        get_to(lj, "model.layers[]", "out_bytes", layer.out_bytes);
        get_to(lj, "model.layers[]", "param_bytes", layer.param_bytes);
        cfg.model_layers.push_back(layer);
    }
    get_to(node, "model", "aux_cost_frac", cfg.model_aux_cost_frac);
    get_to(node, "model", "aux_out_classes", cfg.model_aux_out_classes);
}

void parse_topology(const json& obj, TopologyConfig& cfg) {
    reject_unknown_keys(obj, "topology",
                        {"kind", "edge_prob", "seed", "bandwidth_assignment", "bandwidths_mbps",
                         "bandwidth_weights"});
    get_to(obj, "topology", "kind", cfg.kind);
    get_to(obj, "topology", "edge_prob", cfg.edge_prob);
    get_seed(obj, "topology", "seed", cfg.seed);
    get_to(obj, "topology", "bandwidth_assignment", cfg.bandwidth_assignment);
    get_to(obj, "topology", "bandwidths_mbps", cfg.bandwidths_mbps);
    get_to(obj, "topology", "bandwidth_weights", cfg.bandwidth_weights);
}

void parse_churn(const json& obj, ChurnConfig& cfg) {
    reject_unknown_keys(obj, "churn", {"fraction", "period_rounds", "seed"});
    get_to(obj, "churn", "fraction", cfg.fraction);
    get_to(obj, "churn", "period_rounds", cfg.period_rounds);
    get_seed(obj, "churn", "seed", cfg.seed);
}

void parse_aggregation(const json& obj, AggregationConfig& cfg) {
    reject_unknown_keys(obj, "aggregation", {"algorithm", "latency_s", "model_bytes"});
    get_to(obj, "aggregation", "algorithm", cfg.algorithm);
    get_to(obj, "aggregation", "latency_s", cfg.latency_s);
    if (obj.contains("model_bytes")) {
        double v = 0.0;
        get_to(obj, "aggregation", "model_bytes", v);
        cfg.model_bytes = v;
    }
}

void parse_flags(const json& obj, FlagsConfig& cfg) {
    reject_unknown_keys(obj, "flags",
                        {"partial_model_transfer", "uniform_average", "improvement_threshold",
                         "count_label_bytes"});
    get_to(obj, "flags", "partial_model_transfer", cfg.partial_model_transfer);
    get_to(obj, "flags", "uniform_average", cfg.uniform_average);
    get_to(obj, "flags", "improvement_threshold", cfg.improvement_threshold);
    get_to(obj, "flags", "count_label_bytes", cfg.count_label_bytes);
}

void parse_learning(const json& obj, LearningConfig& cfg) {
    reject_unknown_keys(obj, "learning",
                        {"data", "hidden_widths", "rounds", "lr", "decay_factor",
                         "plateau_rounds", "plateau_tol", "drift_bins", "drift_probe_samples"});
    if (obj.contains("data")) {
        const json& d = obj.at("data");
        reject_unknown_keys(d, "learning.data",
                            {"classes", "dim", "samples", "mean_scale", "sigma", "label_skew"});
        get_to(d, "learning.data", "classes", cfg.data.classes);
        get_to(d, "learning.data", "dim", cfg.data.dim);
        get_to(d, "learning.data", "samples", cfg.data.samples);
        get_to(d, "learning.data", "mean_scale", cfg.data.mean_scale);
        get_to(d, "learning.data", "sigma", cfg.data.sigma);
        get_to(d, "learning.data", "label_skew", cfg.data.label_skew);
    }
    get_to(obj, "learning", "hidden_widths", cfg.hidden_widths);
    get_to(obj, "learning", "rounds", cfg.rounds);
    get_to(obj, "learning", "lr", cfg.lr);
    get_to(obj, "learning", "decay_factor", cfg.decay_factor);
    get_to(obj, "learning", "plateau_rounds", cfg.plateau_rounds);
    get_to(obj, "learning", "plateau_tol", cfg.plateau_tol);
    get_to(obj, "learning", "drift_bins", cfg.drift_bins);
    get_to(obj, "learning", "drift_probe_samples", cfg.drift_probe_samples);
}

const std::set<std::string> kMethods{"comdml", "fedavg", "gossip", "braintorrent",
                                     "allreduce_no_offload"};

void fail(const std::string& field, const std::string& what) {
    throw ValidationError("'" + field + "' " + what);
}

} // namespace

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("parse error in '" + path + "': " + e.what());
    }
    if (!root.is_object()) throw ParseError("config root must be an object");

    reject_unknown_keys(root, "",
                        {"agents", "model", "topology", "churn", "aggregation", "rounds",
                         "sample_rate", "seed", "mode", "flags", "learning", "compare"});

    ExperimentConfig cfg = default_config();
    if (root.contains("agents")) parse_agents(root.at("agents"), cfg.agents);
    if (root.contains("model")) parse_model(root.at("model"), cfg);
    if (root.contains("topology")) parse_topology(root.at("topology"), cfg.topology);
    if (root.contains("churn")) {
        ChurnConfig churn;
        parse_churn(root.at("churn"), churn);
        cfg.churn = churn;
    }
    if (root.contains("aggregation")) parse_aggregation(root.at("aggregation"), cfg.aggregation);
    get_to(root, "", "rounds", cfg.rounds);
    get_to(root, "", "sample_rate", cfg.sample_rate);
    if (root.contains("seed")) {
        std::optional<std::uint64_t> s;
        get_seed(root, "", "seed", s);
        cfg.seed = *s;
    }
    get_to(root, "", "mode", cfg.mode);
    if (root.contains("flags")) parse_flags(root.at("flags"), cfg.flags);
    if (root.contains("learning")) parse_learning(root.at("learning"), cfg.learning);
    get_to(root, "", "compare", cfg.compare);

    validate_config(cfg);
    return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.agents.count < 1) fail("agents.count", "must be >= 1");
    if (cfg.agents.speeds_cpu.empty()) fail("agents.speeds_cpu", "must be non-empty");
    for (double s : cfg.agents.speeds_cpu)
        if (!(s > 0.0)) fail("agents.speeds_cpu", "entries must be > 0");
    if (cfg.agents.assignment != "tiles" && cfg.agents.assignment != "random")
        fail("agents.assignment", "must be 'tiles' or 'random'");
    if (cfg.agents.num_batches < 0) fail("agents.num_batches", "must be >= 0");
    if (cfg.agents.batch_size < 1) fail("agents.batch_size", "must be >= 1");

    if (cfg.model_preset != "resnet56-like" && cfg.model_preset != "custom")
        fail("model", "unknown preset '" + cfg.model_preset + "'");
    if (cfg.model_preset == "custom" && cfg.model_layers.size() < 2)
        fail("model.layers", "needs at least 2 layers");
    if (cfg.model_aux_cost_frac < 0.0) fail("model.aux_cost_frac", "must be >= 0");

    if (cfg.topology.kind != "full" && cfg.topology.kind != "random" &&
        cfg.topology.kind != "ring")
        fail("topology.kind", "must be one of full|random|ring");
    if (cfg.topology.edge_prob < 0.0 || cfg.topology.edge_prob > 1.0)
        fail("topology.edge_prob", "must be in [0, 1]");
    if (cfg.topology.bandwidth_assignment != "edge" && cfg.topology.bandwidth_assignment != "agent")
        fail("topology.bandwidth_assignment", "must be 'edge' or 'agent'");
    if (cfg.topology.bandwidths_mbps.empty()) fail("topology.bandwidths_mbps", "must be non-empty");
    for (double v : cfg.topology.bandwidths_mbps)
        if (!(v > 0.0)) fail("topology.bandwidths_mbps", "entries must be > 0");
    if (!cfg.topology.bandwidth_weights.empty()) {
        if (cfg.topology.bandwidth_weights.size() != cfg.topology.bandwidths_mbps.size())
            fail("topology.bandwidth_weights", "must match bandwidths_mbps in length");
        double sum = 0.0;
        for (double w : cfg.topology.bandwidth_weights) {
            if (w < 0.0) fail("topology.bandwidth_weights", "entries must be >= 0");
            sum += w;
        }
        if (!(sum > 0.0)) fail("topology.bandwidth_weights", "must have positive total");
    }

    if (cfg.churn) {
        if (cfg.churn->fraction < 0.0 || cfg.churn->fraction > 1.0)
            fail("churn.fraction", "must be in [0, 1]");
        if (cfg.churn->period_rounds < 1) fail("churn.period_rounds", "must be >= 1");
    }

    if (cfg.aggregation.algorithm != "halving_doubling" && cfg.aggregation.algorithm != "ring")
        fail("aggregation.algorithm", "must be 'halving_doubling' or 'ring'");
    if (cfg.aggregation.latency_s < 0.0) fail("aggregation.latency_s", "must be >= 0");
    if (cfg.aggregation.model_bytes && !(*cfg.aggregation.model_bytes > 0.0))
        fail("aggregation.model_bytes", "must be > 0");

    if (cfg.rounds < 1) fail("rounds", "must be >= 1");
    if (!(cfg.sample_rate > 0.0) || cfg.sample_rate > 1.0)
        fail("sample_rate", "must be in (0, 1]");
    if (cfg.mode != "timing" && cfg.mode != "learning" && cfg.mode != "both")
        fail("mode", "must be one of timing|learning|both");

    if (cfg.flags.improvement_threshold < 0.0) fail("flags.improvement_threshold", "must be >= 0");

    const auto& lr = cfg.learning;
    if (lr.data.classes < 2) fail("learning.data.classes", "must be >= 2");
    if (lr.data.dim < 1) fail("learning.data.dim", "must be >= 1");
    if (lr.data.samples < 1) fail("learning.data.samples", "must be >= 1");
    if (!(lr.data.sigma > 0.0)) fail("learning.data.sigma", "must be > 0");
    if (lr.data.label_skew < 0.0) fail("learning.data.label_skew", "must be >= 0");
    if (lr.hidden_widths.empty()) fail("learning.hidden_widths", "must be non-empty");
    for (int w : lr.hidden_widths)
        if (w < 1) fail("learning.hidden_widths", "entries must be >= 1");
    if (lr.rounds < 0) fail("learning.rounds", "must be >= 0");
    if (!(lr.lr > 0.0)) fail("learning.lr", "must be > 0");
    if (!(lr.decay_factor > 0.0) || lr.decay_factor > 1.0)
        fail("learning.decay_factor", "must be in (0, 1]");
    if (lr.plateau_rounds < 1) fail("learning.plateau_rounds", "must be >= 1");
    if (lr.plateau_tol < 0.0) fail("learning.plateau_tol", "must be >= 0");
    if (lr.drift_bins < 1) fail("learning.drift_bins", "must be >= 1");
    if (lr.drift_probe_samples < 1) fail("learning.drift_probe_samples", "must be >= 1");

    std::set<std::string> compare_seen;
    for (const auto& m : cfg.compare) {
        if (!kMethods.count(m)) fail("compare", "unknown method '" + m + "'");
        if (!compare_seen.insert(m).second) fail("compare", "duplicate method '" + m + "'");
    }
}

std::vector<AgentProfile> build_agents(const ExperimentConfig& cfg) {
    std::vector<AgentProfile> agents(static_cast<std::size_t>(cfg.agents.count));
    rng::Engine g(rng::mix(cfg.seed, 0xA6));
    for (int i = 0; i < cfg.agents.count; ++i) {
        AgentProfile& a = agents[static_cast<std::size_t>(i)];
        a.id = i;
        const double cpu =
            cfg.agents.assignment == "tiles"
                ? cfg.agents.speeds_cpu[static_cast<std::size_t>(i) % cfg.agents.speeds_cpu.size()]
                : cfg.agents.speeds_cpu[rng::uniform_index(g, cfg.agents.speeds_cpu.size())];
        a.proc_speed = cpu * kBatchesPerSecondPerCpu;
        a.num_batches = cfg.agents.num_batches;
        a.dataset_size =
            static_cast<long long>(cfg.agents.num_batches) * cfg.agents.batch_size;
    }
    return agents;
}

ModelSpec build_model(const ExperimentConfig& cfg) {
    ModelSpec model;
    if (cfg.model_preset == "resnet56-like") {
        model = resnet56_like_model();
        model.aux_cost_frac = cfg.model_aux_cost_frac;
        model.aux_out_classes = cfg.model_aux_out_classes;
    } else {
        model.layers = cfg.model_layers;
        model.aux_cost_frac = cfg.model_aux_cost_frac;
        model.aux_out_classes = cfg.model_aux_out_classes;
    }
    if (cfg.flags.count_label_bytes) {
        // Labels travel with the activations: 8 bytes per sample per batch.
        const double label_bytes = 8.0 * cfg.agents.batch_size;
        for (auto& layer : model.layers) layer.out_bytes += label_bytes;
    }
    return model;
}

Topology build_topology(const ExperimentConfig& cfg) {
    Topology topo;
    if (cfg.topology.kind == "full")
        topo.kind = TopologyKind::full;
    else if (cfg.topology.kind == "ring")
        topo.kind = TopologyKind::ring;
    else
        topo.kind = TopologyKind::random_p;
    topo.edge_prob = cfg.topology.edge_prob;
    topo.assignment = cfg.topology.bandwidth_assignment == "agent"
                          ? BandwidthAssignment::per_agent
                          : BandwidthAssignment::per_edge;
    topo.seed = cfg.topology.seed ? *cfg.topology.seed : rng::mix(cfg.seed, 0x7070);
    topo.bandwidths.clear();
    for (std::size_t i = 0; i < cfg.topology.bandwidths_mbps.size(); ++i) {
        const double weight =
            cfg.topology.bandwidth_weights.empty() ? 1.0 : cfg.topology.bandwidth_weights[i];
        topo.bandwidths.emplace_back(cfg.topology.bandwidths_mbps[i] * kBytesPerSecondPerMbps,
                                     weight);
    }
    return topo;
}

ChurnPolicy build_churn(const ExperimentConfig& cfg) {
    ChurnPolicy churn;
    if (!cfg.churn) {
        churn.fraction = 0.0;
        return churn;
    }
    churn.fraction = cfg.churn->fraction;
    churn.period_rounds = cfg.churn->period_rounds;
    churn.seed = cfg.churn->seed ? *cfg.churn->seed : rng::mix(cfg.seed, 0xC0);
    churn.speed_pool.clear();
    for (double cpu : cfg.agents.speeds_cpu)
        churn.speed_pool.push_back(cpu * kBatchesPerSecondPerCpu);
    return churn;
}

AllReduceModel build_aggregation(const ExperimentConfig& cfg, const ModelSpec& model) {
    AllReduceModel agg;
    agg.algorithm = cfg.aggregation.algorithm == "ring" ? AllReduceAlgo::ring
                                                        : AllReduceAlgo::halving_doubling;
    agg.latency_s = cfg.aggregation.latency_s;
    agg.model_bytes =
        cfg.aggregation.model_bytes ? *cfg.aggregation.model_bytes : total_param_bytes(model);
    if (!(agg.model_bytes > 0.0)) agg.model_bytes = 1.0;
    return agg;
}

MixtureSpec build_mixture(const ExperimentConfig& cfg) {
    MixtureSpec spec;
    spec.classes = cfg.learning.data.classes;
    spec.dim = cfg.learning.data.dim;
    spec.samples = cfg.learning.data.samples;
    spec.mean_scale = cfg.learning.data.mean_scale;
    spec.sigma = cfg.learning.data.sigma;
    spec.label_skew = cfg.learning.data.label_skew;
    return spec;
}

} // namespace comdml
