// SPDX-License-Identifier: Apache-2.0

#include "comdml/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "comdml/rng.hpp"

namespace comdml {

AggregateResult aggregate(std::span<const WeightedModel> models) {
    if (models.empty()) throw ShapeMismatch("aggregate: no models");
    const SplitNet& ref = *models.front().net;

    double total_w = 0.0;
    for (const auto& m : models) {
        if (!m.net) throw ShapeMismatch("aggregate: null model");
        if (m.weight < 0.0) throw ShapeMismatch("aggregate: negative weight");
        if (m.net->layers.size() != ref.layers.size())
            throw ShapeMismatch("aggregate: layer count mismatch");
        for (std::size_t l = 0; l < ref.layers.size(); ++l)
            if (!m.net->layers[l].w.same_shape(ref.layers[l].w))
                throw ShapeMismatch("aggregate: layer " + std::to_string(l + 1) +
                                    " shape mismatch");
        total_w += m.weight;
    }

    // All-zero weights degrade to a uniform mean.
    std::vector<double> u(models.size());
    for (std::size_t k = 0; k < models.size(); ++k)
        u[k] = total_w > 0.0 ? models[k].weight / total_w
                             : 1.0 / static_cast<double>(models.size());

    AggregateResult out;
    out.layers.resize(ref.layers.size());
    for (std::size_t l = 0; l < ref.layers.size(); ++l) {
        DenseLayer& dst = out.layers[l];
        dst.w = kern::Mat(ref.layers[l].w.rows, ref.layers[l].w.cols);
        dst.b.assign(ref.layers[l].b.size(), 0.0);
        for (std::size_t k = 0; k < models.size(); ++k) {
            const DenseLayer& src = models[k].net->layers[l];
            for (std::size_t i = 0; i < dst.w.a.size(); ++i) dst.w.a[i] += u[k] * src.w.a[i];
            for (std::size_t i = 0; i < dst.b.size(); ++i) dst.b[i] += u[k] * src.b[i];
        }
    }

    // Aux heads: mean within each same-split group, weights renormalized.
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k < models.size(); ++k)
        if (models[k].net->split_at >= 1) groups[models[k].net->split_at].push_back(k);
    for (const auto& [m, member_idx] : groups) {
        double gw = 0.0;
        for (std::size_t k : member_idx) gw += models[k].weight;
        const DenseLayer* first = nullptr;
        for (std::size_t k : member_idx) {
            auto it = models[k].net->aux_heads.find(m);
            if (it == models[k].net->aux_heads.end())
                throw ShapeMismatch("aggregate: model missing aux head for split " +
                                    std::to_string(m));
            if (!first)
                first = &it->second;
            else if (!it->second.w.same_shape(first->w))
                throw ShapeMismatch("aggregate: aux head shape mismatch at split " +
                                    std::to_string(m));
        }
        DenseLayer head;
        head.w = kern::Mat(first->w.rows, first->w.cols);
        head.b.assign(first->b.size(), 0.0);
        for (std::size_t k : member_idx) {
            const double w = gw > 0.0 ? models[k].weight / gw
                                      : 1.0 / static_cast<double>(member_idx.size());
            const DenseLayer& src = models[k].net->aux_heads.at(m);
            for (std::size_t i = 0; i < head.w.a.size(); ++i) head.w.a[i] += w * src.w.a[i];
            for (std::size_t i = 0; i < head.b.size(); ++i) head.b[i] += w * src.b[i];
        }
        out.aux_by_split.emplace(m, std::move(head));
    }
    return out;
}

DriftEstimate drift_estimate(std::span<const double> outputs_r,
                             std::span<const double> outputs_ref, int bins) {
    if (outputs_r.empty() || outputs_ref.empty())
        throw EmptySample("drift_estimate: empty sample");
    if (bins < 1) throw Error("drift_estimate: bins must be >= 1");

    double lo = outputs_r.front();
    double hi = lo;
    for (double v : outputs_r) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : outputs_ref) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    DriftEstimate est;
    est.bins = bins;
    if (!(hi > lo)) return est; // all mass in one shared bin

    auto hist = [&](std::span<const double> xs) {
        std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
        const double inv_n = 1.0 / static_cast<double>(xs.size());
        for (double v : xs) {
            auto idx = static_cast<std::size_t>((v - lo) / (hi - lo) * bins);
            if (idx >= static_cast<std::size_t>(bins)) idx = static_cast<std::size_t>(bins) - 1;
            h[idx] += inv_n;
        }
        return h;
    };
    const auto pa = hist(outputs_r);
    const auto pb = hist(outputs_ref);
    double dist = 0.0;
    for (std::size_t k = 0; k < pa.size(); ++k) dist += std::abs(pa[k] - pb[k]);
    est.distance = dist;
    return est;
}

ModelSpec model_spec_for_net(const SplitNet& net, int batch_size) {
    ModelSpec spec;
    double total_cost = 0.0;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        LayerSpec ls;
        ls.name = "dense" + std::to_string(l + 1);
        ls.cost = static_cast<double>(layer.in_dim() * layer.out_dim());
        ls.out_bytes = static_cast<double>(batch_size) * static_cast<double>(layer.out_dim()) * 8.0;
        ls.param_bytes = static_cast<double>(layer.in_dim() * layer.out_dim() + layer.out_dim()) * 8.0;
        total_cost += ls.cost;
        spec.layers.push_back(ls);
    }
    // Aux head cost as one constant fraction: mean head cost over split points.
    double aux_cost = 0.0;
    const int classes = net.num_classes();
    for (int m = 1; m < net.layer_count(); ++m)
        aux_cost += static_cast<double>(net.width_after(m) * classes + classes);
    if (net.layer_count() > 1) aux_cost /= static_cast<double>(net.layer_count() - 1);
    spec.aux_cost_frac = total_cost > 0.0 ? aux_cost / total_cost : 0.0;
    spec.aux_out_classes = classes;
    return spec;
}

namespace {

struct WorkUnit {
    enum Kind { own_task, pair_task } kind = own_task;
    int agent_idx = 0;   // owner of the trained model (slow side for pairs)
    int split_id = 0;    // pair_task only
};

kern::Mat gather_rows(const kern::Mat& x, const std::vector<int>& rows) {
    kern::Mat out(rows.size(), x.cols);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < x.cols; ++c)
            out(r, c) = x(static_cast<std::size_t>(rows[r]), c);
    return out;
}

std::vector<int> gather_labels(const std::vector<int>& y, const std::vector<int>& rows) {
    std::vector<int> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        out[r] = y[static_cast<std::size_t>(rows[r])];
    return out;
}

// One local epoch: the agent's samples in a seeded order, chunked into
// batches (last batch may be short).
std::vector<std::vector<int>> epoch_batches(const std::vector<int>& partition, int batch_size,
                                            std::uint64_t stream_seed) {
    std::vector<int> order = partition;
    rng::Engine g(stream_seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::size_t j = rng::uniform_index(g, i);
        std::swap(order[i - 1], order[j]);
    }
    std::vector<std::vector<int>> batches;
    for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(batch_size));
        batches.emplace_back(order.begin() + static_cast<long>(pos),
                             order.begin() + static_cast<long>(end));
    }
    return batches;
}

} // namespace

TrainingResult run_training(std::span<const AgentProfile> agents, const SplitNet& net_template,
                            const SyntheticDataset& data, const TrainingOptions& opts) {
    const int K = static_cast<int>(agents.size());
    if (K < 1) throw Error("run_training: need at least one agent");
    if (data.partitions.size() != agents.size())
        throw ShapeMismatch("run_training: partitions do not match the agent list");
    if (opts.batch_size < 1) throw Error("run_training: batch_size must be >= 1");
    if (opts.rounds < 0) throw Error("run_training: rounds must be >= 0");

    std::map<AgentId, int> idx_of;
    for (int i = 0; i < K; ++i) {
        validate(agents[static_cast<std::size_t>(i)]);
        if (!idx_of.emplace(agents[static_cast<std::size_t>(i)].id, i).second)
            throw Error("run_training: duplicate agent id");
    }

    // The scheduler sees split profiles derived from the real network shapes.
    const ModelSpec spec = model_spec_for_net(net_template, opts.batch_size);
    const auto splits = profile_splits(spec);
    SplitTable table;
    for (const auto& a : agents) table[a.id] = splits;

    std::vector<SplitNet> models(static_cast<std::size_t>(K), net_template);
    for (auto& m : models) m.split_at = 0;

    const int L = net_template.layer_count();
    const int probe_n = std::min<int>(opts.drift_probe_samples, static_cast<int>(data.x.rows));
    std::vector<int> probe_rows(static_cast<std::size_t>(probe_n));
    for (int i = 0; i < probe_n; ++i) probe_rows[static_cast<std::size_t>(i)] = i;
    const kern::Mat probe_x = gather_rows(data.x, probe_rows);

    TrainingResult result;
    result.initial_loss = eval_loss(net_template, data.x, data.y);
    result.initial_accuracy = eval_accuracy(net_template, data.x, data.y);

    // probe_z[r][m-1]: first coordinate of the prefix output at split m.
    std::vector<std::vector<std::vector<double>>> probe_z;

    double lr = opts.lr.eta0;
    double best_loss = result.initial_loss;
    int stall_rounds = 0;

    for (int r = 0; r < opts.rounds; ++r) {
        PairingPlan plan;
        if (opts.plan_source == PlanSource::comdml) {
            GreedyOptions gopts;
            gopts.improvement_threshold = opts.improvement_threshold;
            plan = greedy_pair(agents, table, gopts);
        } else {
            for (const auto& a : agents) plan.independents.push_back(a.id);
        }

        // Work units own disjoint models: an agent's own training touches its
        // model; a pair's split training touches the slow agent's model only
        // (that model's suffix is what the helper trains).
        std::vector<WorkUnit> units;
        std::map<AgentId, const PairAssignment*> pair_of_slow;
        for (const auto& p : plan.pairs) pair_of_slow[p.slow] = &p;
        for (int i = 0; i < K; ++i) {
            const AgentId id = agents[static_cast<std::size_t>(i)].id;
            auto it = pair_of_slow.find(id);
            if (it != pair_of_slow.end())
                units.push_back({WorkUnit::pair_task, i, it->second->split_id});
            else
                units.push_back({WorkUnit::own_task, i, 0});
        }

        const long n_units = static_cast<long>(units.size());
#pragma omp parallel for schedule(dynamic)
        for (long u = 0; u < n_units; ++u) {
            const WorkUnit& unit = units[static_cast<std::size_t>(u)];
            const std::size_t ai = static_cast<std::size_t>(unit.agent_idx);
            SplitNet& model = models[ai];
            const auto batches = epoch_batches(
                data.partitions[ai], opts.batch_size,
                rng::mix(opts.seed, 0xE9,
                         static_cast<std::uint64_t>(agents[ai].id),
                         static_cast<std::uint64_t>(r)));
            if (unit.kind == WorkUnit::own_task) {
                model.split_at = 0;
                for (const auto& rows : batches) {
                    const kern::Mat xb = gather_rows(data.x, rows);
                    const auto yb = gather_labels(data.y, rows);
                    full_step(model, xb, yb, lr);
                }
            } else {
                model.split_at = unit.split_id;
                for (const auto& rows : batches) {
                    const kern::Mat xb = gather_rows(data.x, rows);
                    const auto yb = gather_labels(data.y, rows);
                    // The transfer: activations from the current prefix,
                    // detached; both sides then update in parallel.
                    const kern::Mat zb = slow_forward(model, xb, unit.split_id);
                    slow_side_step(model, xb, yb, lr);
                    fast_side_step(model, zb, yb, lr);
                }
            }
        }

        // Decentralized aggregation: weighted mean over every agent's
        // reassembled full model (a paired slow agent's model already holds
        // its prefix plus the helper-trained suffix). Accumulation order is
        // fixed by agent id so the result is input-permutation stable.
        std::vector<int> id_order(static_cast<std::size_t>(K));
        for (int i = 0; i < K; ++i) id_order[static_cast<std::size_t>(i)] = i;
        std::sort(id_order.begin(), id_order.end(), [&](int a, int b) {
            return agents[static_cast<std::size_t>(a)].id < agents[static_cast<std::size_t>(b)].id;
        });
        std::vector<WeightedModel> wm(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            const std::size_t i = static_cast<std::size_t>(id_order[static_cast<std::size_t>(k)]);
            wm[static_cast<std::size_t>(k)].net = &models[i];
            wm[static_cast<std::size_t>(k)].weight =
                opts.uniform_average ? 1.0 : static_cast<double>(data.partitions[i].size());
        }
        AggregateResult agg = aggregate(wm);
        for (int i = 0; i < K; ++i) {
            SplitNet& model = models[static_cast<std::size_t>(i)];
            const int m = model.split_at;
            model.layers = agg.layers;
            if (m >= 1) {
                auto it = agg.aux_by_split.find(m);
                if (it != agg.aux_by_split.end()) model.aux_heads[m] = it->second;
            }
            model.split_at = 0;
        }

        RoundMetrics metrics;
        metrics.round = r;
        metrics.lr = lr;
        metrics.plan = plan;
        metrics.loss = eval_loss(models[0], data.x, data.y);
        metrics.accuracy = eval_accuracy(models[0], data.x, data.y);
        result.rounds.push_back(std::move(metrics));

        std::vector<std::vector<double>> per_split;
        per_split.reserve(static_cast<std::size_t>(L - 1));
        for (int m = 1; m < L; ++m) {
            const kern::Mat z = slow_forward(models[0], probe_x, m);
            std::vector<double> first_coord(z.rows);
            for (std::size_t b = 0; b < z.rows; ++b) first_coord[b] = z(b, 0);
            per_split.push_back(std::move(first_coord));
        }
        probe_z.push_back(std::move(per_split));

        // Plateau decay: no improvement beyond tol for plateau_rounds rounds.
        const double loss = result.rounds.back().loss;
        if (loss < best_loss - opts.lr.plateau_tol) {
            best_loss = loss;
            stall_rounds = 0;
        } else if (++stall_rounds >= opts.lr.plateau_rounds) {
            lr *= opts.lr.decay_factor;
            stall_rounds = 0;
        }
    }

    // Drift against the final round's prefix-output distribution.
    if (!result.rounds.empty()) {
        const auto& ref = probe_z.back();
        for (std::size_t r = 0; r < result.rounds.size(); ++r) {
            auto& metrics = result.rounds[r];
            double sum = 0.0;
            for (std::size_t mi = 0; mi < ref.size(); ++mi) {
                DriftEstimate est = drift_estimate(probe_z[r][mi], ref[mi], opts.drift_bins);
                est.round = static_cast<int>(r);
                sum += est.distance;
                metrics.drifts.push_back(est);
            }
            metrics.drift_mean = ref.empty() ? 0.0 : sum / static_cast<double>(ref.size());
        }
    }
    return result;
}

} // namespace comdml
