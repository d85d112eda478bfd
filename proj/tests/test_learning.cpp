// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <functional>

#include "comdml/dataset.hpp"
#include "comdml/rng.hpp"
#include "comdml/training.hpp"

using namespace comdml;
using kern::Mat;

namespace {

Mat random_batch(std::size_t rows, std::size_t cols, rng::Engine& g) {
    Mat m(rows, cols);
    for (auto& v : m.a) v = rng::uniform_range(g, -1.5, 1.5);
    return m;
}

std::vector<int> random_labels(std::size_t n, int classes, rng::Engine& g) {
    std::vector<int> y(n);
    for (auto& l : y) l = static_cast<int>(rng::uniform_index(g, static_cast<std::size_t>(classes)));
    return y;
}

SplitNet small_net(rng::Engine& g, int* input_dim_out = nullptr) {
    const int d = 2 + static_cast<int>(rng::uniform_index(g, 6));
    const int classes = 2 + static_cast<int>(rng::uniform_index(g, 3));
    const int depth = 2 + static_cast<int>(rng::uniform_index(g, 3));
    std::vector<int> widths;
    for (int l = 0; l < depth - 1; ++l)
        widths.push_back(2 + static_cast<int>(rng::uniform_index(g, 6)));
    if (input_dim_out) *input_dim_out = d;
    return make_split_net(d, widths, classes, g());
}

// Collects mutable references to a parameter block.
std::vector<double*> layer_params(DenseLayer& layer) {
    std::vector<double*> out;
    for (auto& v : layer.w.a) out.push_back(&v);
    for (auto& v : layer.b) out.push_back(&v);
    return out;
}

std::vector<double*> slow_params(SplitNet& net) {
    std::vector<double*> out;
    for (int l = 0; l < net.split_at; ++l) {
        auto p = layer_params(net.layers[static_cast<std::size_t>(l)]);
        out.insert(out.end(), p.begin(), p.end());
    }
    auto p = layer_params(net.aux_heads.at(net.split_at));
    out.insert(out.end(), p.begin(), p.end());
    return out;
}

std::vector<double*> fast_params(SplitNet& net, int from) {
    std::vector<double*> out;
    for (int l = from; l < net.layer_count(); ++l) {
        auto p = layer_params(net.layers[static_cast<std::size_t>(l)]);
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

// Central-difference gradient check against the analytic step. The analytic
// gradient is recovered from a unit-lr step; relative error uses the usual
// max(1, |analytic|, |numeric|) floor.
void check_gradients(const SplitNet& net,
                     const std::function<double(SplitNet&, double)>& step,
                     const std::function<std::vector<double*>(SplitNet&)>& params,
                     double tol = 1e-4) {
    SplitNet stepped = net;
    step(stepped, 1.0);

    SplitNet base = net;
    auto base_params = params(base);
    auto stepped_params = params(stepped);
    REQUIRE(base_params.size() == stepped_params.size());

    const double h = 1e-5;
    for (std::size_t i = 0; i < base_params.size(); ++i) {
        const double analytic = *base_params[i] - *stepped_params[i];
        const double keep = *base_params[i];

        *base_params[i] = keep + h;
        const double loss_plus = step(base, 0.0);
        *base_params[i] = keep - h;
        const double loss_minus = step(base, 0.0);
        *base_params[i] = keep;

        const double numeric = (loss_plus - loss_minus) / (2.0 * h);
        const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
        CHECK(std::abs(analytic - numeric) / denom <= tol);
    }
}

} // namespace

TEST_SUITE("learning") {

TEST_CASE("split plus compose reproduces the full forward map exactly") {
    rng::Engine g(201);
    for (int iter = 0; iter < 30; ++iter) {
        int d = 0;
        const SplitNet net = small_net(g, &d);
        const Mat x = random_batch(1 + rng::uniform_index(g, 6), static_cast<std::size_t>(d), g);
        const Mat full = forward(net, x);
        for (int m = 1; m < net.layer_count(); ++m) {
            const Mat z = slow_forward(net, x, m);
            const Mat composed = fast_forward(net, z, m);
            REQUIRE(composed.a.size() == full.a.size());
            CHECK(composed.a == full.a); // bitwise: identical op order
        }
    }
}

TEST_CASE("zero learning rate leaves parameters untouched") {
    rng::Engine g(202);
    int d = 0;
    SplitNet net = small_net(g, &d);
    net.split_at = 1;
    const Mat x = random_batch(4, static_cast<std::size_t>(d), g);
    const auto y = random_labels(4, net.num_classes(), g);
    const SplitNet before = net;

    const double loss_slow = slow_side_step(net, x, y, 0.0);
    CHECK(loss_slow > 0.0);
    const Mat z = slow_forward(net, x, 1);
    const double loss_fast = fast_side_step(net, z, y, 0.0);
    CHECK(loss_fast > 0.0);
    full_step(net, x, y, 0.0);

    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        CHECK(net.layers[l].w.a == before.layers[l].w.a);
        CHECK(net.layers[l].b == before.layers[l].b);
    }
    CHECK(net.aux_heads.at(1).w.a == before.aux_heads.at(1).w.a);
}

TEST_CASE("slow-side gradients match central finite differences") {
    rng::Engine g(203);
    for (int iter = 0; iter < 5; ++iter) {
        int d = 0;
        SplitNet net = small_net(g, &d);
        net.split_at = 1 + static_cast<int>(rng::uniform_index(
                               g, static_cast<std::size_t>(net.layer_count() - 1)));
        const Mat x = random_batch(3, static_cast<std::size_t>(d), g);
        const auto y = random_labels(3, net.num_classes(), g);
        check_gradients(
            net, [&](SplitNet& n, double lr) { return slow_side_step(n, x, y, lr); },
            [](SplitNet& n) { return slow_params(n); });
    }
}

TEST_CASE("fast-side gradients match central finite differences") {
    rng::Engine g(204);
    for (int iter = 0; iter < 5; ++iter) {
        int d = 0;
        SplitNet net = small_net(g, &d);
        net.split_at = 1 + static_cast<int>(rng::uniform_index(
                               g, static_cast<std::size_t>(net.layer_count() - 1)));
        const Mat x = random_batch(3, static_cast<std::size_t>(d), g);
        const auto y = random_labels(3, net.num_classes(), g);
        const Mat z = slow_forward(net, x, net.split_at);
        const int m = net.split_at;
        check_gradients(
            net, [&](SplitNet& n, double lr) { return fast_side_step(n, z, y, lr); },
            [m](SplitNet& n) { return fast_params(n, m); });
    }
}

TEST_CASE("full-model gradients match central finite differences") {
    rng::Engine g(205);
    for (int iter = 0; iter < 3; ++iter) {
        int d = 0;
        SplitNet net = small_net(g, &d);
        const Mat x = random_batch(3, static_cast<std::size_t>(d), g);
        const auto y = random_labels(3, net.num_classes(), g);
        check_gradients(
            net, [&](SplitNet& n, double lr) { return full_step(n, x, y, lr); },
            [](SplitNet& n) { return fast_params(n, 0); });
    }
}

TEST_CASE("step ops never touch the other side's parameters") {
    rng::Engine g(206);
    int d = 0;
    SplitNet net = small_net(g, &d);
    net.split_at = 1;
    const Mat x = random_batch(4, static_cast<std::size_t>(d), g);
    const auto y = random_labels(4, net.num_classes(), g);

    SplitNet after_slow = net;
    slow_side_step(after_slow, x, y, 0.5);
    for (int l = net.split_at; l < net.layer_count(); ++l)
        CHECK(after_slow.layers[static_cast<std::size_t>(l)].w.a ==
              net.layers[static_cast<std::size_t>(l)].w.a);

    SplitNet after_fast = net;
    const Mat z = slow_forward(net, x, net.split_at);
    fast_side_step(after_fast, z, y, 0.5);
    for (int l = 0; l < net.split_at; ++l)
        CHECK(after_fast.layers[static_cast<std::size_t>(l)].w.a ==
              net.layers[static_cast<std::size_t>(l)].w.a);
    for (const auto& [m, head] : net.aux_heads)
        CHECK(after_fast.aux_heads.at(m).w.a == head.w.a);
}

TEST_CASE("local loss fits separable data") {
    // Two linearly separable clusters; 200 prefix+aux steps at lr 0.1.
    const int n = 40;
    const int d = 4;
    rng::Engine g(207);
    Mat x(n, d);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
        y[static_cast<std::size_t>(i)] = i % 2;
        const double sign = y[static_cast<std::size_t>(i)] == 0 ? 1.0 : -1.0;
        for (int j = 0; j < d; ++j)
            x(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                2.0 * sign + 0.3 * rng::normal(g);
    }
    SplitNet net = make_split_net(d, {8}, 2, 99);
    net.split_at = 1;
    double loss = 0.0;
    for (int step = 0; step < 200; ++step) loss = slow_side_step(net, x, y, 0.1);
    CHECK(loss < 0.1);
}

TEST_CASE("fast side training equals plain training of the suffix network") {
    rng::Engine g(208);
    const int d = 6;
    SplitNet a = make_split_net(d, {5, 7}, 3, 4242);
    a.split_at = 1;

    // Standalone copy of the suffix, trained as an ordinary network on the
    // transmitted activations.
    SplitNet b;
    b.layers.assign(a.layers.begin() + 1, a.layers.end());
    b.split_at = 0;

    const Mat x = random_batch(8, d, g);
    const auto y = random_labels(8, 3, g);
    for (int step = 0; step < 20; ++step) {
        const Mat z = slow_forward(a, x, 1); // prefix fixed throughout
        const double la = fast_side_step(a, z, y, 0.05);
        const double lb = full_step(b, z, y, 0.05);
        CHECK(la == lb);
    }
    for (std::size_t l = 0; l < b.layers.size(); ++l) {
        CHECK(a.layers[l + 1].w.a == b.layers[l].w.a);
        CHECK(a.layers[l + 1].b == b.layers[l].b);
    }
}

TEST_CASE("aggregate is an identity on identical models") {
    rng::Engine g(209);
    const SplitNet net = make_split_net(4, {5}, 2, 7);
    std::vector<WeightedModel> models{{&net, 1.0}, {&net, 3.0}, {&net, 0.5}};
    const AggregateResult res = aggregate(models);
    for (std::size_t l = 0; l < net.layers.size(); ++l)
        for (std::size_t i = 0; i < net.layers[l].w.a.size(); ++i)
            CHECK(res.layers[l].w.a[i] == doctest::Approx(net.layers[l].w.a[i]).epsilon(1e-12));
}

TEST_CASE("aggregate with 1:3 weights is the 0.25/0.75 blend") {
    SplitNet a = make_split_net(3, {4}, 2, 1);
    SplitNet b = make_split_net(3, {4}, 2, 2);
    std::vector<WeightedModel> models{{&a, 1.0}, {&b, 3.0}};
    const AggregateResult res = aggregate(models);
    for (std::size_t l = 0; l < a.layers.size(); ++l)
        for (std::size_t i = 0; i < a.layers[l].w.a.size(); ++i)
            CHECK(res.layers[l].w.a[i] ==
                  doctest::Approx(0.25 * a.layers[l].w.a[i] + 0.75 * b.layers[l].w.a[i]));
}

TEST_CASE("aggregate of ones twos threes is all twos") {
    SplitNet a = make_split_net(3, {4}, 2, 1);
    SplitNet b = a;
    SplitNet c = a;
    for (auto& layer : a.layers) {
        for (auto& v : layer.w.a) v = 1.0;
        for (auto& v : layer.b) v = 1.0;
    }
    for (auto& layer : b.layers) {
        for (auto& v : layer.w.a) v = 2.0;
        for (auto& v : layer.b) v = 2.0;
    }
    for (auto& layer : c.layers) {
        for (auto& v : layer.w.a) v = 3.0;
        for (auto& v : layer.b) v = 3.0;
    }
    std::vector<WeightedModel> models{{&a, 5.0}, {&b, 5.0}, {&c, 5.0}};
    const AggregateResult res = aggregate(models);
    for (const auto& layer : res.layers)
        for (double v : layer.w.a) CHECK(v == doctest::Approx(2.0));
}

TEST_CASE("aggregate is affine equivariant") {
    rng::Engine g(210);
    SplitNet a = make_split_net(4, {5, 5}, 2, 11);
    SplitNet b = make_split_net(4, {5, 5}, 2, 12);
    const double delta = 0.737;
    std::vector<WeightedModel> models{{&a, 2.0}, {&b, 3.0}};
    const AggregateResult base = aggregate(models);

    SplitNet a2 = a;
    SplitNet b2 = b;
    for (auto* net : {&a2, &b2})
        for (auto& layer : net->layers) {
            for (auto& v : layer.w.a) v += delta;
            for (auto& v : layer.b) v += delta;
        }
    std::vector<WeightedModel> shifted{{&a2, 2.0}, {&b2, 3.0}};
    const AggregateResult moved = aggregate(shifted);
    for (std::size_t l = 0; l < base.layers.size(); ++l)
        for (std::size_t i = 0; i < base.layers[l].w.a.size(); ++i)
            CHECK(moved.layers[l].w.a[i] ==
                  doctest::Approx(base.layers[l].w.a[i] + delta).epsilon(1e-9));
}

TEST_CASE("aux heads average only within the same split") {
    SplitNet a = make_split_net(4, {5, 5}, 2, 21);
    SplitNet b = make_split_net(4, {5, 5}, 2, 22);
    SplitNet c = make_split_net(4, {5, 5}, 2, 23);
    a.split_at = 2;
    b.split_at = 2;
    c.split_at = 0; // keeps its own heads
    std::vector<WeightedModel> models{{&a, 1.0}, {&b, 1.0}, {&c, 1.0}};
    const AggregateResult res = aggregate(models);
    REQUIRE(res.aux_by_split.size() == 1);
    const DenseLayer& head = res.aux_by_split.at(2);
    for (std::size_t i = 0; i < head.w.a.size(); ++i)
        CHECK(head.w.a[i] ==
              doctest::Approx(0.5 * (a.aux_heads.at(2).w.a[i] + b.aux_heads.at(2).w.a[i])));
}

TEST_CASE("aggregate rejects mismatched shapes and empty input") {
    SplitNet a = make_split_net(4, {5}, 2, 1);
    SplitNet b = make_split_net(4, {6}, 2, 1);
    std::vector<WeightedModel> bad{{&a, 1.0}, {&b, 1.0}};
    CHECK_THROWS_AS(aggregate(bad), ShapeMismatch);
    CHECK_THROWS_AS(aggregate({}), ShapeMismatch);
}

TEST_CASE("drift distance of a sample against itself is zero") {
    std::vector<double> xs{0.1, 0.5, -0.2, 0.8, 0.3};
    const DriftEstimate est = drift_estimate(xs, xs, 32);
    CHECK(est.distance == 0.0);
    CHECK(est.bins == 32);
}

TEST_CASE("disjoint supports give the maximal distance of two") {
    std::vector<double> a(8), b(8);
    for (int i = 0; i < 8; ++i) {
        a[static_cast<std::size_t>(i)] = -2.0 + 0.05 * i;
        b[static_cast<std::size_t>(i)] = 2.0 + 0.05 * i;
    }
    CHECK(drift_estimate(a, b, 32).distance == 2.0);
}

TEST_CASE("drift rejects empty samples and stays within bounds") {
    std::vector<double> xs{1.0};
    CHECK_THROWS_AS(drift_estimate({}, xs, 8), EmptySample);
    CHECK_THROWS_AS(drift_estimate(xs, {}, 8), EmptySample);

    rng::Engine g(211);
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<double> a(1 + rng::uniform_index(g, 40));
        std::vector<double> b(1 + rng::uniform_index(g, 40));
        for (auto& v : a) v = rng::normal(g);
        for (auto& v : b) v = rng::normal(g) + rng::uniform_range(g, -3.0, 3.0);
        const double dist = drift_estimate(a, b, 16).distance;
        CHECK(dist >= 0.0);
        CHECK(dist <= 2.0);
    }
}

TEST_CASE("zero-round training reports chance-level accuracy") {
    MixtureSpec spec;
    spec.samples = 1000;
    const SyntheticDataset data = make_gaussian_mixture(spec, 4, 55);
    std::vector<AgentProfile> agents(4);
    for (int i = 0; i < 4; ++i) {
        agents[static_cast<std::size_t>(i)].id = i;
        agents[static_cast<std::size_t>(i)].proc_speed = 10.0 * (i + 1);
        agents[static_cast<std::size_t>(i)].num_batches = 3;
        agents[static_cast<std::size_t>(i)].dataset_size = 250;
        for (int j = 0; j < 4; ++j)
            if (i != j) agents[static_cast<std::size_t>(i)].links[j] = 1e6;
    }
    const SplitNet net = make_split_net(spec.dim, {8, 8}, spec.classes, 3);
    TrainingOptions opts;
    opts.rounds = 0;
    opts.batch_size = 100;
    const TrainingResult res = run_training(agents, net, data, opts);
    CHECK(res.rounds.empty());
    // Untrained logits are near zero, so the loss sits at the ln(C) chance
    // level; raw accuracy of a random map on two antipodal clusters is
    // seed-dependent, so it only gets a wide band.
    CHECK(res.initial_loss == doctest::Approx(std::log(2.0)).epsilon(0.3));
    CHECK(res.initial_accuracy >= 0.3);
    CHECK(res.initial_accuracy <= 0.7);
}

TEST_CASE("training is reproducible across kernel dispatch modes") {
    MixtureSpec spec;
    spec.samples = 600;
    const SyntheticDataset data = make_gaussian_mixture(spec, 4, 91);
    std::vector<AgentProfile> agents(4);
    const double speeds[] = {40.0, 20.0, 5.0, 2.0};
    for (int i = 0; i < 4; ++i) {
        agents[static_cast<std::size_t>(i)].id = i;
        agents[static_cast<std::size_t>(i)].proc_speed = speeds[i];
        agents[static_cast<std::size_t>(i)].num_batches = 2;
        agents[static_cast<std::size_t>(i)].dataset_size = 150;
        for (int j = 0; j < 4; ++j)
            if (i != j) agents[static_cast<std::size_t>(i)].links[j] = 2.5e6;
    }
    const SplitNet net = make_split_net(spec.dim, {8, 8}, spec.classes, 13);
    TrainingOptions opts;
    opts.rounds = 4;
    opts.batch_size = 100;
    opts.lr.eta0 = 0.05;
    opts.seed = 5;

    kern::set_parallel(true);
    const TrainingResult par = run_training(agents, net, data, opts);
    kern::set_parallel(false);
    const TrainingResult ser = run_training(agents, net, data, opts);
    kern::set_parallel(true);

    REQUIRE(par.rounds.size() == ser.rounds.size());
    CHECK(par.initial_loss == ser.initial_loss);
    for (std::size_t r = 0; r < par.rounds.size(); ++r) {
        CHECK(par.rounds[r].loss == ser.rounds[r].loss);
        CHECK(par.rounds[r].accuracy == ser.rounds[r].accuracy);
        CHECK(par.rounds[r].drift_mean == ser.rounds[r].drift_mean);
    }
    // The heterogeneous ladder must actually exercise the split path.
    bool saw_pairs = false;
    for (const auto& r : par.rounds) saw_pairs |= !r.plan.pairs.empty();
    CHECK(saw_pairs);
}

TEST_CASE("gaussian mixture partitions cover the dataset") {
    MixtureSpec spec;
    spec.classes = 3;
    spec.dim = 5;
    spec.samples = 301;
    const SyntheticDataset data = make_gaussian_mixture(spec, 4, 77);
    CHECK(data.x.rows == 301);
    std::size_t total = 0;
    for (const auto& part : data.partitions) total += part.size();
    CHECK(total == 301);
    for (int label : data.y) {
        CHECK(label >= 0);
        CHECK(label < 3);
    }

    // Label skew still covers everything and is reproducible.
    spec.label_skew = 0.5;
    const SyntheticDataset skew1 = make_gaussian_mixture(spec, 4, 78);
    const SyntheticDataset skew2 = make_gaussian_mixture(spec, 4, 78);
    std::size_t skew_total = 0;
    for (const auto& part : skew1.partitions) skew_total += part.size();
    CHECK(skew_total == 301);
    CHECK(skew1.x.a == skew2.x.a);
    CHECK(skew1.partitions == skew2.partitions);
}

} // TEST_SUITE
