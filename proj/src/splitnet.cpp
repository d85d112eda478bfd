// SPDX-License-Identifier: Apache-2.0

#include "comdml/splitnet.hpp"

#include <cmath>
#include <string>

#include "comdml/rng.hpp"

namespace comdml {

namespace {

DenseLayer init_layer(std::size_t out, std::size_t in, rng::Engine& g) {
    DenseLayer layer;
    layer.w = kern::Mat(out, in);
    layer.b.assign(out, 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& v : layer.w.a) v = rng::uniform_range(g, -scale, scale);
    return layer;
}

void check_input(const SplitNet& net, const kern::Mat& x, const std::vector<int>& y,
                 std::size_t expect_cols) {
    if (x.cols != expect_cols)
        throw ShapeMismatch("input width " + std::to_string(x.cols) + ", expected " +
                            std::to_string(expect_cols));
    if (y.size() != x.rows)
        throw ShapeMismatch("label count " + std::to_string(y.size()) + " != batch " +
                            std::to_string(x.rows));
    for (int label : y)
        if (label < 0 || label >= net.num_classes())
            throw ShapeMismatch("label " + std::to_string(label) + " out of range");
}

// Applies layers [l0, l1) to the input; tanh on every layer except the
// network's last. Composing two ranges executes exactly the op sequence of
// the combined range, which keeps split+compose bitwise equal to the full
// forward map.
kern::Mat forward_range(const SplitNet& net, const kern::Mat& input, int l0, int l1) {
    kern::Mat h = input;
    for (int l = l0; l < l1; ++l) {
        const DenseLayer& layer = net.layers[static_cast<std::size_t>(l)];
        if (h.cols != layer.in_dim())
            throw ShapeMismatch("layer " + std::to_string(l + 1) + " expects width " +
                                std::to_string(layer.in_dim()) + ", got " +
                                std::to_string(h.cols));
        kern::Mat z(h.rows, layer.out_dim());
        kern::dense_forward(h, layer.w, layer.b, z);
        if (l + 1 < net.layer_count()) kern::tanh_forward(z);
        h = std::move(z);
    }
    return h;
}

struct LayerGrads {
    kern::Mat dw;
    std::vector<double> db;
};

void apply_sgd(DenseLayer& layer, const LayerGrads& g, double lr) {
    for (std::size_t i = 0; i < layer.w.a.size(); ++i) layer.w.a[i] -= lr * g.dw.a[i];
    for (std::size_t i = 0; i < layer.b.size(); ++i) layer.b[i] -= lr * g.db[i];
}

// Trains layers l_begin+1..L on cross-entropy given the activation feeding
// layer l_begin+1. Nothing before l_begin is touched.
double suffix_step(SplitNet& net, const kern::Mat& input, const std::vector<int>& y, double lr,
                   int l_begin) {
    const int L = net.layer_count();
    // Forward with cached activations; h[0] = input, h[k] = output of layer l_begin+k.
    std::vector<kern::Mat> h;
    h.reserve(static_cast<std::size_t>(L - l_begin) + 1);
    h.push_back(input);
    for (int l = l_begin; l < L; ++l) {
        const DenseLayer& layer = net.layers[static_cast<std::size_t>(l)];
        if (h.back().cols != layer.in_dim())
            throw ShapeMismatch("layer " + std::to_string(l + 1) + " expects width " +
                                std::to_string(layer.in_dim()) + ", got " +
                                std::to_string(h.back().cols));
        kern::Mat z(h.back().rows, layer.out_dim());
        kern::dense_forward(h.back(), layer.w, layer.b, z);
        if (l + 1 < L) kern::tanh_forward(z);
        h.push_back(std::move(z));
    }

    kern::Mat dlogits(h.back().rows, h.back().cols);
    const double loss = kern::softmax_xent(h.back(), y, dlogits);

    std::vector<LayerGrads> grads(static_cast<std::size_t>(L - l_begin));
    kern::Mat d = std::move(dlogits);
    for (int l = L - 1; l >= l_begin; --l) {
        const DenseLayer& layer = net.layers[static_cast<std::size_t>(l)];
        const kern::Mat& in_act = h[static_cast<std::size_t>(l - l_begin)];
        LayerGrads& g = grads[static_cast<std::size_t>(l - l_begin)];
        g.dw = kern::Mat(layer.out_dim(), layer.in_dim());
        g.db.assign(layer.out_dim(), 0.0);
        kern::grad_weights(d, in_act, g.dw);
        kern::grad_bias(d, g.db);
        if (l > l_begin) {
            kern::Mat dprev(d.rows, layer.in_dim());
            kern::grad_input(d, layer.w, dprev);
            kern::tanh_backward(in_act, dprev); // in_act is a tanh output here
            d = std::move(dprev);
        }
    }
    for (int l = l_begin; l < L; ++l)
        apply_sgd(net.layers[static_cast<std::size_t>(l)], grads[static_cast<std::size_t>(l - l_begin)], lr);
    return loss;
}

} // namespace

SplitNet make_split_net(int input_dim, const std::vector<int>& hidden_widths, int classes,
                        std::uint64_t seed) {
    if (input_dim < 1 || classes < 2)
        throw ShapeMismatch("need input_dim >= 1 and classes >= 2");
    SplitNet net;
    std::vector<int> dims;
    dims.push_back(input_dim);
    for (int w : hidden_widths) {
        if (w < 1) throw ShapeMismatch("hidden width must be >= 1");
        dims.push_back(w);
    }
    dims.push_back(classes);
    if (dims.size() < 3) throw ShapeMismatch("need at least one hidden layer to split");

    rng::Engine layer_gen(rng::mix(seed, 0x11));
    for (std::size_t l = 1; l < dims.size(); ++l)
        net.layers.push_back(init_layer(static_cast<std::size_t>(dims[l]),
                                        static_cast<std::size_t>(dims[l - 1]), layer_gen));

    // Aux heads for every split point up front; their init must not depend on
    // pairing history.
    rng::Engine aux_gen(rng::mix(seed, 0xA0));
    for (int m = 1; m < net.layer_count(); ++m)
        net.aux_heads.emplace(m, init_layer(static_cast<std::size_t>(classes),
                                            static_cast<std::size_t>(net.width_after(m)), aux_gen));
    return net;
}

kern::Mat forward(const SplitNet& net, const kern::Mat& x) {
    return forward_range(net, x, 0, net.layer_count());
}

kern::Mat slow_forward(const SplitNet& net, const kern::Mat& x, int m) {
    if (m < 1 || m >= net.layer_count())
        throw ShapeMismatch("split " + std::to_string(m) + " out of range");
    return forward_range(net, x, 0, m);
}

kern::Mat fast_forward(const SplitNet& net, const kern::Mat& z, int m) {
    if (m < 1 || m >= net.layer_count())
        throw ShapeMismatch("split " + std::to_string(m) + " out of range");
    return forward_range(net, z, m, net.layer_count());
}

double slow_side_step(SplitNet& net, const kern::Mat& x, const std::vector<int>& y, double lr) {
    const int m = net.split_at;
    if (m < 1 || m >= net.layer_count())
        throw ShapeMismatch("slow_side_step requires 1 <= split_at < layer count");
    check_input(net, x, y, static_cast<std::size_t>(net.input_dim()));
    auto aux_it = net.aux_heads.find(m);
    if (aux_it == net.aux_heads.end())
        throw ShapeMismatch("no aux head for split " + std::to_string(m));
    DenseLayer& aux = aux_it->second;
    if (aux.in_dim() != static_cast<std::size_t>(net.width_after(m)))
        throw ShapeMismatch("aux head width mismatch at split " + std::to_string(m));

    // Forward through the prefix, then the aux head.
    std::vector<kern::Mat> h;
    h.reserve(static_cast<std::size_t>(m) + 1);
    h.push_back(x);
    for (int l = 0; l < m; ++l) {
        const DenseLayer& layer = net.layers[static_cast<std::size_t>(l)];
        kern::Mat z(h.back().rows, layer.out_dim());
        kern::dense_forward(h.back(), layer.w, layer.b, z);
        kern::tanh_forward(z); // prefix layers are always hidden layers
        h.push_back(std::move(z));
    }
    kern::Mat logits(x.rows, aux.out_dim());
    kern::dense_forward(h.back(), aux.w, aux.b, logits);

    kern::Mat dlogits(logits.rows, logits.cols);
    const double loss = kern::softmax_xent(logits, y, dlogits);

    LayerGrads aux_g;
    aux_g.dw = kern::Mat(aux.out_dim(), aux.in_dim());
    aux_g.db.assign(aux.out_dim(), 0.0);
    kern::grad_weights(dlogits, h.back(), aux_g.dw);
    kern::grad_bias(dlogits, aux_g.db);

    kern::Mat d(dlogits.rows, aux.in_dim());
    kern::grad_input(dlogits, aux.w, d);
    kern::tanh_backward(h[static_cast<std::size_t>(m)], d);

    std::vector<LayerGrads> grads(static_cast<std::size_t>(m));
    for (int l = m - 1; l >= 0; --l) {
        const DenseLayer& layer = net.layers[static_cast<std::size_t>(l)];
        LayerGrads& g = grads[static_cast<std::size_t>(l)];
        g.dw = kern::Mat(layer.out_dim(), layer.in_dim());
        g.db.assign(layer.out_dim(), 0.0);
        kern::grad_weights(d, h[static_cast<std::size_t>(l)], g.dw);
        kern::grad_bias(d, g.db);
        if (l > 0) {
            kern::Mat dprev(d.rows, layer.in_dim());
            kern::grad_input(d, layer.w, dprev);
            kern::tanh_backward(h[static_cast<std::size_t>(l)], dprev);
            d = std::move(dprev);
        }
    }

    apply_sgd(aux, aux_g, lr);
    for (int l = 0; l < m; ++l)
        apply_sgd(net.layers[static_cast<std::size_t>(l)], grads[static_cast<std::size_t>(l)], lr);
    return loss;
}

double fast_side_step(SplitNet& net, const kern::Mat& z, const std::vector<int>& y, double lr) {
    const int m = net.split_at;
    if (m < 1 || m >= net.layer_count())
        throw ShapeMismatch("fast_side_step requires 1 <= split_at < layer count");
    check_input(net, z, y, static_cast<std::size_t>(net.width_after(m)));
    return suffix_step(net, z, y, lr, m);
}

double full_step(SplitNet& net, const kern::Mat& x, const std::vector<int>& y, double lr) {
    check_input(net, x, y, static_cast<std::size_t>(net.input_dim()));
    return suffix_step(net, x, y, lr, 0);
}

double eval_loss(const SplitNet& net, const kern::Mat& x, const std::vector<int>& y) {
    check_input(net, x, y, static_cast<std::size_t>(net.input_dim()));
    kern::Mat logits = forward(net, x);
    kern::Mat scratch(logits.rows, logits.cols);
    return kern::softmax_xent(logits, y, scratch);
}

double eval_accuracy(const SplitNet& net, const kern::Mat& x, const std::vector<int>& y) {
    check_input(net, x, y, static_cast<std::size_t>(net.input_dim()));
    if (x.rows == 0) return 0.0;
    kern::Mat logits = forward(net, x);
    std::size_t hits = 0;
    for (std::size_t b = 0; b < logits.rows; ++b) {
        std::size_t arg = 0;
        for (std::size_t k = 1; k < logits.cols; ++k)
            if (logits(b, k) > logits(b, arg)) arg = k;
        if (static_cast<int>(arg) == y[b]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(x.rows);
}

} // namespace comdml
