// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "comdml/errors.hpp"
#include "comdml/kernels.hpp"

namespace comdml {

struct DenseLayer {
    kern::Mat w;           // out x in
    std::vector<double> b; // out

    std::size_t in_dim() const { return w.cols; }
    std::size_t out_dim() const { return w.rows; }
};

// Feed-forward classifier split into a slow-side prefix (layers 1..m), a
// fast-side suffix (layers m+1..L) and per-split auxiliary heads used for
// local-loss training of the prefix. Hidden layers use tanh; the final layer
// is identity (pre-softmax). Composing prefix and suffix reproduces the full
// forward map exactly.
struct SplitNet {
    std::vector<DenseLayer> layers;
    int split_at = 0;                    // m; 0 = unsplit
    std::map<int, DenseLayer> aux_heads; // split m -> head from layer-m width to classes

    int layer_count() const { return static_cast<int>(layers.size()); }
    int input_dim() const { return static_cast<int>(layers.front().in_dim()); }
    int num_classes() const { return static_cast<int>(layers.back().out_dim()); }
    int width_after(int m) const { return static_cast<int>(layers[static_cast<std::size_t>(m - 1)].out_dim()); }
};

// Seeded init; aux heads are created for every split point up front so their
// initial state never depends on pairing history.
SplitNet make_split_net(int input_dim, const std::vector<int>& hidden_widths, int classes,
                        std::uint64_t seed);

kern::Mat forward(const SplitNet& net, const kern::Mat& x);
kern::Mat slow_forward(const SplitNet& net, const kern::Mat& x, int m); // layers 1..m
kern::Mat fast_forward(const SplitNet& net, const kern::Mat& z, int m); // layers m+1..L

// One SGD step on the local loss of the prefix: cross-entropy of
// aux_head(slow_forward(x)) vs y. Updates layers 1..split_at and the aux head
// only; returns the batch loss before the update.
double slow_side_step(SplitNet& net, const kern::Mat& x, const std::vector<int>& y, double lr);

// One SGD step of the suffix on transmitted activations z (detached; nothing
// propagates into the prefix). Updates layers split_at+1..L only.
double fast_side_step(SplitNet& net, const kern::Mat& z, const std::vector<int>& y, double lr);

// One SGD step of the whole network on its main loss (no aux head); the
// unsplit training path used by agents that did not offload.
double full_step(SplitNet& net, const kern::Mat& x, const std::vector<int>& y, double lr);

double eval_loss(const SplitNet& net, const kern::Mat& x, const std::vector<int>& y);
double eval_accuracy(const SplitNet& net, const kern::Mat& x, const std::vector<int>& y);

} // namespace comdml
