// SPDX-License-Identifier: Apache-2.0

#include "comdml/profiler.hpp"

#include <string>

namespace comdml {

namespace {

void check_model(const ModelSpec& model) {
    if (model.layers.size() < 2)
        throw InvalidModel("model needs at least 2 layers to have a split point");
    double total = 0.0;
    for (const auto& l : model.layers) {
        if (l.cost < 0.0 || l.out_bytes < 0.0 || l.param_bytes < 0.0)
            throw InvalidModel("layer '" + l.name + "' has a negative field");
        total += l.cost;
    }
    if (!(total > 0.0)) throw InvalidModel("total layer cost must be > 0");
}

} // namespace

std::vector<SplitProfile> profile_splits(const ModelSpec& model) {
    check_model(model);
    double total = 0.0;
    for (const auto& l : model.layers) total += l.cost;

    std::vector<SplitProfile> out;
    out.reserve(model.layers.size() - 1);
    double prefix = 0.0;
    for (std::size_t m = 1; m < model.layers.size(); ++m) {
        prefix += model.layers[m - 1].cost;
        const double slow_pure = prefix / total;
        SplitProfile sp;
        sp.split_id = static_cast<int>(m);
        sp.slow_frac = slow_pure + model.aux_cost_frac;
        // 1 - slow_pure rather than suffix/total, so the two fractions sum to
        // exactly 1 when there is no aux head.
        sp.fast_frac = 1.0 - slow_pure;
        sp.interm_bytes = model.layers[m - 1].out_bytes;
        out.push_back(sp);
    }
    return out;
}

double offloaded_model_bytes(const ModelSpec& model, int m) {
    check_model(model);
    if (m < 1 || m >= static_cast<int>(model.layers.size()))
        throw OutOfRange("split index " + std::to_string(m) + " out of 1.." +
                         std::to_string(model.layers.size() - 1));
    double bytes = 0.0;
    for (std::size_t l = static_cast<std::size_t>(m); l < model.layers.size(); ++l)
        bytes += model.layers[l].param_bytes;
    return bytes;
}

double total_param_bytes(const ModelSpec& model) {
    double bytes = 0.0;
    for (const auto& l : model.layers) bytes += l.param_bytes;
    return bytes;
}

ModelSpec resnet56_like_model() {
    // 3 stages of 9 blocks. Activation bytes follow the stage feature-map
    // dims (channels * H * W * 4); parameter bytes grow with channels^2.
    struct Stage {
        double out_bytes;
        double param_bytes;
    };
    const Stage stages[3] = {
        {16.0 * 32 * 32 * 4, 4608.0 * 4},   // 16ch 32x32, 2 conv3x3 16->16
        {32.0 * 16 * 16 * 4, 18432.0 * 4},  // 32ch 16x16, 2 conv3x3 32->32
        {64.0 * 8 * 8 * 4, 73728.0 * 4},    // 64ch 8x8,   2 conv3x3 64->64
    };
    ModelSpec model;
    model.aux_cost_frac = 0.0;
    model.aux_out_classes = 10;
    for (int s = 0; s < 3; ++s) {
        for (int b = 0; b < 9; ++b) {
            LayerSpec layer;
            layer.name = "stage" + std::to_string(s + 1) + "_block" + std::to_string(b + 1);
            layer.cost = 1.0;
            layer.out_bytes = stages[s].out_bytes;
            layer.param_bytes = stages[s].param_bytes;
            model.layers.push_back(layer);
        }
    }
    return model;
}

} // namespace comdml
