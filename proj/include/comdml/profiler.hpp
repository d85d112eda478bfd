// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "comdml/types.hpp"

namespace comdml {

struct LayerSpec {
    std::string name;
    double cost = 0.0;       // relative compute per batch, forward+backward
    double out_bytes = 0.0;  // activation bytes per batch at this layer's output
    double param_bytes = 0.0;
};

struct ModelSpec {
    std::vector<LayerSpec> layers;
    double aux_cost_frac = 0.0; // auxiliary head cost as a fraction of total model cost
    int aux_out_classes = 10;
};

// One SplitProfile per split point m in 1..L-1 (split after layer m),
// derived analytically from declared layer costs.
std::vector<SplitProfile> profile_splits(const ModelSpec& model);

// Parameter bytes of the suffix (layers m+1..L) shipped once when a pair forms.
double offloaded_model_bytes(const ModelSpec& model, int m);

double total_param_bytes(const ModelSpec& model);

// Built-in preset: 3 stages of 9 equal-cost blocks with stage-wise activation
// and parameter sizes, giving 26 split points.
ModelSpec resnet56_like_model();

} // namespace comdml
