// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "comdml/kernels.hpp"

namespace comdml {

struct MixtureSpec {
    int classes = 2;
    int dim = 16;
    int samples = 4000;
    double mean_scale = 2.0; // class means at +/- scale (2 classes) or seeded +-1 directions
    double sigma = 1.0;      // isotropic covariance scale
    double label_skew = 0.0; // Dirichlet concentration; 0 = balanced round-robin partition
};

struct SyntheticDataset {
    kern::Mat x;        // samples x dim
    std::vector<int> y; // labels 0..C-1
    std::vector<std::vector<int>> partitions; // per-agent sample indices
};

// Gaussian-mixture classification data with a per-agent partition. With
// label_skew > 0 the per-class shares across agents are Dirichlet-distributed.
SyntheticDataset make_gaussian_mixture(const MixtureSpec& spec, int num_agents,
                                       std::uint64_t seed);

} // namespace comdml
