// SPDX-License-Identifier: Apache-2.0

#include "comdml/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "comdml/errors.hpp"
#include "comdml/rng.hpp"

namespace comdml {

namespace {

// Class mean directions: antipodal all-ones vectors for two classes (the
// canonical separable setup), seeded +-1 directions beyond that.
std::vector<std::vector<double>> class_directions(int classes, int dim, rng::Engine& g) {
    std::vector<std::vector<double>> dirs(static_cast<std::size_t>(classes),
                                          std::vector<double>(static_cast<std::size_t>(dim), 1.0));
    if (classes == 2) {
        for (auto& v : dirs[1]) v = -1.0;
        return dirs;
    }
    for (auto& dir : dirs)
        for (auto& v : dir) v = rng::uniform01(g) < 0.5 ? -1.0 : 1.0;
    return dirs;
}

// Largest-remainder apportionment of `total` into shares.
std::vector<int> apportion(const std::vector<double>& shares, int total) {
    const std::size_t n = shares.size();
    std::vector<int> counts(n, 0);
    std::vector<std::pair<double, std::size_t>> rema(n);
    int assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double exact = shares[i] * total;
        counts[i] = static_cast<int>(exact);
        assigned += counts[i];
        rema[i] = {exact - static_cast<double>(counts[i]), i};
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int r = 0; r < total - assigned; ++r) counts[rema[static_cast<std::size_t>(r)].second]++;
    return counts;
}

} // namespace

SyntheticDataset make_gaussian_mixture(const MixtureSpec& spec, int num_agents,
                                       std::uint64_t seed) {
    if (spec.classes < 2) throw Error("mixture needs at least 2 classes");
    if (spec.dim < 1) throw Error("mixture dim must be >= 1");
    if (spec.samples < 1) throw Error("mixture needs at least 1 sample");
    if (num_agents < 1) throw Error("need at least 1 agent");

    rng::Engine gen(rng::mix(seed, 0xDA));
    const auto dirs = class_directions(spec.classes, spec.dim, gen);

    SyntheticDataset data;
    data.x = kern::Mat(static_cast<std::size_t>(spec.samples), static_cast<std::size_t>(spec.dim));
    data.y.resize(static_cast<std::size_t>(spec.samples));

    // Balanced labels: remainder spread over the lowest classes.
    for (int n = 0; n < spec.samples; ++n)
        data.y[static_cast<std::size_t>(n)] = n % spec.classes;

    for (int n = 0; n < spec.samples; ++n) {
        const auto& dir = dirs[static_cast<std::size_t>(data.y[static_cast<std::size_t>(n)])];
        for (int d = 0; d < spec.dim; ++d)
            data.x(static_cast<std::size_t>(n), static_cast<std::size_t>(d)) =
                spec.mean_scale * dir[static_cast<std::size_t>(d)] + spec.sigma * rng::normal(gen);
    }

    // Partition: per class, agent shares are either equal (round-robin) or
    // Dirichlet-distributed for label skew.
    data.partitions.assign(static_cast<std::size_t>(num_agents), {});
    rng::Engine part_gen(rng::mix(seed, 0x9A));
    for (int c = 0; c < spec.classes; ++c) {
        std::vector<int> members;
        for (int n = 0; n < spec.samples; ++n)
            if (data.y[static_cast<std::size_t>(n)] == c) members.push_back(n);

        if (spec.label_skew > 0.0) {
            const auto shares =
                rng::dirichlet(part_gen, spec.label_skew, static_cast<std::size_t>(num_agents));
            const auto counts = apportion(shares, static_cast<int>(members.size()));
            std::size_t pos = 0;
            for (int a = 0; a < num_agents; ++a)
                for (int k = 0; k < counts[static_cast<std::size_t>(a)]; ++k)
                    data.partitions[static_cast<std::size_t>(a)].push_back(members[pos++]);
        } else {
            for (std::size_t i = 0; i < members.size(); ++i)
                data.partitions[i % static_cast<std::size_t>(num_agents)].push_back(members[i]);
        }
    }
    for (auto& part : data.partitions) std::sort(part.begin(), part.end());
    return data;
}

} // namespace comdml
