#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <vector>

#include "glrp/features.hpp"
#include "glrp/graph.hpp"
#include "glrp/kernel_grams.hpp"
#include "glrp/solvers.hpp"

namespace glrp::test {

/// Random problem instance matching the acceptance rig ranges: n in [20,200],
/// d in [2,20], l in [1, n/2], lambda log-uniform in [1e-4, 1], gamma uniform
/// in [0,1] with an exact zero every 10th draw.
struct RandomInstance {
    Eigen::MatrixXd points;
    GraphModel graph;
    KernelGrams grams;
    LabeledItem item;
    std::uint64_t seed;
};

inline RandomInstance make_instance(std::uint64_t seed, int n_max = 200, int n_min = 20) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    RandomInstance inst;
    inst.seed = seed;
    const int n = uniform_int(n_min, n_max);
    const int d = uniform_int(2, 20);
    inst.points.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) inst.points(i, j) = uniform(0.0, 1.0);

    const double lambda = std::pow(10.0, uniform(-4.0, 0.0));
    const double gamma = (seed % 10 == 0) ? 0.0 : uniform(0.0, 1.0);
    const int k = std::min(8, n - 1);

    inst.graph = knn_heat_graph(inst.points, k);
    // Kernel width tied to the local point spacing (the graph's k-th-neighbor
    // scale) so K stays numerically nonsingular across n and d; a width on
    // the cloud diameter scale collapses K to cond >= 1e16 and makes any
    // cross-solver comparison meaningless.
    const double sigma = uniform(0.5, 1.5) * std::sqrt(inst.graph.epsilon);
    inst.grams = build_kernel_grams(inst.points, inst.graph, lambda, gamma, sigma);

    const int l = uniform_int(1, n / 2);
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    inst.item.item_index = 0;
    inst.item.label_idx.assign(all.begin(), all.begin() + l);
    std::sort(inst.item.label_idx.begin(), inst.item.label_idx.end());
    inst.item.y.resize(l);
    for (int j = 0; j < l; ++j) inst.item.y(j) = uniform(1.0, 5.0);
    return inst;
}

}  // namespace glrp::test
