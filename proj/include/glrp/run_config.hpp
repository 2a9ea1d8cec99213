#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "glrp/eval.hpp"
#include "glrp/features.hpp"
#include "glrp/rating_matrix.hpp"
#include "glrp/solvers.hpp"

namespace glrp {

enum class DatasetKind { movielens, two_moons, synthetic };

struct DatasetSpec {
    DatasetKind kind = DatasetKind::two_moons;
    // movielens
    std::filesystem::path path;
    SplitScheme scheme = SplitScheme::u1_u5;
    // two_moons
    int n_points = 2000;
    double noise = kTwoMoonsDefaultNoise;
    int labels_per_class = 3;
    // synthetic
    int n_users = 1000;
    int n_items = 500;
    int labels_per_item = 10;
    int test_per_item = 5;
};

/// Declarative description of one run; flags mirror the field names.
struct RunConfig {
    DatasetSpec dataset;
    Axis axis = Axis::user_based;
    Impute impute = Impute::row_mean;
    std::optional<int> reduce_rank;
    int k = 20;
    double sigma = 4.0;
    double lambda = 0.022;
    double gamma = 0.05;
    std::optional<double> epsilon;
    std::vector<Method> methods = {Method::prop()};
    std::vector<int> kb_values;
    std::optional<std::pair<double, double>> clip;
    std::optional<std::filesystem::path> gram_cache;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 12345;
    int timing_repeats = 3;
    bool parallel_items = false;

    // ValidationError naming the offending field.
    void validate() const;
    BenchConfig bench() const;
};

// Shipped parameter profiles: "movielens-paper" (k=20, sigma=4, lambda=0.022,
// gamma=0.05) and "twomoons-paper" (k=30, sigma=0.1, lambda=1e-4,
// gamma=0.005, n=2000, l=6).
RunConfig profile(const std::string& name);

RunConfig load_config_file(const std::filesystem::path& file);
std::string config_to_json(const RunConfig& config);

// Materializes the dataset: per-split instances for MovieLens, a single
// instance otherwise. Deterministic in config.seed.
std::vector<BenchInstance> build_instances(const RunConfig& config);

}  // namespace glrp
