#include "glrp/run_config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "glrp/errors.hpp"
#include "glrp/two_moons.hpp"

namespace glrp {

using nlohmann::json;

void RunConfig::validate() const {
    if (lambda <= 0.0) throw ValidationError("lambda must be > 0");
    if (gamma < 0.0) throw ValidationError("gamma must be >= 0");
    if (sigma <= 0.0) throw ValidationError("sigma must be > 0");
    if (k < 1) throw ValidationError("k must be >= 1");
    if (epsilon && *epsilon <= 0.0) throw ValidationError("epsilon must be > 0 when given");
    if (methods.empty()) throw ValidationError("methods must be nonempty");
    if (timing_repeats < 1) throw ValidationError("timing_repeats must be >= 1");
    if (clip && clip->first >= clip->second) throw ValidationError("clip range must satisfy lo < hi");
    for (int kb : kb_values)
        if (kb < 1) throw ValidationError("kb_values entries must be >= 1");
    if (dataset.kind == DatasetKind::two_moons) {
        if (dataset.n_points < 2 || dataset.n_points % 2 != 0)
            throw ValidationError("dataset.n_points must be a positive even number");
        if (dataset.noise < 0.0) throw ValidationError("dataset.noise must be >= 0");
        if (dataset.labels_per_class < 1) throw ValidationError("dataset.labels_per_class must be >= 1");
    }
    if (dataset.kind == DatasetKind::synthetic) {
        if (dataset.n_users < 2) throw ValidationError("dataset.n_users must be >= 2");
        if (dataset.n_items < 1) throw ValidationError("dataset.n_items must be >= 1");
        if (dataset.labels_per_item < 1) throw ValidationError("dataset.labels_per_item must be >= 1");
        if (dataset.test_per_item < 0) throw ValidationError("dataset.test_per_item must be >= 0");
    }
    if (dataset.kind == DatasetKind::movielens && dataset.path.empty())
        throw ValidationError("dataset.path must point at the MovieLens directory");
}

BenchConfig RunConfig::bench() const {
    BenchConfig b;
    b.k = k;
    b.sigma = sigma;
    b.lambda = lambda;
    b.gamma = gamma;
    b.epsilon = epsilon;
    b.clip = clip;
    b.timing_repeats = timing_repeats;
    b.parallel_items = parallel_items;
    b.gram_cache = gram_cache;
    return b;
}

RunConfig profile(const std::string& name) {
    RunConfig c;
    if (name == "movielens-paper") {
        c.dataset.kind = DatasetKind::movielens;
        c.dataset.path = "data/ml-100k";
        c.dataset.scheme = SplitScheme::u1_u5;
        c.k = 20;
        c.sigma = 4.0;
        c.lambda = 0.022;
        c.gamma = 0.05;
        c.methods = {Method::prop()};
        return c;
    }
    if (name == "twomoons-paper") {
        c.dataset.kind = DatasetKind::two_moons;
        c.dataset.n_points = 2000;
        c.dataset.noise = kTwoMoonsDefaultNoise;
        c.dataset.labels_per_class = 3;
        c.k = 30;
        c.sigma = 0.1;
        c.lambda = 1e-4;
        c.gamma = 0.005;
        c.methods = {Method::prop()};
        c.kb_values = {10, 20, 50, 100};
        return c;
    }
    throw ValidationError("unknown profile '" + name + "' (expected movielens-paper or twomoons-paper)");
}

namespace {

DatasetKind dataset_kind_from(const std::string& s) {
    if (s == "movielens") return DatasetKind::movielens;
    if (s == "two_moons") return DatasetKind::two_moons;
    if (s == "synthetic") return DatasetKind::synthetic;
    throw ValidationError("dataset.kind must be movielens, two_moons or synthetic");
}

const char* dataset_kind_name(DatasetKind k) {
    switch (k) {
        case DatasetKind::movielens: return "movielens";
        case DatasetKind::two_moons: return "two_moons";
        case DatasetKind::synthetic: return "synthetic";
    }
    return "?";
}

SplitScheme scheme_from(const std::string& s) {
    if (s == "u1_u5" || s == "u1..u5") return SplitScheme::u1_u5;
    if (s == "ua_ub") return SplitScheme::ua_ub;
    throw ValidationError("dataset.scheme must be u1_u5 or ua_ub");
}

Axis axis_from(const std::string& s) {
    if (s == "user_based") return Axis::user_based;
    if (s == "item_based") return Axis::item_based;
    throw ValidationError("axis must be user_based or item_based");
}

Impute impute_from(const std::string& s) {
    if (s == "row_mean") return Impute::row_mean;
    if (s == "global_mean") return Impute::global_mean;
    throw ValidationError("impute must be row_mean or global_mean");
}

}  // namespace

RunConfig load_config_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config file " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("config file " + file.string() + " is not valid JSON: " + e.what());
    }

    RunConfig c;
    if (j.contains("profile")) c = profile(j.at("profile").get<std::string>());
    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        if (d.contains("kind")) c.dataset.kind = dataset_kind_from(d.at("kind").get<std::string>());
        if (d.contains("path")) c.dataset.path = d.at("path").get<std::string>();
        if (d.contains("scheme")) c.dataset.scheme = scheme_from(d.at("scheme").get<std::string>());
        if (d.contains("n_points")) c.dataset.n_points = d.at("n_points").get<int>();
        if (d.contains("noise")) c.dataset.noise = d.at("noise").get<double>();
        if (d.contains("labels_per_class")) c.dataset.labels_per_class = d.at("labels_per_class").get<int>();
        if (d.contains("n_users")) c.dataset.n_users = d.at("n_users").get<int>();
        if (d.contains("n_items")) c.dataset.n_items = d.at("n_items").get<int>();
        if (d.contains("labels_per_item")) c.dataset.labels_per_item = d.at("labels_per_item").get<int>();
        if (d.contains("test_per_item")) c.dataset.test_per_item = d.at("test_per_item").get<int>();
    }
    if (j.contains("axis")) c.axis = axis_from(j.at("axis").get<std::string>());
    if (j.contains("impute")) c.impute = impute_from(j.at("impute").get<std::string>());
    if (j.contains("reduce_rank")) c.reduce_rank = j.at("reduce_rank").get<int>();
    if (j.contains("k")) c.k = j.at("k").get<int>();
    if (j.contains("sigma")) c.sigma = j.at("sigma").get<double>();
    if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
    if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
    if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<double>();
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& m : j.at("methods")) c.methods.push_back(Method::parse(m.get<std::string>()));
    }
    if (j.contains("kb_values")) c.kb_values = j.at("kb_values").get<std::vector<int>>();
    if (j.contains("clip")) {
        auto v = j.at("clip").get<std::vector<double>>();
        if (v.size() != 2) throw ValidationError("clip must be a [lo, hi] pair");
        c.clip = {v[0], v[1]};
    }
    if (j.contains("gram_cache")) c.gram_cache = j.at("gram_cache").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("timing_repeats")) c.timing_repeats = j.at("timing_repeats").get<int>();
    if (j.contains("parallel_items")) c.parallel_items = j.at("parallel_items").get<bool>();
    return c;
}

std::string config_to_json(const RunConfig& c) {
    json j;
    j["dataset"] = {{"kind", dataset_kind_name(c.dataset.kind)}};
    switch (c.dataset.kind) {
        case DatasetKind::movielens:
            j["dataset"]["path"] = c.dataset.path.string();
            j["dataset"]["scheme"] = c.dataset.scheme == SplitScheme::u1_u5 ? "u1_u5" : "ua_ub";
            break;
        case DatasetKind::two_moons:
            j["dataset"]["n_points"] = c.dataset.n_points;
            j["dataset"]["noise"] = c.dataset.noise;
            j["dataset"]["labels_per_class"] = c.dataset.labels_per_class;
            j["dataset"]["radius"] = kTwoMoonsRadius;
            j["dataset"]["offset"] = {kTwoMoonsOffsetX, kTwoMoonsOffsetY};
            break;
        case DatasetKind::synthetic:
            j["dataset"]["n_users"] = c.dataset.n_users;
            j["dataset"]["n_items"] = c.dataset.n_items;
            j["dataset"]["labels_per_item"] = c.dataset.labels_per_item;
            j["dataset"]["test_per_item"] = c.dataset.test_per_item;
            break;
    }
    j["axis"] = to_string(c.axis);
    j["impute"] = c.impute == Impute::row_mean ? "row_mean" : "global_mean";
    if (c.reduce_rank) j["reduce_rank"] = *c.reduce_rank;
    j["k"] = c.k;
    j["sigma"] = c.sigma;
    j["lambda"] = c.lambda;
    j["gamma"] = c.gamma;
    if (c.epsilon) j["epsilon"] = *c.epsilon;
    j["methods"] = json::array();
    for (const Method& m : c.methods) j["methods"].push_back(m.name());
    if (!c.kb_values.empty()) j["kb_values"] = c.kb_values;
    if (c.clip) j["clip"] = {c.clip->first, c.clip->second};
    if (c.gram_cache) j["gram_cache"] = c.gram_cache->string();
    j["output_dir"] = c.output_dir.string();
    j["seed"] = c.seed;
    j["timing_repeats"] = c.timing_repeats;
    j["parallel_items"] = c.parallel_items;
    return j.dump(2);
}

std::vector<BenchInstance> build_instances(const RunConfig& config) {
    switch (config.dataset.kind) {
        case DatasetKind::movielens: {
            auto pairs = load_split_pairs(config.dataset.path, config.dataset.scheme);
            std::vector<BenchInstance> instances;
            instances.reserve(pairs.size());
            for (const SplitPair& p : pairs)
                instances.push_back(bench_instance_from_split(p, config.axis, config.impute, config.reduce_rank));
            return instances;
        }
        case DatasetKind::two_moons: {
            PointCloud cloud = make_two_moons(config.dataset.n_points, config.dataset.noise, config.seed);
            return {bench_instance_from_two_moons(cloud, config.dataset.labels_per_class, config.seed + 1)};
        }
        case DatasetKind::synthetic:
            return {make_synthetic_instance(config.dataset.n_users, config.dataset.n_items,
                                            config.dataset.labels_per_item, config.dataset.test_per_item,
                                            config.seed)};
    }
    throw ArgumentError("unknown dataset kind");
}

}  // namespace glrp
