#include "glrp/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

#include "glrp/errors.hpp"
#include "glrp/graph.hpp"
#include "glrp/kernel_grams.hpp"
#include "glrp/pairwise.hpp"

namespace glrp {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct MaePair {
    double raw = std::numeric_limits<double>::quiet_NaN();
    double clipped = std::numeric_limits<double>::quiet_NaN();
    double raw_abs_sum = 0.0;
    double clipped_abs_sum = 0.0;
    std::size_t count = 0;
};

MaePair test_mae(const Eigen::MatrixXd& scores, const RatingMatrix& test) {
    MaePair out;
    auto [lo, hi] = test.rating_range();
    for (const RatingEntry& e : test.entries()) {
        double p = scores(e.user, e.item);
        out.raw_abs_sum += std::abs(p - e.rating);
        out.clipped_abs_sum += std::abs(std::clamp(p, lo, hi) - e.rating);
        ++out.count;
    }
    if (out.count > 0) {
        out.raw = out.raw_abs_sum / static_cast<double>(out.count);
        out.clipped = out.clipped_abs_sum / static_cast<double>(out.count);
    }
    return out;
}

}  // namespace

double mae(std::span<const double> predicted, std::span<const double> truth) {
    if (predicted.empty()) throw ArgumentError("mae of empty input");
    if (predicted.size() != truth.size()) throw ArgumentError("mae input lengths differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) acc += std::abs(predicted[i] - truth[i]);
    return acc / static_cast<double>(predicted.size());
}

BenchInstance bench_instance_from_split(const SplitPair& split, Axis axis, Impute impute,
                                        std::optional<int> reduce_rank) {
    BenchInstance inst;
    inst.name = split.name;
    inst.features = build_features(split.train, axis, impute, reduce_rank).vectors;
    if (axis == Axis::user_based) {
        inst.train = split.train;
        inst.test = split.test;
    } else {
        inst.train = split.train.transposed();
        inst.test = split.test.transposed();
    }
    return inst;
}

BenchInstance bench_instance_from_two_moons(const PointCloud& cloud, int labels_per_class, std::uint64_t seed) {
    const int n = static_cast<int>(cloud.points.rows());
    const int half = n / 2;
    if (labels_per_class < 1 || labels_per_class > half)
        throw ArgumentError("labels_per_class outside [1, n/2]");

    std::mt19937_64 rng(seed);
    auto pick = [&](int offset) {
        std::vector<int> idx(static_cast<std::size_t>(half));
        std::iota(idx.begin(), idx.end(), offset);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(static_cast<std::size_t>(labels_per_class));
        return idx;
    };
    std::vector<int> labeled = pick(0);
    std::vector<int> lower = pick(half);
    labeled.insert(labeled.end(), lower.begin(), lower.end());
    std::sort(labeled.begin(), labeled.end());

    std::vector<RatingEntry> train_entries, test_entries;
    for (int i = 0; i < n; ++i) {
        bool is_labeled = std::binary_search(labeled.begin(), labeled.end(), i);
        (is_labeled ? train_entries : test_entries).push_back({i, 0, cloud.labels(i)});
    }
    BenchInstance inst;
    inst.name = "two_moons";
    inst.train = RatingMatrix::from_entries(n, 1, std::move(train_entries), {-1.0, 1.0});
    inst.test = RatingMatrix::from_entries(n, 1, std::move(test_entries), {-1.0, 1.0});
    inst.features = cloud.points;
    return inst;
}

BenchInstance make_synthetic_instance(int n_users, int n_items, int labels_per_item, int test_per_item,
                                      std::uint64_t seed) {
    if (labels_per_item + test_per_item > n_users)
        throw ArgumentError("labels_per_item + test_per_item exceeds n_users");
    std::mt19937_64 rng(seed);
    // Continuous ratings: with integer ratings, every single-rating user
    // imputes to a constant feature row, and coinciding constant rows make
    // the kernel gram exactly singular.
    std::uniform_real_distribution<double> rating(1.0, 5.0);
    std::vector<int> users(static_cast<std::size_t>(n_users));
    std::iota(users.begin(), users.end(), 0);

    std::vector<RatingEntry> train_entries, test_entries;
    std::vector<bool> user_labeled(static_cast<std::size_t>(n_users), false);
    std::vector<std::vector<bool>> item_test(static_cast<std::size_t>(n_items));
    for (auto& v : item_test) v.assign(static_cast<std::size_t>(n_users), false);
    for (int i = 0; i < n_items; ++i) {
        std::shuffle(users.begin(), users.end(), rng);
        for (int t = 0; t < labels_per_item; ++t) {
            int u = users[static_cast<std::size_t>(t)];
            train_entries.push_back({u, i, rating(rng)});
            user_labeled[static_cast<std::size_t>(u)] = true;
        }
        for (int t = 0; t < test_per_item; ++t) {
            int u = users[static_cast<std::size_t>(labels_per_item + t)];
            test_entries.push_back({u, i, rating(rng)});
            item_test[static_cast<std::size_t>(i)][static_cast<std::size_t>(u)] = true;
        }
    }
    // Every user needs at least one training label, as in real rating splits;
    // all-unlabeled users would otherwise share one imputed feature row and
    // make the kernel gram exactly rank-deficient.
    for (int u = 0; u < n_users; ++u) {
        if (user_labeled[static_cast<std::size_t>(u)]) continue;
        int item = static_cast<int>(rng() % static_cast<std::uint64_t>(n_items));
        while (item_test[static_cast<std::size_t>(item)][static_cast<std::size_t>(u)]) item = (item + 1) % n_items;
        train_entries.push_back({u, item, rating(rng)});
    }
    BenchInstance inst;
    inst.name = "synthetic";
    inst.train = RatingMatrix::from_entries(n_users, n_items, std::move(train_entries));
    inst.test = RatingMatrix::from_entries(n_users, n_items, std::move(test_entries));
    inst.features = build_features(inst.train, Axis::user_based, Impute::row_mean).vectors;
    return inst;
}

namespace {

struct SplitRun {
    SplitSetup setup;
    GraphModel graph;
    Eigen::MatrixXd gram_k;
};

SplitRun shared_setup(const BenchConfig& config, const BenchInstance& inst) {
    SplitRun run;
    run.setup.split = inst.name;
    run.setup.n_nodes = static_cast<int>(inst.features.rows());
    run.setup.n_items = inst.train.n_items();

    auto t0 = Clock::now();
    Eigen::MatrixXd d2 = pairwise_sq_dists(inst.features);
    run.setup.distances_seconds = seconds_since(t0);

    t0 = Clock::now();
    run.graph = knn_heat_graph_from_dists(d2, config.k, config.epsilon, true);
    run.setup.graph_seconds = seconds_since(t0);
    run.setup.epsilon = run.graph.epsilon;

    t0 = Clock::now();
    run.gram_k = gaussian_gram_from_dists(d2, config.sigma, true);
    run.setup.gram_seconds = seconds_since(t0);
    return run;
}

// Builds grams (R charged to Prop via returned seconds) and runs one method.
SplitMethodResult run_method(const BenchConfig& config, const BenchInstance& inst, const SplitRun& run,
                             const KernelGrams& grams, double r_seconds, Method method,
                             const LaplacianEigensystem* eigensystem) {
    SplitMethodResult res;
    res.split = inst.name;
    res.method = method;
    try {
        SolverState state = precompute(method, grams, run.graph, eigensystem);
        res.timing.precompute_seconds = state.precompute_seconds;
        if (method.kind == MethodKind::prop) res.timing.precompute_seconds += r_seconds;

        std::vector<double> totals;
        MatrixPrediction first;
        for (int rep = 0; rep < std::max(1, config.timing_repeats); ++rep) {
            MatrixPrediction p = predict_matrix(state, inst.train, config.clip, false);
            totals.push_back(p.total_solve_seconds);
            if (rep == 0) first = std::move(p);
        }
        res.timing.item_seconds_total = median(totals);
        res.timing.solved_items = first.solved_items;

        MaePair m = test_mae(first.scores, inst.test);
        res.test_entries = m.count;
        res.mae_raw = m.raw;
        res.mae_clipped = m.clipped;

        if (config.parallel_items) {
            MatrixPrediction par = predict_matrix(state, inst.train, config.clip, true);
            res.parallel_item_seconds = par.total_solve_seconds;
        }
    } catch (const std::exception& e) {
        res.failed = true;
        res.error = e.what();
    }
    return res;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchConfig& config, const std::vector<BenchInstance>& instances,
                              const std::vector<Method>& methods) {
    if (methods.empty()) throw ArgumentError("run_benchmark needs a nonempty method list");
    if (config.lambda <= 0.0) throw ArgumentError("lambda must be > 0");
    if (config.gamma < 0.0) throw ArgumentError("gamma must be >= 0");
    if (config.sigma <= 0.0) throw ArgumentError("sigma must be > 0");
    if (config.k < 1) throw ArgumentError("k must be >= 1");

    BenchmarkReport report;
    report.config = config;

    const bool wants_gba =
        std::any_of(methods.begin(), methods.end(), [](const Method& m) { return m.kind == MethodKind::gba; });

    for (const BenchInstance& inst : instances) {
        SplitRun run = shared_setup(config, inst);

        auto t0 = Clock::now();
        KernelGrams grams = obtain_kernel_grams(run.gram_k, inst.features, run.graph, config.lambda, config.gamma,
                                                config.sigma, config.gram_cache);
        double r_seconds = seconds_since(t0);
        run.setup.relation_residual = grams.relation_residual;
        report.setups.push_back(run.setup);

        LaplacianEigensystem eigensystem;
        bool have_eigensystem = false;
        if (wants_gba) {
            eigensystem = eigendecompose_laplacian(run.graph);
            have_eigensystem = true;
        }
        for (const Method& method : methods)
            report.results.push_back(run_method(config, inst, run, grams, r_seconds, method,
                                                have_eigensystem ? &eigensystem : nullptr));
    }

    // Entry-weighted pooling across splits.
    for (const Method& method : methods) {
        PooledMethodResult pooled;
        pooled.method = method;
        double raw_sum = 0.0, clip_sum = 0.0;
        std::size_t count = 0;
        for (const SplitMethodResult& r : report.results) {
            if (!(r.method == method)) continue;
            if (r.failed) {
                pooled.failed = true;
                continue;
            }
            raw_sum += r.mae_raw * static_cast<double>(r.test_entries);
            clip_sum += r.mae_clipped * static_cast<double>(r.test_entries);
            count += r.test_entries;
            pooled.timing.precompute_seconds += r.timing.precompute_seconds;
            pooled.timing.item_seconds_total += r.timing.item_seconds_total;
            pooled.timing.solved_items += r.timing.solved_items;
        }
        if (count > 0) {
            pooled.mae_raw = raw_sum / static_cast<double>(count);
            pooled.mae_clipped = clip_sum / static_cast<double>(count);
        }
        report.pooled.push_back(pooled);
    }
    return report;
}

std::vector<KbSweepRow> kb_sweep(const BenchConfig& config, const BenchInstance& instance,
                                 const std::vector<int>& kb_values) {
    std::vector<KbSweepRow> rows;
    if (kb_values.empty()) return rows;

    SplitRun run = shared_setup(config, instance);
    KernelGrams grams = obtain_kernel_grams(run.gram_k, instance.features, run.graph, config.lambda, config.gamma,
                                            config.sigma, config.gram_cache);
    LaplacianEigensystem eigensystem = eigendecompose_laplacian(run.graph);

    SolverState prop_state = precompute(Method::prop(), grams, run.graph);
    MatrixPrediction prop_pred = predict_matrix(prop_state, instance.train, config.clip, false);
    const double prop_mae = test_mae(prop_pred.scores, instance.test).raw;
    const double prop_seconds = prop_pred.total_solve_seconds;

    for (int kb : kb_values) {
        SolverState state = precompute(Method::gba(kb), grams, run.graph, &eigensystem);
        MatrixPrediction pred = predict_matrix(state, instance.train, config.clip, false);
        KbSweepRow row;
        row.k_b = kb;
        row.gba_mae = test_mae(pred.scores, instance.test).raw;
        row.gba_item_seconds = pred.total_solve_seconds;
        row.prop_mae = prop_mae;
        row.prop_item_seconds = prop_seconds;
        rows.push_back(row);
    }
    return rows;
}

std::vector<SpeedupRow> speedup_table(const BenchmarkReport& report) {
    const PooledMethodResult* prop = nullptr;
    for (const PooledMethodResult& p : report.pooled)
        if (p.method.kind == MethodKind::prop && !p.failed) prop = &p;
    if (!prop) throw ArgumentError("speedup table needs a successful Prop row");

    const double prop_total = prop->timing.precompute_seconds + prop->timing.item_seconds_total;
    std::vector<SpeedupRow> rows;
    for (const PooledMethodResult& p : report.pooled) {
        if (p.failed) continue;
        SpeedupRow row;
        row.method = p.method;
        row.factor_total = (p.timing.precompute_seconds + p.timing.item_seconds_total) / prop_total;
        row.factor_items = p.timing.item_seconds_total / prop->timing.item_seconds_total;
        rows.push_back(row);
    }
    return rows;
}

namespace {

json method_json(const Method& m) { return m.name(); }

json timing_json(const MethodTiming& t) {
    return {{"precompute_seconds", t.precompute_seconds},
            {"item_seconds_total", t.item_seconds_total},
            {"item_seconds_mean", t.item_seconds_mean()},
            {"solved_items", t.solved_items}};
}

}  // namespace

std::string report_to_json(const BenchmarkReport& report) {
    json j;
    j["config"] = {{"k", report.config.k},
                   {"sigma", report.config.sigma},
                   {"lambda", report.config.lambda},
                   {"gamma", report.config.gamma},
                   {"timing_repeats", report.config.timing_repeats},
                   {"parallel_items", report.config.parallel_items}};
    if (report.config.epsilon) j["config"]["epsilon"] = *report.config.epsilon;
    if (report.config.clip) j["config"]["clip"] = {report.config.clip->first, report.config.clip->second};

    j["splits"] = json::array();
    for (const SplitSetup& s : report.setups)
        j["splits"].push_back({{"split", s.split},
                               {"n_nodes", s.n_nodes},
                               {"n_items", s.n_items},
                               {"epsilon", s.epsilon},
                               {"relation_residual", s.relation_residual},
                               {"distances_seconds", s.distances_seconds},
                               {"graph_seconds", s.graph_seconds},
                               {"gram_seconds", s.gram_seconds}});

    j["results"] = json::array();
    for (const SplitMethodResult& r : report.results) {
        json row = {{"split", r.split}, {"method", method_json(r.method)}, {"failed", r.failed}};
        if (r.failed) {
            row["error"] = r.error;
        } else {
            row["test_entries"] = r.test_entries;
            row["mae_raw"] = r.mae_raw;
            row["mae_clipped"] = r.mae_clipped;
            row["timing"] = timing_json(r.timing);
            if (r.parallel_item_seconds >= 0.0) row["parallel_item_seconds"] = r.parallel_item_seconds;
        }
        j["results"].push_back(row);
    }

    j["pooled"] = json::array();
    for (const PooledMethodResult& p : report.pooled) {
        json row = {{"method", method_json(p.method)}, {"failed", p.failed}};
        if (!p.failed) {
            row["mae_raw"] = p.mae_raw;
            row["mae_clipped"] = p.mae_clipped;
            row["timing"] = timing_json(p.timing);
        }
        j["pooled"].push_back(row);
    }

    try {
        j["speedup"] = json::array();
        for (const SpeedupRow& s : speedup_table(report))
            j["speedup"].push_back(
                {{"method", method_json(s.method)}, {"factor_total", s.factor_total}, {"factor_items", s.factor_items}});
    } catch (const ArgumentError&) {
        j.erase("speedup");  // no Prop row; table undefined
    }
    return j.dump(2);
}

void write_report_json(const BenchmarkReport& report, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out << report_to_json(report) << '\n';
}

void write_table3_csv(const BenchmarkReport& report, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out.precision(17);
    out << "method,precompute_seconds,item_seconds_total,total_seconds,speedup_total,speedup_items\n";
    for (const SpeedupRow& s : speedup_table(report)) {
        for (const PooledMethodResult& p : report.pooled) {
            if (!(p.method == s.method)) continue;
            out << p.method.name() << ',' << p.timing.precompute_seconds << ',' << p.timing.item_seconds_total << ','
                << (p.timing.precompute_seconds + p.timing.item_seconds_total) << ',' << s.factor_total << ','
                << s.factor_items << '\n';
        }
    }
}

void write_mae_csv(const BenchmarkReport& report, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out.precision(17);
    out << "split,method,test_entries,mae_raw,mae_clipped,precompute_seconds,item_seconds_total\n";
    for (const SplitMethodResult& r : report.results) {
        if (r.failed) continue;
        out << r.split << ',' << r.method.name() << ',' << r.test_entries << ',' << r.mae_raw << ',' << r.mae_clipped
            << ',' << r.timing.precompute_seconds << ',' << r.timing.item_seconds_total << '\n';
    }
    for (const PooledMethodResult& p : report.pooled) {
        if (p.failed) continue;
        out << "global," << p.method.name() << ",," << p.mae_raw << ',' << p.mae_clipped << ','
            << p.timing.precompute_seconds << ',' << p.timing.item_seconds_total << '\n';
    }
}

void write_fig1h_wide_csv(const BenchmarkReport& report, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out.precision(17);
    out << "split";
    for (const PooledMethodResult& p : report.pooled) out << ',' << p.method.name();
    out << '\n';
    std::vector<std::string> split_names;
    for (const SplitSetup& s : report.setups) split_names.push_back(s.split);
    for (const std::string& split : split_names) {
        out << split;
        for (const PooledMethodResult& p : report.pooled) {
            out << ',';
            for (const SplitMethodResult& r : report.results)
                if (r.split == split && r.method == p.method && !r.failed) out << r.mae_raw;
        }
        out << '\n';
    }
    out << "global";
    for (const PooledMethodResult& p : report.pooled) {
        out << ',';
        if (!p.failed) out << p.mae_raw;
    }
    out << '\n';
}

void write_dense_scores(const Eigen::MatrixXd& scores, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    const std::int64_t rows = scores.rows(), cols = scores.cols();
    out.write("GLRPSCR1", 8);
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    out.write(reinterpret_cast<const char*>(scores.data()),
              sizeof(double) * static_cast<std::streamsize>(scores.size()));
    if (!out) throw IoError("write failed for " + file.string());
}

Eigen::MatrixXd read_dense_scores(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    char magic[8];
    std::int64_t rows = 0, cols = 0;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&cols), sizeof cols);
    if (!in || std::string_view(magic, 8) != "GLRPSCR1" || rows < 0 || cols < 0)
        throw IoError(file.string() + " is not a score dump");
    Eigen::MatrixXd scores(rows, cols);
    in.read(reinterpret_cast<char*>(scores.data()), sizeof(double) * static_cast<std::streamsize>(scores.size()));
    if (!in) throw IoError("short read from " + file.string());
    return scores;
}

void write_fig1h_csv(const std::vector<KbSweepRow>& rows, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out.precision(17);
    out << "k_b,gba_mae,gba_item_seconds,prop_mae,prop_item_seconds\n";
    for (const KbSweepRow& r : rows)
        out << r.k_b << ',' << r.gba_mae << ',' << r.gba_item_seconds << ',' << r.prop_mae << ','
            << r.prop_item_seconds << '\n';
}

}  // namespace glrp
