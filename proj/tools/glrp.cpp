#include <CLI11.hpp>
#include <Eigen/Core>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "glrp/errors.hpp"
#include "glrp/eval.hpp"
#include "glrp/kernel_grams.hpp"
#include "glrp/pairwise.hpp"
#include "glrp/run_config.hpp"
#include "glrp/two_moons.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace glrp;

namespace {

struct CliOverrides {
    std::string config_file;
    std::string profile_name;
    std::string dataset_kind, dataset_path, dataset_scheme;
    int n_points = 0, labels_per_class = 0, n_users = 0, n_items = 0, labels_per_item = 0, test_per_item = -1;
    double noise = -1.0;
    std::string axis, impute;
    int reduce_rank = 0;
    int k = 0;
    double sigma = 0.0, lambda = 0.0, gamma = -1.0, epsilon = 0.0;
    std::vector<std::string> methods;
    std::vector<int> kb_values;
    std::vector<double> clip;
    std::string gram_cache;
    std::string output_dir;
    std::uint64_t seed = 0;
    int timing_repeats = 0;
    bool parallel_items = false;
};

// Flags mirror the config field names; every flag group below registers the
// same spellings on each subcommand.
void add_common_options(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config_file, "JSON config file");
    cmd->add_option("--profile", o.profile_name, "parameter profile: movielens-paper | twomoons-paper");
    cmd->add_option("--dataset.kind", o.dataset_kind, "movielens | two_moons | synthetic");
    cmd->add_option("--dataset.path", o.dataset_path, "MovieLens directory");
    cmd->add_option("--dataset.scheme", o.dataset_scheme, "u1_u5 | ua_ub");
    cmd->add_option("--dataset.n_points", o.n_points);
    cmd->add_option("--dataset.noise", o.noise);
    cmd->add_option("--dataset.labels_per_class", o.labels_per_class);
    cmd->add_option("--dataset.n_users", o.n_users);
    cmd->add_option("--dataset.n_items", o.n_items);
    cmd->add_option("--dataset.labels_per_item", o.labels_per_item);
    cmd->add_option("--dataset.test_per_item", o.test_per_item);
    cmd->add_option("--axis", o.axis, "user_based | item_based");
    cmd->add_option("--impute", o.impute, "row_mean | global_mean");
    cmd->add_option("--reduce_rank", o.reduce_rank);
    cmd->add_option("--k", o.k, "neighbor count");
    cmd->add_option("--sigma", o.sigma);
    cmd->add_option("--lambda", o.lambda);
    cmd->add_option("--gamma", o.gamma);
    cmd->add_option("--epsilon", o.epsilon, "heat-kernel bandwidth (defaults to the k-th-neighbor rule)");
    cmd->add_option("--methods", o.methods, "Ori | Prop | GBa<k_b>")->delimiter(',');
    cmd->add_option("--kb_values", o.kb_values)->delimiter(',');
    cmd->add_option("--clip", o.clip, "lo hi")->expected(2);
    cmd->add_option("--gram_cache", o.gram_cache, "directory for the binary K/R cache");
    cmd->add_option("--output_dir", o.output_dir, "env override: GLRP_OUTPUT_DIR");
    cmd->add_option("--seed", o.seed);
    cmd->add_option("--timing_repeats", o.timing_repeats);
    cmd->add_flag("--parallel_items", o.parallel_items);
}

RunConfig assemble(const CLI::App* cmd, const CliOverrides& o) {
    if (!o.config_file.empty() && !o.profile_name.empty())
        throw ValidationError("give either --config or --profile, not both");
    RunConfig c;
    if (!o.config_file.empty()) c = load_config_file(o.config_file);
    if (!o.profile_name.empty()) c = profile(o.profile_name);

    if (const char* env = std::getenv("GLRP_OUTPUT_DIR")) c.output_dir = env;

    auto given = [&](const char* name) { return cmd->count(name) > 0; };
    if (given("--dataset.kind")) {
        if (o.dataset_kind == "movielens")
            c.dataset.kind = DatasetKind::movielens;
        else if (o.dataset_kind == "two_moons")
            c.dataset.kind = DatasetKind::two_moons;
        else if (o.dataset_kind == "synthetic")
            c.dataset.kind = DatasetKind::synthetic;
        else
            throw ValidationError("dataset.kind must be movielens, two_moons or synthetic");
    }
    if (given("--dataset.path")) c.dataset.path = o.dataset_path;
    if (given("--dataset.scheme")) {
        if (o.dataset_scheme == "u1_u5")
            c.dataset.scheme = SplitScheme::u1_u5;
        else if (o.dataset_scheme == "ua_ub")
            c.dataset.scheme = SplitScheme::ua_ub;
        else
            throw ValidationError("dataset.scheme must be u1_u5 or ua_ub");
    }
    if (given("--dataset.n_points")) c.dataset.n_points = o.n_points;
    if (given("--dataset.noise")) c.dataset.noise = o.noise;
    if (given("--dataset.labels_per_class")) c.dataset.labels_per_class = o.labels_per_class;
    if (given("--dataset.n_users")) c.dataset.n_users = o.n_users;
    if (given("--dataset.n_items")) c.dataset.n_items = o.n_items;
    if (given("--dataset.labels_per_item")) c.dataset.labels_per_item = o.labels_per_item;
    if (given("--dataset.test_per_item")) c.dataset.test_per_item = o.test_per_item;
    if (given("--axis")) {
        if (o.axis == "user_based")
            c.axis = Axis::user_based;
        else if (o.axis == "item_based")
            c.axis = Axis::item_based;
        else
            throw ValidationError("axis must be user_based or item_based");
    }
    if (given("--impute")) {
        if (o.impute == "row_mean")
            c.impute = Impute::row_mean;
        else if (o.impute == "global_mean")
            c.impute = Impute::global_mean;
        else
            throw ValidationError("impute must be row_mean or global_mean");
    }
    if (given("--reduce_rank")) c.reduce_rank = o.reduce_rank;
    if (given("--k")) c.k = o.k;
    if (given("--sigma")) c.sigma = o.sigma;
    if (given("--lambda")) c.lambda = o.lambda;
    if (given("--gamma")) c.gamma = o.gamma;
    if (given("--epsilon")) c.epsilon = o.epsilon;
    if (given("--methods")) {
        c.methods.clear();
        for (const std::string& m : o.methods) c.methods.push_back(Method::parse(m));
    }
    if (given("--kb_values")) c.kb_values = o.kb_values;
    if (given("--clip")) c.clip = {o.clip[0], o.clip[1]};
    if (given("--gram_cache")) c.gram_cache = o.gram_cache;
    if (given("--output_dir")) c.output_dir = o.output_dir;
    if (given("--seed")) c.seed = o.seed;
    if (given("--timing_repeats")) c.timing_repeats = o.timing_repeats;
    if (given("--parallel_items")) c.parallel_items = true;
    c.validate();
    return c;
}

void write_config_echo(const RunConfig& c, const BenchmarkReport* report) {
    fs::create_directories(c.output_dir);
    json echo = json::parse(config_to_json(c));
    if (report) {
        echo["effective"] = json::array();
        for (const SplitSetup& s : report->setups)
            echo["effective"].push_back(
                {{"split", s.split}, {"epsilon", s.epsilon}, {"relation_residual", s.relation_residual}});
    }
    std::ofstream out(c.output_dir / "effective_config.json");
    if (!out) throw IoError("cannot write " + (c.output_dir / "effective_config.json").string());
    out << echo.dump(2) << '\n';
}

int cmd_predict(const RunConfig& cfg, bool dump_scores) {
    if (cfg.methods.size() != 1)
        throw ValidationError("methods: predict runs exactly one method (use bench for several)");
    const Method method = cfg.methods[0];
    std::vector<BenchInstance> instances = build_instances(cfg);
    const bool two_moons = cfg.dataset.kind == DatasetKind::two_moons;
    fs::create_directories(cfg.output_dir);

    BenchConfig bench = cfg.bench();
    json summary;
    summary["method"] = method.name();
    summary["splits"] = json::array();
    double pooled_raw = 0.0, pooled_clip = 0.0;
    std::size_t pooled_n = 0;
    std::vector<SplitSetup> setups;

    PointCloud cloud;  // regenerated for the CSV columns
    if (two_moons) cloud = make_two_moons(cfg.dataset.n_points, cfg.dataset.noise, cfg.seed);

    for (const BenchInstance& inst : instances) {
        Eigen::MatrixXd d2 = pairwise_sq_dists(inst.features);
        GraphModel graph = knn_heat_graph_from_dists(d2, cfg.k, cfg.epsilon, true);
        KernelGrams grams = obtain_kernel_grams(gaussian_gram_from_dists(d2, cfg.sigma, true), inst.features,
                                                graph, cfg.lambda, cfg.gamma, cfg.sigma, cfg.gram_cache);
        SolverState state = precompute(method, grams, graph);
        MatrixPrediction pred = predict_matrix(state, inst.train, cfg.clip, cfg.parallel_items);
        if (dump_scores) write_dense_scores(pred.scores, cfg.output_dir / ("scores_" + inst.name + ".bin"));

        SplitSetup setup;
        setup.split = inst.name;
        setup.epsilon = graph.epsilon;
        setup.relation_residual = grams.relation_residual;
        setups.push_back(setup);

        auto [lo, hi] = inst.test.rating_range();
        double raw_sum = 0.0, clip_sum = 0.0;
        std::size_t count = 0;

        fs::path pred_file = cfg.output_dir / ("predictions_" + inst.name + ".csv");
        std::ofstream out(pred_file);
        if (!out) throw IoError("cannot write " + pred_file.string());
        out.precision(17);
        if (two_moons) {
            out << "x,y,label,f,predicted_sign\n";
            for (int u = 0; u < inst.train.n_users(); ++u) {
                double f = pred.scores(u, 0);
                out << cloud.points(u, 0) << ',' << cloud.points(u, 1) << ',' << static_cast<int>(cloud.labels(u))
                    << ',' << f << ',' << (f >= 0.0 ? 1 : -1) << '\n';
            }
        } else {
            out << "user,item,prediction\n";
        }
        for (const RatingEntry& e : inst.test.entries()) {
            double p = pred.scores(e.user, e.item);
            raw_sum += std::abs(p - e.rating);
            clip_sum += std::abs(std::clamp(p, lo, hi) - e.rating);
            ++count;
            if (!two_moons) out << (e.user + 1) << ',' << (e.item + 1) << ',' << p << '\n';
        }

        json srow = {{"split", inst.name},
                     {"epsilon", graph.epsilon},
                     {"test_entries", count},
                     {"solve_seconds_total", pred.total_solve_seconds},
                     {"precompute_seconds", state.precompute_seconds},
                     {"predictions_file", pred_file.string()}};
        if (count > 0) {
            srow["mae_raw"] = raw_sum / static_cast<double>(count);
            srow["mae_clipped"] = clip_sum / static_cast<double>(count);
            pooled_raw += raw_sum;
            pooled_clip += clip_sum;
            pooled_n += count;
        }
        summary["splits"].push_back(srow);
        std::cout << "split " << inst.name << ": test entries " << count;
        if (count > 0) std::cout << ", MAE " << raw_sum / static_cast<double>(count);
        std::cout << '\n';
    }
    if (pooled_n > 0) {
        summary["global_mae_raw"] = pooled_raw / static_cast<double>(pooled_n);
        summary["global_mae_clipped"] = pooled_clip / static_cast<double>(pooled_n);
        std::cout << "global MAE (raw) " << pooled_raw / static_cast<double>(pooled_n) << '\n';
    }

    std::ofstream sout(cfg.output_dir / "summary.json");
    if (!sout) throw IoError("cannot write summary.json");
    sout << summary.dump(2) << '\n';

    BenchmarkReport echo_report;
    echo_report.setups = setups;
    write_config_echo(cfg, &echo_report);
    std::cout << "wrote " << (cfg.output_dir / "summary.json").string() << '\n';
    return 0;
}

int cmd_bench(const RunConfig& cfg) {
    std::vector<BenchInstance> instances = build_instances(cfg);
    BenchmarkReport report = run_benchmark(cfg.bench(), instances, cfg.methods);
    fs::create_directories(cfg.output_dir);
    write_report_json(report, cfg.output_dir / "report.json");
    bool have_prop = false;
    for (const PooledMethodResult& p : report.pooled)
        if (p.method.kind == MethodKind::prop && !p.failed) have_prop = true;
    if (have_prop) write_table3_csv(report, cfg.output_dir / "table3.csv");
    fs::path mae_file =
        cfg.output_dir / (cfg.dataset.kind == DatasetKind::movielens ? "movielens_mae.csv" : "mae.csv");
    write_mae_csv(report, mae_file);
    bool any_gba = false;
    for (const Method& m : cfg.methods)
        if (m.kind == MethodKind::gba) any_gba = true;
    if (any_gba) write_fig1h_wide_csv(report, cfg.output_dir / "fig1h.csv");
    write_config_echo(cfg, &report);

    for (const PooledMethodResult& p : report.pooled) {
        std::cout << p.method.name() << ": ";
        if (p.failed)
            std::cout << "FAILED\n";
        else
            std::cout << "global MAE " << p.mae_raw << " (clipped " << p.mae_clipped << "), precompute "
                      << p.timing.precompute_seconds << " s, items " << p.timing.item_seconds_total << " s\n";
    }
    std::cout << "wrote " << (cfg.output_dir / "report.json").string() << '\n';
    return 0;
}

int cmd_sweep_kb(const RunConfig& cfg) {
    if (cfg.kb_values.empty()) throw ValidationError("kb_values must be nonempty for sweep-kb");
    std::vector<BenchInstance> instances = build_instances(cfg);
    fs::create_directories(cfg.output_dir);
    for (const BenchInstance& inst : instances) {
        std::vector<KbSweepRow> rows = kb_sweep(cfg.bench(), inst, cfg.kb_values);
        fs::path file =
            cfg.output_dir / (instances.size() == 1 ? std::string("fig1h.csv") : "fig1h_" + inst.name + ".csv");
        write_fig1h_csv(rows, file);
        std::cout << inst.name << ":\n";
        for (const KbSweepRow& r : rows)
            std::cout << "  k_b " << r.k_b << ": GBa MAE " << r.gba_mae << ", Prop MAE " << r.prop_mae << '\n';
        std::cout << "wrote " << file.string() << '\n';
    }
    write_config_echo(cfg, nullptr);
    return 0;
}

int cmd_gen_twomoons(const RunConfig& cfg, const std::string& out_file) {
    PointCloud cloud = make_two_moons(cfg.dataset.n_points, cfg.dataset.noise, cfg.seed);
    fs::path file = out_file.empty() ? cfg.output_dir / "two_moons.csv" : fs::path(out_file);
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    write_two_moons_csv(cloud, file);
    std::cout << "wrote " << file.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph-Laplacian-regularized rating prediction"};
    app.require_subcommand(1);

    CliOverrides o_predict, o_bench, o_sweep, o_gen;
    CLI::App* predict = app.add_subcommand("predict", "predict a score matrix with one method");
    add_common_options(predict, o_predict);
    bool dump_scores = false;
    predict->add_flag("--dump_scores", dump_scores, "also write the dense score matrix as scores_<split>.bin");
    CLI::App* bench = app.add_subcommand("bench", "compare methods: MAE, timings, speedup factors");
    add_common_options(bench, o_bench);
    CLI::App* sweep = app.add_subcommand("sweep-kb", "GBa bandwidth sweep with the Prop reference");
    add_common_options(sweep, o_sweep);
    CLI::App* gen = app.add_subcommand("gen-twomoons", "write the two-moons point cloud as CSV");
    add_common_options(gen, o_gen);
    std::string gen_out;
    gen->add_option("--out", gen_out, "output file (default <output_dir>/two_moons.csv)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (predict->parsed()) return cmd_predict(assemble(predict, o_predict), dump_scores);
        if (bench->parsed()) return cmd_bench(assemble(bench, o_bench));
        if (sweep->parsed()) return cmd_sweep_kb(assemble(sweep, o_sweep));
        if (gen->parsed()) {
            RunConfig cfg = assemble(gen, o_gen);
            if (cfg.dataset.kind != DatasetKind::two_moons) cfg.dataset.kind = DatasetKind::two_moons;
            return cmd_gen_twomoons(cfg, gen_out);
        }
    } catch (const ArgumentError& e) {
        std::cerr << "argument error: " << e.what() << '\n';
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 1;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
