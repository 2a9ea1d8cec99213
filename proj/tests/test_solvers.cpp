#include <doctest.h>

#include <cstring>
#include <random>

#include "glrp/errors.hpp"
#include "glrp/solvers.hpp"
#include "helpers.hpp"

using namespace glrp;

namespace {

double rel_linf(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).cwiseAbs().maxCoeff() / (b.cwiseAbs().maxCoeff() + 1e-12);
}

}  // namespace

TEST_CASE("method names parse and print") {
    CHECK(Method::parse("Ori") == Method::ori());
    CHECK(Method::parse("prop") == Method::prop());
    CHECK(Method::parse("GBa100") == Method::gba(100));
    CHECK(Method::gba(20).name() == "GBa20");
    CHECK_THROWS_AS(Method::parse("SVD"), ValidationError);
    CHECK_THROWS_AS(Method::parse("GBa0"), ValidationError);
    CHECK_THROWS_AS(Method::parse("GBaX"), ValidationError);
}

TEST_CASE("ori scalar normal equation") {
    // n=1, K=[1], gamma=0, lambda=1: (K_l K_l' + K) a = K_l y  =>  2a = y
    Eigen::MatrixXd pts(1, 1);
    pts << 0.0;
    std::vector<Eigen::Triplet<double>> none;
    GraphModel g;
    g.n = 1;
    g.k = 0;
    g.epsilon = 1.0;
    g.weights.resize(1, 1);
    g.laplacian.resize(1, 1);
    g.degrees = Eigen::VectorXd::Zero(1);
    KernelGrams grams = build_kernel_grams(pts, g, 1.0, 0.0, 1.0);
    SolverState state = precompute(Method::ori(), grams, g);
    LabeledItem item{0, {0}, Eigen::VectorXd::Constant(1, 3.0)};
    Prediction pred = ori_predict_item(state, item);
    CHECK(pred.coefficients(0) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(pred.f_star(0) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("zero labels give zero predictions for all methods") {
    auto inst = test::make_instance(3, 60, 30);
    LabeledItem item = inst.item;
    item.y.setZero();
    SolverState ori = precompute(Method::ori(), inst.grams, inst.graph);
    SolverState prop = precompute(Method::prop(), inst.grams, inst.graph);
    SolverState gba = precompute(Method::gba(10), inst.grams, inst.graph);
    CHECK(ori_predict_item(ori, item).f_star.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(prop_predict_item(prop, item).f_star.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(gba_predict_item(gba, item).f_star.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ori satisfies its normal equations") {
    for (std::uint64_t seed : {30ull, 31ull, 32ull}) {
        auto inst = test::make_instance(seed, 30, 20);
        SolverState state = precompute(Method::ori(), inst.grams, inst.graph);
        Prediction pred = ori_predict_item(state, inst.item);

        Eigen::MatrixXd ks(inst.grams.K.rows(), inst.item.label_idx.size());
        for (std::size_t j = 0; j < inst.item.label_idx.size(); ++j)
            ks.col(static_cast<Eigen::Index>(j)) = inst.grams.K.col(inst.item.label_idx[j]);
        Eigen::VectorXd rhs = ks * inst.item.y;
        Eigen::VectorXd lhs = state.system_base * pred.coefficients;
        lhs += ks * (ks.transpose() * pred.coefficients);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9 * rhs.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("prop per-item closed forms") {
    auto inst = test::make_instance(40, 50, 25);
    SolverState state = precompute(Method::prop(), inst.grams, inst.graph);
    SUBCASE("single label") {
        LabeledItem item{0, {5}, Eigen::VectorXd::Constant(1, 4.0)};
        Prediction pred = prop_predict_item(state, item);
        double expected_d = 4.0 / (1.0 + inst.grams.R(5, 5));
        CHECK(pred.coefficients(0) == doctest::Approx(expected_d).epsilon(1e-12));
        CHECK((pred.f_star - inst.grams.R.col(5) * expected_d).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("the equivalence: prop matches ori on 50 random instances") {
    int checked = 0;
    for (std::uint64_t seed = 500; seed < 550; ++seed) {
        auto inst = test::make_instance(seed, 200, 20);
        SolverState ori = precompute(Method::ori(), inst.grams, inst.graph);
        SolverState prop = precompute(Method::prop(), inst.grams, inst.graph);
        Eigen::VectorXd f_ori = ori_predict_item(ori, inst.item).f_star;
        Eigen::VectorXd f_prop = prop_predict_item(prop, inst.item).f_star;
        CHECK(rel_linf(f_prop, f_ori) <= 1e-6);
        ++checked;
    }
    CHECK(checked == 50);
}

TEST_CASE("gba at full bandwidth matches ori") {
    for (std::uint64_t seed : {60ull, 61ull}) {
        auto inst = test::make_instance(seed, 60, 25);
        SolverState ori = precompute(Method::ori(), inst.grams, inst.graph);
        SolverState gba = precompute(Method::gba(inst.graph.n), inst.grams, inst.graph);
        Eigen::VectorXd f_ori = ori_predict_item(ori, inst.item).f_star;
        Eigen::VectorXd f_gba = gba_predict_item(gba, inst.item).f_star;
        CHECK(rel_linf(f_gba, f_ori) <= 1e-6);
    }
}

TEST_CASE("gba precompute caches are consistent") {
    auto inst = test::make_instance(62, 60, 30);
    LaplacianEigensystem sys = eigendecompose_laplacian(inst.graph);
    SolverState state = precompute(Method::gba(12), inst.grams, inst.graph, &sys);

    // ascending eigenvalues
    for (int i = 1; i < 12; ++i) CHECK(state.gba_eigenvalues(i) >= state.gba_eigenvalues(i - 1) - 1e-12);
    // orthonormal basis
    Eigen::MatrixXd gram = state.gba_basis.transpose() * state.gba_basis;
    CHECK((gram - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() <= 1e-8);
    // sign convention: first nonzero component positive
    for (int c = 0; c < 12; ++c) {
        double tol = 1e-12 * state.gba_basis.col(c).cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < state.gba_basis.rows(); ++i) {
            if (std::abs(state.gba_basis(i, c)) > tol) {
                CHECK(state.gba_basis(i, c) > 0.0);
                break;
            }
        }
    }
    // B symmetric
    SolverState ori = precompute(Method::ori(), inst.grams, inst.graph);
    CHECK((ori.system_base - ori.system_base.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    // k_b bounds
    CHECK_THROWS_AS(precompute(Method::gba(inst.graph.n + 1), inst.grams, inst.graph, &sys), ArgumentError);
}

TEST_CASE("recover_alpha maps d back to an original-model solution") {
    SUBCASE("gamma = 0 scatters d / lambda") {
        auto inst = test::make_instance(70, 40, 25);
        const double lambda = 0.45;
        KernelGrams grams = build_kernel_grams(inst.points, inst.graph, lambda, 0.0, 0.8);
        SolverState state = precompute(Method::prop(), grams, inst.graph);
        Prediction pred = prop_predict_item(state, inst.item);
        Eigen::VectorXd a = recover_alpha(state, inst.item, pred.coefficients);
        Eigen::VectorXd expected = Eigen::VectorXd::Zero(inst.graph.n);
        for (std::size_t j = 0; j < inst.item.label_idx.size(); ++j)
            expected(inst.item.label_idx[j]) = pred.coefficients(static_cast<Eigen::Index>(j)) / lambda;
        CHECK((a - expected).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("d = 0 gives a = 0") {
        auto inst = test::make_instance(71, 40, 25);
        SolverState state = precompute(Method::prop(), inst.grams, inst.graph);
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(inst.item.label_idx.size()));
        CHECK(recover_alpha(state, inst.item, zero).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("a satisfies the original normal equations and K a = f_star") {
        for (std::uint64_t seed = 700; seed < 715; ++seed) {
            auto inst = test::make_instance(seed, 120, 20);
            SolverState state = precompute(Method::prop(), inst.grams, inst.graph);
            Prediction pred = prop_predict_item(state, inst.item);
            Eigen::VectorXd a = recover_alpha(state, inst.item, pred.coefficients);

            Eigen::MatrixXd ks(inst.grams.K.rows(), inst.item.label_idx.size());
            for (std::size_t j = 0; j < inst.item.label_idx.size(); ++j)
                ks.col(static_cast<Eigen::Index>(j)) = inst.grams.K.col(inst.item.label_idx[j]);
            Eigen::VectorXd rhs = ks * inst.item.y;
            SolverState ori = precompute(Method::ori(), inst.grams, inst.graph);
            Eigen::VectorXd lhs = ori.system_base * a;
            lhs += ks * (ks.transpose() * a);
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-8 * rhs.cwiseAbs().maxCoeff());

            CHECK(rel_linf(inst.grams.K * a, pred.f_star) <= 1e-8);
        }
    }
}

TEST_CASE("prop solution minimizes the original objective against perturbations") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> gauss;
    for (std::uint64_t seed : {80ull, 81ull, 82ull}) {
        auto inst = test::make_instance(seed, 50, 20);
        SolverState state = precompute(Method::prop(), inst.grams, inst.graph);
        Prediction pred = prop_predict_item(state, inst.item);
        Eigen::VectorXd a = recover_alpha(state, inst.item, pred.coefficients);

        auto objective = [&](const Eigen::VectorXd& coeffs) {
            Eigen::VectorXd f = inst.grams.K * coeffs;
            double fit = 0.0;
            for (std::size_t j = 0; j < inst.item.label_idx.size(); ++j) {
                double diff = f(inst.item.label_idx[j]) - inst.item.y(static_cast<Eigen::Index>(j));
                fit += diff * diff;
            }
            double k_norm = coeffs.dot(inst.grams.K * coeffs);
            double smooth = f.dot(inst.graph.laplacian * f);
            return fit + inst.grams.lambda * k_norm + inst.grams.gamma * smooth;
        };
        double best = objective(a);
        for (int t = 0; t < 20; ++t) {
            Eigen::VectorXd eta(a.size());
            for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = gauss(rng);
            eta.normalize();
            CHECK(objective(a + 1e-3 * eta) >= best - 1e-12 * std::max(1.0, best));
        }
    }
}

TEST_CASE("predict_matrix fills, overwrites and clips") {
    auto inst = test::make_instance(90, 40, 30);
    const int n = inst.graph.n;
    SolverState state = precompute(Method::prop(), inst.grams, inst.graph);

    SUBCASE("fully labeled items reproduce the training matrix") {
        std::vector<RatingEntry> entries;
        std::mt19937_64 rng(4);
        for (int u = 0; u < n; ++u)
            for (int i = 0; i < 3; ++i) entries.push_back({u, i, 1.0 + static_cast<double>(rng() % 5)});
        RatingMatrix train = RatingMatrix::from_entries(n, 3, entries, {1.0, 6.0});
        MatrixPrediction out = predict_matrix(state, train);
        for (const RatingEntry& e : train.entries()) CHECK(out.scores(e.user, e.item) == e.rating);
    }

    SUBCASE("items without labels take the global training mean") {
        RatingMatrix train = RatingMatrix::from_entries(n, 2, {{0, 0, 2.0}, {1, 0, 4.0}});
        MatrixPrediction out = predict_matrix(state, train);
        CHECK(out.mean_filled_items == 1);
        CHECK(out.scores(3, 1) == doctest::Approx(3.0));
    }

    SUBCASE("clipping clamps predictions but not known entries") {
        RatingMatrix train = RatingMatrix::from_entries(n, 1, {{0, 0, 5.0}, {1, 0, 1.0}});
        MatrixPrediction out = predict_matrix(state, train, std::make_pair(2.0, 4.5));
        CHECK(out.scores(0, 0) == 5.0);
        for (int u = 2; u < n; ++u) {
            CHECK(out.scores(u, 0) >= 2.0);
            CHECK(out.scores(u, 0) <= 4.5);
        }
    }

    SUBCASE("axis mismatch") {
        RatingMatrix train = RatingMatrix::from_entries(n + 1, 2, {{0, 0, 3.0}});
        CHECK_THROWS_AS(predict_matrix(state, train), ArgumentError);
    }
}

TEST_CASE("identical inputs give bit-identical predictions, serial or parallel") {
    auto inst = test::make_instance(91, 60, 40);
    const int n = inst.graph.n;
    std::mt19937_64 rng(8);
    std::vector<RatingEntry> entries;
    for (int i = 0; i < 25; ++i)
        for (int t = 0; t < 6; ++t) {
            int u = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
            double r = 1.0 + static_cast<double>(rng() % 5);
            entries.push_back({u, i, r});
        }
    std::sort(entries.begin(), entries.end(), [](auto& a, auto& b) {
        return std::tie(a.user, a.item) < std::tie(b.user, b.item);
    });
    entries.erase(std::unique(entries.begin(), entries.end(),
                              [](auto& a, auto& b) { return a.user == b.user && a.item == b.item; }),
                  entries.end());
    RatingMatrix train = RatingMatrix::from_entries(n, 25, entries);

    for (Method m : {Method::prop(), Method::ori(), Method::gba(10)}) {
        SolverState state = precompute(m, inst.grams, inst.graph);
        MatrixPrediction a = predict_matrix(state, train, {}, false);
        MatrixPrediction b = predict_matrix(state, train, {}, false);
        MatrixPrediction c = predict_matrix(state, train, {}, true);
        CHECK(std::memcmp(a.scores.data(), b.scores.data(), sizeof(double) * a.scores.size()) == 0);
        CHECK(std::memcmp(a.scores.data(), c.scores.data(), sizeof(double) * a.scores.size()) == 0);
    }
}

TEST_CASE("per-item argument validation") {
    auto inst = test::make_instance(92, 40, 30);
    SolverState prop = precompute(Method::prop(), inst.grams, inst.graph);
    LabeledItem empty{0, {}, Eigen::VectorXd()};
    CHECK_THROWS_AS(prop_predict_item(prop, empty), ArgumentError);
    LabeledItem bad{0, {inst.graph.n + 1}, Eigen::VectorXd::Constant(1, 3.0)};
    CHECK_THROWS_AS(prop_predict_item(prop, bad), ArgumentError);
    CHECK_THROWS_AS(ori_predict_item(prop, inst.item), ArgumentError);  // wrong state kind
}
