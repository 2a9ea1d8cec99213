#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <random>

#include "glrp/errors.hpp"
#include "glrp/kernel_grams.hpp"
#include "helpers.hpp"

using namespace glrp;

namespace {

Eigen::SparseMatrix<double> path_laplacian(int n) {
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i + 1 < n; ++i) {
        t.emplace_back(i, i + 1, -1.0);
        t.emplace_back(i + 1, i, -1.0);
        t.emplace_back(i, i, 1.0);
        t.emplace_back(i + 1, i + 1, 1.0);
    }
    Eigen::SparseMatrix<double> l(n, n);
    l.setFromTriplets(t.begin(), t.end());
    return l;
}

Eigen::MatrixXd random_psd(std::uint64_t seed, int n) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = gauss(rng);
    return m * m.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("gaussian gram closed-form values") {
    Eigen::MatrixXd pts(2, 1);
    pts << 0.0, 4.0;
    Eigen::MatrixXd k4 = gaussian_gram(pts, 4.0);
    CHECK(k4(0, 0) == 1.0);
    CHECK(k4(1, 1) == 1.0);
    CHECK(k4(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

    pts << 0.0, 1.0;
    Eigen::MatrixXd k01 = gaussian_gram(pts, 0.1);
    CHECK(k01(0, 1) == doctest::Approx(std::exp(-50.0)).epsilon(1e-10));
    CHECK_THROWS_AS(gaussian_gram(pts, 0.0), ArgumentError);
}

TEST_CASE("gaussian gram is exactly symmetric, unit-diagonal and (0,1]-valued") {
    auto inst = test::make_instance(6, 80, 40);
    Eigen::MatrixXd k = gaussian_gram(inst.points, 0.8);
    CHECK(k == k.transpose());
    CHECK(k.diagonal().minCoeff() == 1.0);
    CHECK(k.maxCoeff() <= 1.0);
    CHECK(k.minCoeff() > 0.0);
}

TEST_CASE("gaussian gram is PSD and translation-invariant") {
    auto inst = test::make_instance(7, 120, 60);
    Eigen::MatrixXd k = gaussian_gram(inst.points, 0.7);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);

    Eigen::MatrixXd shifted = inst.points;
    shifted.rowwise() += Eigen::RowVectorXd::Constant(inst.points.cols(), 17.5);
    Eigen::MatrixXd ks = gaussian_gram(shifted, 0.7);
    CHECK((k - ks).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("equivalent gram closed forms") {
    SUBCASE("gamma = 0 gives R = K / lambda") {
        auto inst = test::make_instance(8, 50, 30);
        Eigen::MatrixXd k = gaussian_gram(inst.points, 0.9);
        Eigen::MatrixXd r = equivalent_gram(k, inst.graph.laplacian, 0.25, 0.0);
        CHECK((r - k / 0.25).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("scalar case") {
        Eigen::MatrixXd k(1, 1);
        k << 1.0;
        Eigen::SparseMatrix<double> l(1, 1);
        Eigen::MatrixXd r = equivalent_gram(k, l, 0.5, 0.3);
        CHECK(r(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    }
}

TEST_CASE("equivalent gram satisfies the defining relation and matches a dense-inverse oracle") {
    Eigen::MatrixXd k = random_psd(21, 5);
    Eigen::SparseMatrix<double> l = path_laplacian(5);
    const double lambda = 0.1, gamma = 0.5;
    double resid = -1.0;
    Eigen::MatrixXd r = equivalent_gram(k, l, lambda, gamma, nullptr, &resid);
    CHECK(resid <= 1e-10);
    CHECK(r == r.transpose());

    // Independent oracle: R = K T with T = (lambda I + gamma L K)^{-1} formed
    // explicitly through a full-pivot inverse.
    Eigen::MatrixXd t = (lambda * Eigen::MatrixXd::Identity(5, 5) + gamma * Eigen::MatrixXd(l) * k)
                            .fullPivLu()
                            .inverse();
    Eigen::MatrixXd oracle = k * t;
    CHECK((r - oracle).cwiseAbs().maxCoeff() / oracle.cwiseAbs().maxCoeff() < 1e-10);

    double direct = (lambda * r + gamma * (k * (Eigen::MatrixXd(l) * r)) - k).norm() / k.norm();
    CHECK(direct <= 1e-10);
}

TEST_CASE("relation residual stays at working precision on random instances") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 10ull, 11ull}) {
        auto inst = test::make_instance(seed, 120, 30);
        CHECK(inst.grams.relation_residual <= 1e-8);
        CHECK(inst.grams.R == inst.grams.R.transpose());
    }
}

TEST_CASE("matrix reproducing identity: lambda b'R e_i + gamma f'L R e_i = f_i") {
    std::mt19937_64 rng(33);
    std::normal_distribution<double> gauss;
    for (std::uint64_t seed : {4ull, 5ull, 9ull}) {
        auto inst = test::make_instance(seed, 50, 20);
        const Eigen::Index n = inst.grams.K.rows();
        Eigen::VectorXd b(n);
        for (Eigen::Index i = 0; i < n; ++i) b(i) = gauss(rng);
        Eigen::VectorXd f = inst.grams.K * b;
        Eigen::VectorXd lrf = inst.graph.laplacian * f;  // f^T L R e_i = (L f)^T R e_i
        double scale = f.cwiseAbs().maxCoeff();
        for (int t = 0; t < 10; ++t) {
            Eigen::Index i = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
            double lhs = inst.grams.lambda * b.dot(inst.grams.R.col(i)) + inst.grams.gamma * lrf.dot(inst.grams.R.col(i));
            CHECK(std::abs(lhs - f(i)) <= 1e-8 * scale);
        }
    }
}

TEST_CASE("rkhs_norms: zero coefficients, gamma=0 equality, and the norm inequality") {
    SUBCASE("d = 0") {
        auto inst = test::make_instance(12, 40, 25);
        Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(inst.item.label_idx.size()));
        RkhsNorms norms = rkhs_norms(d, inst.item.label_idx, inst.grams, inst.graph.laplacian);
        CHECK(norms.norm_R_sq == 0.0);
        CHECK(norms.norm_K_sq == 0.0);
        CHECK(norms.laplacian_term == 0.0);
    }
    SUBCASE("gamma = 0 collapses to lambda * ||f||_K^2") {
        auto inst = test::make_instance(13, 40, 25);
        const double lambda = 0.37;
        KernelGrams grams = build_kernel_grams(inst.points, inst.graph, lambda, 0.0, 0.8);
        Eigen::VectorXd d(inst.item.y.size());
        std::mt19937_64 rng(2);
        std::normal_distribution<double> gauss;
        for (Eigen::Index j = 0; j < d.size(); ++j) d(j) = gauss(rng);
        RkhsNorms norms = rkhs_norms(d, inst.item.label_idx, grams, inst.graph.laplacian);
        CHECK(norms.norm_R_sq == doctest::Approx(lambda * norms.norm_K_sq).epsilon(1e-10));
    }
    SUBCASE("norm_R_sq >= lambda norm_K_sq and the three-term identity, 100 instances") {
        std::mt19937_64 rng(44);
        std::normal_distribution<double> gauss;
        for (std::uint64_t seed = 100; seed < 200; ++seed) {
            auto inst = test::make_instance(seed, 50, 20);
            Eigen::VectorXd d(inst.item.y.size());
            for (Eigen::Index j = 0; j < d.size(); ++j) d(j) = gauss(rng);
            RkhsNorms norms = rkhs_norms(d, inst.item.label_idx, inst.grams, inst.graph.laplacian);
            CHECK(norms.norm_R_sq >= inst.grams.lambda * norms.norm_K_sq - 1e-10);
            double recomposed = inst.grams.lambda * norms.norm_K_sq + inst.grams.gamma * norms.laplacian_term;
            CHECK(norms.norm_R_sq ==
                  doctest::Approx(recomposed).epsilon(1e-6).scale(std::max(1.0, norms.norm_R_sq)));
        }
    }
    SUBCASE("index out of range") {
        auto inst = test::make_instance(14, 40, 25);
        std::vector<int> bad = {0, inst.graph.n + 3};
        CHECK_THROWS_AS(rkhs_norms(Eigen::VectorXd::Zero(2), bad, inst.grams, inst.graph.laplacian), ArgumentError);
    }
}

TEST_CASE("equivalent_gram argument and numeric errors") {
    Eigen::MatrixXd k = random_psd(50, 4);
    Eigen::SparseMatrix<double> l = path_laplacian(4);
    CHECK_THROWS_AS(equivalent_gram(k, l, 0.0, 0.5), ArgumentError);
    CHECK_THROWS_AS(equivalent_gram(k, l, 0.5, -0.1), ArgumentError);
    CHECK_THROWS_AS(equivalent_gram(k, path_laplacian(5), 0.5, 0.1), ArgumentError);
}
