#include <doctest.h>

#include <cstring>
#include <random>

#include "glrp/graph.hpp"
#include "glrp/kernel_grams.hpp"
#include "glrp/pairwise.hpp"

using namespace glrp;

namespace {

Eigen::MatrixXd random_points(std::uint64_t seed, int n, int d) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd pts(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) pts(i, j) = gauss(rng);
    return pts;
}

bool bit_identical(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("OpenMP pairwise distances are bit-identical to the serial reference") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        Eigen::MatrixXd pts = random_points(seed, 150, 7);
        CHECK(bit_identical(pairwise_sq_dists(pts), serial::pairwise_sq_dists(pts)));
    }
}

TEST_CASE("OpenMP gaussian gram is bit-identical to the serial reference") {
    Eigen::MatrixXd pts = random_points(9, 200, 5);
    CHECK(bit_identical(gaussian_gram(pts, 0.8), serial::gaussian_gram(pts, 0.8)));
}

TEST_CASE("OpenMP knn graph equals the serial reference exactly") {
    Eigen::MatrixXd pts = random_points(13, 180, 4);
    GraphModel a = knn_heat_graph(pts, 7);
    GraphModel b = serial::knn_heat_graph(pts, 7);
    CHECK(a.epsilon == b.epsilon);
    CHECK(bit_identical(Eigen::MatrixXd(a.weights), Eigen::MatrixXd(b.weights)));
    CHECK(bit_identical(Eigen::MatrixXd(a.laplacian), Eigen::MatrixXd(b.laplacian)));
}
