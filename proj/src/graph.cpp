#include "glrp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <vector>

#include "glrp/errors.hpp"
#include "glrp/pairwise.hpp"

namespace glrp {

namespace {

// Indices of the k smallest entries of row i (excluding i), ties toward the
// lower index. Wrote into neighbors[i].
void select_neighbors(const Eigen::MatrixXd& d2, int k, std::vector<std::vector<int>>& neighbors, Eigen::Index i) {
    const Eigen::Index n = d2.rows();
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(n) - 1);
    for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) idx.push_back(static_cast<int>(j));
    auto closer = [&](int a, int b) {
        double da = d2(i, a), db = d2(i, b);
        return da < db || (da == db && a < b);
    };
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), closer);
    idx.resize(static_cast<std::size_t>(k));
    neighbors[static_cast<std::size_t>(i)] = std::move(idx);
}

}  // namespace

GraphModel knn_heat_graph_from_dists(const Eigen::MatrixXd& sq_dists, int k, std::optional<double> epsilon,
                                     bool parallel) {
    const Eigen::Index n = sq_dists.rows();
    if (n < 2) throw ArgumentError("graph needs at least 2 nodes");
    if (k < 1 || k >= n) throw ArgumentError("k must satisfy 1 <= k < n, got k=" + std::to_string(k));
    if (epsilon && *epsilon <= 0.0) throw ArgumentError("epsilon must be > 0");

    std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(n));
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
        for (Eigen::Index i = 0; i < n; ++i) select_neighbors(sq_dists, k, neighbors, i);
    } else {
        for (Eigen::Index i = 0; i < n; ++i) select_neighbors(sq_dists, k, neighbors, i);
    }

    double eps;
    if (epsilon) {
        eps = *epsilon;
    } else {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) acc += sq_dists(i, neighbors[static_cast<std::size_t>(i)].back());
        eps = acc / static_cast<double>(n);
        if (eps <= 0.0)
            throw ArgumentError("default epsilon is zero (duplicate points); pass an explicit epsilon");
    }

    GraphModel g;
    g.n = static_cast<int>(n);
    g.k = k;
    g.epsilon = eps;

    // Directed edges mirrored into both triangles; duplicate entries combined
    // by max give exactly W = max(W, W^T).
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(k) * 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int j : neighbors[static_cast<std::size_t>(i)]) {
            double w = std::exp(-sq_dists(i, j) / (4.0 * eps));
            trips.emplace_back(static_cast<int>(i), j, w);
            trips.emplace_back(j, static_cast<int>(i), w);
        }
    g.weights.resize(n, n);
    g.weights.setFromTriplets(trips.begin(), trips.end(), [](double a, double b) { return std::max(a, b); });

    g.degrees = g.weights * Eigen::VectorXd::Ones(n);

    std::vector<Eigen::Triplet<double>> ltrips;
    ltrips.reserve(trips.size() + static_cast<std::size_t>(n));
    for (int c = 0; c < g.weights.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(g.weights, c); it; ++it)
            ltrips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), -it.value());
    for (Eigen::Index i = 0; i < n; ++i)
        ltrips.emplace_back(static_cast<int>(i), static_cast<int>(i), g.degrees(i));
    g.laplacian.resize(n, n);
    g.laplacian.setFromTriplets(ltrips.begin(), ltrips.end());
    return g;
}

GraphModel knn_heat_graph(const Eigen::MatrixXd& points, int k, std::optional<double> epsilon) {
    return knn_heat_graph_from_dists(pairwise_sq_dists(points), k, epsilon, true);
}

GraphModel knn_heat_graph(const FeatureSet& features, int k, std::optional<double> epsilon) {
    return knn_heat_graph(features.vectors, k, epsilon);
}

namespace serial {
GraphModel knn_heat_graph(const Eigen::MatrixXd& points, int k, std::optional<double> epsilon) {
    return knn_heat_graph_from_dists(glrp::serial::pairwise_sq_dists(points), k, epsilon, false);
}
}  // namespace serial

double laplacian_quadratic(const Eigen::SparseMatrix<double>& laplacian, const Eigen::VectorXd& f) {
    if (laplacian.rows() != f.size() || laplacian.cols() != f.size())
        throw ArgumentError("laplacian_quadratic dimension mismatch");
    return f.dot(laplacian * f);
}

void write_graph_csv(const GraphModel& graph, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out.precision(17);
    out << "i,j,weight\n";
    for (int c = 0; c < graph.weights.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(graph.weights, c); it; ++it)
            if (it.row() < it.col()) out << it.row() << ',' << it.col() << ',' << it.value() << '\n';
}

}  // namespace glrp
