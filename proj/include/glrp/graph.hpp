#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <optional>

#include "glrp/features.hpp"

namespace glrp {

/// k-NN heat-kernel graph over the feature rows: weights, degrees and the
/// combinatorial Laplacian L = D - W.
struct GraphModel {
    int n = 0;
    int k = 0;
    double epsilon = 0.0;  // heat-kernel bandwidth actually used
    Eigen::SparseMatrix<double> weights;    // symmetric, zero diagonal
    Eigen::VectorXd degrees;                // d_i = sum_j W_ij
    Eigen::SparseMatrix<double> laplacian;  // D - W
};

// Connects each node to its k nearest neighbors by Euclidean feature distance
// with weight exp(-dist^2 / (4 epsilon)), then symmetrizes the directed
// relation as W <- max(W, W^T). Ties in distance break toward the lower node
// index. When epsilon is not given it defaults to the mean over nodes of the
// squared distance to the k-th nearest neighbor. OpenMP over rows.
GraphModel knn_heat_graph(const FeatureSet& features, int k, std::optional<double> epsilon = {});
GraphModel knn_heat_graph(const Eigen::MatrixXd& points, int k, std::optional<double> epsilon = {});

namespace serial {
GraphModel knn_heat_graph(const Eigen::MatrixXd& points, int k, std::optional<double> epsilon = {});
}

// Internal entry point used by both variants and by callers that already hold
// the pairwise squared-distance matrix.
GraphModel knn_heat_graph_from_dists(const Eigen::MatrixXd& sq_dists, int k, std::optional<double> epsilon,
                                     bool parallel);

// f^T L f
double laplacian_quadratic(const Eigen::SparseMatrix<double>& laplacian, const Eigen::VectorXd& f);

void write_graph_csv(const GraphModel& graph, const std::filesystem::path& file);

}  // namespace glrp
