#pragma once

#include <Eigen/Core>

namespace glrp {

// Symmetric matrix of squared Euclidean distances between the rows of pts.
// Each pair is evaluated once and mirrored, so the result is exactly symmetric
// with an exactly zero diagonal. OpenMP over rows; entries are bit-identical
// to the serial reference for any thread count.
Eigen::MatrixXd pairwise_sq_dists(const Eigen::MatrixXd& pts);

namespace serial {
Eigen::MatrixXd pairwise_sq_dists(const Eigen::MatrixXd& pts);
}

}  // namespace glrp
