#include "glrp/pairwise.hpp"

namespace glrp {

namespace {

inline void fill_row_tail(const Eigen::MatrixXd& pts, Eigen::MatrixXd& d2, Eigen::Index i) {
    const Eigen::Index n = pts.rows();
    d2(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
        double v = (pts.row(i) - pts.row(j)).squaredNorm();
        d2(i, j) = v;
        d2(j, i) = v;
    }
}

}  // namespace

Eigen::MatrixXd pairwise_sq_dists(const Eigen::MatrixXd& pts) {
    const Eigen::Index n = pts.rows();
    Eigen::MatrixXd d2(n, n);
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < n; ++i) fill_row_tail(pts, d2, i);
    return d2;
}

namespace serial {

Eigen::MatrixXd pairwise_sq_dists(const Eigen::MatrixXd& pts) {
    const Eigen::Index n = pts.rows();
    Eigen::MatrixXd d2(n, n);
    for (Eigen::Index i = 0; i < n; ++i) fill_row_tail(pts, d2, i);
    return d2;
}

}  // namespace serial

}  // namespace glrp
