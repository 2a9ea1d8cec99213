#include "glrp/features.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <sstream>

#include "glrp/errors.hpp"

namespace glrp {

const char* to_string(Axis axis) { return axis == Axis::user_based ? "user_based" : "item_based"; }

namespace {

Eigen::MatrixXd imputed_matrix(const RatingMatrix& m, Impute impute) {
    const int n = m.n_users();
    const int d = m.n_items();
    const double global = m.global_mean();

    Eigen::MatrixXd x(n, d);
    if (impute == Impute::global_mean) {
        x.setConstant(global);
    } else {
        Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd row_cnt = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < d; ++i)
            for (const auto& [u, r] : m.labeled(i)) {
                row_sum(u) += r;
                row_cnt(u) += 1.0;
            }
        for (int u = 0; u < n; ++u)
            x.row(u).setConstant(row_cnt(u) > 0.0 ? row_sum(u) / row_cnt(u) : global);
    }
    for (int i = 0; i < d; ++i)
        for (const auto& [u, r] : m.labeled(i)) x(u, i) = r;
    return x;
}

Eigen::MatrixXd reduce(const Eigen::MatrixXd& x, int rank) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd u = svd.matrixU().leftCols(rank);
    Eigen::VectorXd s = svd.singularValues().head(rank);
    for (int c = 0; c < rank; ++c) {
        Eigen::Index imax = 0;
        u.col(c).cwiseAbs().maxCoeff(&imax);
        if (u(imax, c) < 0.0) u.col(c) = -u.col(c);
    }
    return u * s.asDiagonal();
}

}  // namespace

FeatureSet build_features(const RatingMatrix& train, Axis axis, Impute impute, std::optional<int> reduce_rank) {
    if (train.n_entries() == 0) throw ArgumentError("build_features requires a nonempty training matrix");

    const RatingMatrix* src = &train;
    RatingMatrix transposed;
    if (axis == Axis::item_based) {
        transposed = train.transposed();
        src = &transposed;
    }
    if (reduce_rank) {
        int lim = std::min(src->n_users(), src->n_items());
        if (*reduce_rank < 1 || *reduce_rank > lim)
            throw ArgumentError("reduce_rank " + std::to_string(*reduce_rank) + " outside [1," +
                                std::to_string(lim) + "]");
    }

    FeatureSet out;
    out.axis = axis;
    out.vectors = imputed_matrix(*src, impute);
    if (reduce_rank) out.vectors = reduce(out.vectors, *reduce_rank);
    if (!out.vectors.allFinite()) throw NumericError("feature matrix contains non-finite values");

    std::ostringstream prov;
    prov << "axis=" << to_string(axis) << " impute=" << (impute == Impute::row_mean ? "row_mean" : "global_mean")
         << " reduce_rank=" << (reduce_rank ? std::to_string(*reduce_rank) : "none") << " n=" << out.vectors.rows()
         << " d=" << out.vectors.cols();
    out.provenance = prov.str();
    return out;
}

void write_features_csv(const FeatureSet& features, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out.precision(17);
    for (Eigen::Index i = 0; i < features.vectors.rows(); ++i) {
        for (Eigen::Index j = 0; j < features.vectors.cols(); ++j) {
            if (j) out << ',';
            out << features.vectors(i, j);
        }
        out << '\n';
    }
}

}  // namespace glrp
