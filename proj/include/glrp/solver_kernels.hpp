#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/LU>
#include <span>

#include "glrp/errors.hpp"

namespace glrp {

/// Preallocated buffers for the per-item equivalent-model solve. Total
/// footprint is max_labels^2 + max_labels doubles; the solve itself never
/// touches memory beyond this workspace and its output vectors, which is what
/// keeps the per-item cost at O(l^2 + n l) with no n x n factorization.
struct PropWorkspace {
    explicit PropWorkspace(Eigen::Index max_labels)
        : system(max_labels, max_labels), coeff(max_labels) {}

    Eigen::MatrixXd system;  // holds I + R_SS for the current item
    Eigen::VectorXd coeff;   // scratch for the d solve

    Eigen::Index capacity_doubles() const { return system.size() + coeff.size(); }
};

struct PropItemStats {
    bool used_lu_fallback = false;
};

// Solves (I + R_SS) d = y via an in-place Cholesky factorization of the
// workspace block (I + R_SS is symmetric positive definite since R is PSD;
// a pivoted in-place LU takes over on breakdown), then accumulates
// f = R[:,S] d into f_out. f_out must have R.rows() entries; d_out must have
// |labels| entries.
inline PropItemStats prop_solve_item(const Eigen::MatrixXd& R, std::span<const int> labels,
                                     const Eigen::VectorXd& y, PropWorkspace& ws,
                                     Eigen::Ref<Eigen::VectorXd> f_out, Eigen::Ref<Eigen::VectorXd> d_out) {
    const Eigen::Index n = R.rows();
    const Eigen::Index l = static_cast<Eigen::Index>(labels.size());
    if (l < 1) throw ArgumentError("per-item solve needs at least one labeled user");
    if (y.size() != l || d_out.size() != l || f_out.size() != n || ws.system.rows() < l)
        throw ArgumentError("per-item solve buffer sizes do not match the label set");
    for (int s : labels)
        if (s < 0 || s >= n) throw ArgumentError("label index " + std::to_string(s) + " out of range");

    auto a = ws.system.topLeftCorner(l, l);
    for (Eigen::Index j = 0; j < l; ++j) {
        const int sj = labels[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < l; ++i) a(i, j) = R(labels[static_cast<std::size_t>(i)], sj);
        a(j, j) += 1.0;
    }

    PropItemStats stats;
    d_out = y;
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(a);
    if (llt.info() == Eigen::Success) {
        llt.solveInPlace(d_out);
    } else {
        stats.used_lu_fallback = true;
        // Rebuild the block: the failed Cholesky scribbled over it.
        for (Eigen::Index j = 0; j < l; ++j) {
            const int sj = labels[static_cast<std::size_t>(j)];
            for (Eigen::Index i = 0; i < l; ++i) a(i, j) = R(labels[static_cast<std::size_t>(i)], sj);
            a(j, j) += 1.0;
        }
        Eigen::PartialPivLU<Eigen::Ref<Eigen::MatrixXd>> lu(a);
        d_out = lu.solve(y);
        if (!d_out.allFinite()) throw NumericError("per-item system factorization broke down", lu.rcond());
    }

    f_out.setZero();
    for (Eigen::Index j = 0; j < l; ++j) f_out += d_out(j) * R.col(labels[static_cast<std::size_t>(j)]);
    return stats;
}

}  // namespace glrp
