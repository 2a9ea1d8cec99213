#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SparseCore>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include "glrp/graph.hpp"

namespace glrp {

/// Gaussian gram K and equivalent gram R = K (lambda I + gamma L K)^{-1},
/// together with the factorization of (lambda I + gamma K L) used to build R
/// and to recover original-model coefficients (its transpose solves against
/// lambda I + gamma L K).
struct KernelGrams {
    Eigen::MatrixXd K;
    Eigen::MatrixXd R;
    double lambda = 0.0;
    double gamma = 0.0;
    double sigma = 0.0;
    // ||lambda R + gamma K L R - K||_F / ||K||_F recorded at build time.
    double relation_residual = 0.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> kl_factorization;  // of (lambda I + gamma K L)
};

// K_ij = exp(-||v_i - v_j||^2 / (2 sigma^2)); each pair evaluated once, unit
// diagonal, exactly symmetric. OpenMP over rows.
Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& points, double sigma);
Eigen::MatrixXd gaussian_gram_from_dists(const Eigen::MatrixXd& sq_dists, double sigma, bool parallel = true);

namespace serial {
Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& points, double sigma);
}

// Solves (lambda I + gamma K L) X = K, symmetrizes, and applies iterative
// refinement until the defining relation lambda R + gamma K L R = K holds at
// working precision. The factorization and the final residual are returned
// through the optional out-parameters.
Eigen::MatrixXd equivalent_gram(const Eigen::MatrixXd& K, const Eigen::SparseMatrix<double>& L, double lambda,
                                double gamma, Eigen::PartialPivLU<Eigen::MatrixXd>* out_factorization = nullptr,
                                double* out_residual = nullptr);

KernelGrams build_kernel_grams(const Eigen::MatrixXd& points, const GraphModel& graph, double lambda, double gamma,
                               double sigma);
KernelGrams build_kernel_grams_from_gram(Eigen::MatrixXd K, const GraphModel& graph, double lambda, double gamma,
                                         double sigma);

// Content hash for the binary gram cache: features, graph weights and the
// three kernel parameters.
std::uint64_t grams_content_key(const Eigen::MatrixXd& features, const GraphModel& graph, double lambda,
                                double gamma, double sigma);

void save_kernel_grams(const KernelGrams& grams, std::uint64_t key, const std::filesystem::path& file);

// Returns the cached grams when the file exists and carries the same key;
// the factorization of (lambda I + gamma K L) is rebuilt (one LU), the O(n^3)
// solve-and-refine for R is skipped.
std::optional<KernelGrams> try_load_kernel_grams(std::uint64_t key, const GraphModel& graph,
                                                 const std::filesystem::path& file);

// Cache-aware construction: with cache_dir unset this is
// build_kernel_grams_from_gram; otherwise the cache under cache_dir is
// consulted first and refreshed on miss.
KernelGrams obtain_kernel_grams(Eigen::MatrixXd K, const Eigen::MatrixXd& features, const GraphModel& graph,
                                double lambda, double gamma, double sigma,
                                const std::optional<std::filesystem::path>& cache_dir);

/// The three ingredients of ||f||_R^2 = lambda ||f||_K^2 + gamma f^T L f for
/// f = sum_j d_j R(v_j, .): norm_R_sq = d^T R_SS d, norm_K_sq = a^T K a with
/// a = T_S d, laplacian_term = f^T L f with f = R_{:,S} d.
struct RkhsNorms {
    double norm_R_sq = 0.0;
    double norm_K_sq = 0.0;
    double laplacian_term = 0.0;
};

RkhsNorms rkhs_norms(const Eigen::VectorXd& d, std::span<const int> label_idx, const KernelGrams& grams,
                     const Eigen::SparseMatrix<double>& L);

}  // namespace glrp
