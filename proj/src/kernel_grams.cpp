#include "glrp/kernel_grams.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "glrp/errors.hpp"
#include "glrp/pairwise.hpp"

namespace glrp {

Eigen::MatrixXd gaussian_gram_from_dists(const Eigen::MatrixXd& sq_dists, double sigma, bool parallel) {
    if (sigma <= 0.0) throw ArgumentError("sigma must be > 0");
    const Eigen::Index n = sq_dists.rows();
    const double inv = 1.0 / (2.0 * sigma * sigma);
    Eigen::MatrixXd k(n, n);
    auto fill_row = [&](Eigen::Index i) {
        k(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double v = std::exp(-sq_dists(i, j) * inv);
            k(i, j) = v;
            k(j, i) = v;
        }
    };
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
        for (Eigen::Index i = 0; i < n; ++i) fill_row(i);
    } else {
        for (Eigen::Index i = 0; i < n; ++i) fill_row(i);
    }
    return k;
}

Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& points, double sigma) {
    return gaussian_gram_from_dists(pairwise_sq_dists(points), sigma, true);
}

namespace serial {
Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& points, double sigma) {
    return gaussian_gram_from_dists(glrp::serial::pairwise_sq_dists(points), sigma, false);
}
}  // namespace serial

namespace {

// ||lambda R + gamma K L R - K||_F relative to ||K||_F, with the defect matrix
// returned for refinement.
double relation_defect(const Eigen::MatrixXd& K, const Eigen::SparseMatrix<double>& L, double lambda, double gamma,
                       const Eigen::MatrixXd& R, Eigen::MatrixXd& defect) {
    Eigen::MatrixXd LR = L * R;
    defect.noalias() = K * LR;
    defect *= -gamma;
    defect -= lambda * R;
    defect += K;
    return defect.norm() / K.norm();
}

}  // namespace

Eigen::MatrixXd equivalent_gram(const Eigen::MatrixXd& K, const Eigen::SparseMatrix<double>& L, double lambda,
                                double gamma, Eigen::PartialPivLU<Eigen::MatrixXd>* out_factorization,
                                double* out_residual) {
    if (lambda <= 0.0) throw ArgumentError("lambda must be > 0");
    if (gamma < 0.0) throw ArgumentError("gamma must be >= 0");
    if (K.rows() != K.cols() || K.rows() != L.rows() || L.rows() != L.cols())
        throw ArgumentError("equivalent_gram dimension mismatch");
    const Eigen::Index n = K.rows();

    // A = lambda I + gamma K L; A^T = lambda I + gamma L K, so X = R^T here.
    Eigen::MatrixXd A = gamma * (K * L);
    A.diagonal().array() += lambda;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);

    Eigen::MatrixXd R = lu.solve(K);
    R = 0.5 * (R + R.transpose()).eval();

    Eigen::MatrixXd defect(n, n);
    double resid = relation_defect(K, L, lambda, gamma, R, defect);
    if (!std::isfinite(resid)) throw NumericError("equivalent gram factorization failed", lu.rcond());
    for (int iter = 0; iter < 3 && resid > 1e-13; ++iter) {
        Eigen::MatrixXd corr = lu.solve(defect);
        Eigen::MatrixXd candidate = R + 0.5 * (corr + corr.transpose());
        double next = relation_defect(K, L, lambda, gamma, candidate, defect);
        if (!std::isfinite(next) || next >= resid) {
            // recompute defect for the kept R since `defect` was overwritten
            resid = relation_defect(K, L, lambda, gamma, R, defect);
            break;
        }
        R.swap(candidate);
        resid = next;
    }
    if (resid > 1e-3) throw NumericError("equivalent gram residual " + std::to_string(resid), lu.rcond());

    if (out_factorization) *out_factorization = std::move(lu);
    if (out_residual) *out_residual = resid;
    return R;
}

KernelGrams build_kernel_grams_from_gram(Eigen::MatrixXd K, const GraphModel& graph, double lambda, double gamma,
                                         double sigma) {
    KernelGrams g;
    g.lambda = lambda;
    g.gamma = gamma;
    g.sigma = sigma;
    g.R = equivalent_gram(K, graph.laplacian, lambda, gamma, &g.kl_factorization, &g.relation_residual);
    g.K = std::move(K);
    return g;
}

KernelGrams build_kernel_grams(const Eigen::MatrixXd& points, const GraphModel& graph, double lambda, double gamma,
                               double sigma) {
    return build_kernel_grams_from_gram(gaussian_gram(points, sigma), graph, lambda, gamma, sigma);
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;
constexpr char kGramMagic[8] = {'G', 'L', 'R', 'P', 'G', 'R', 'M', '1'};

void fnv_mix(std::uint64_t& h, const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

Eigen::PartialPivLU<Eigen::MatrixXd> factorize_kl(const Eigen::MatrixXd& K, const Eigen::SparseMatrix<double>& L,
                                                  double lambda, double gamma) {
    Eigen::MatrixXd a = gamma * (K * L);
    a.diagonal().array() += lambda;
    return Eigen::PartialPivLU<Eigen::MatrixXd>(a);
}

}  // namespace

std::uint64_t grams_content_key(const Eigen::MatrixXd& features, const GraphModel& graph, double lambda,
                                double gamma, double sigma) {
    std::uint64_t h = kFnvOffset;
    const Eigen::Index fr = features.rows(), fc = features.cols();
    fnv_mix(h, &fr, sizeof fr);
    fnv_mix(h, &fc, sizeof fc);
    fnv_mix(h, features.data(), sizeof(double) * static_cast<std::size_t>(features.size()));
    fnv_mix(h, &lambda, sizeof lambda);
    fnv_mix(h, &gamma, sizeof gamma);
    fnv_mix(h, &sigma, sizeof sigma);
    fnv_mix(h, &graph.epsilon, sizeof graph.epsilon);
    fnv_mix(h, &graph.k, sizeof graph.k);
    for (int c = 0; c < graph.weights.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(graph.weights, c); it; ++it) {
            const int r = static_cast<int>(it.row());
            const double v = it.value();
            fnv_mix(h, &r, sizeof r);
            fnv_mix(h, &c, sizeof c);
            fnv_mix(h, &v, sizeof v);
        }
    return h;
}

void save_kernel_grams(const KernelGrams& grams, std::uint64_t key, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    const std::int64_t n = grams.K.rows();
    out.write(kGramMagic, sizeof kGramMagic);
    out.write(reinterpret_cast<const char*>(&key), sizeof key);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&grams.lambda), sizeof grams.lambda);
    out.write(reinterpret_cast<const char*>(&grams.gamma), sizeof grams.gamma);
    out.write(reinterpret_cast<const char*>(&grams.sigma), sizeof grams.sigma);
    out.write(reinterpret_cast<const char*>(&grams.relation_residual), sizeof grams.relation_residual);
    out.write(reinterpret_cast<const char*>(grams.K.data()), sizeof(double) * static_cast<std::streamsize>(n * n));
    out.write(reinterpret_cast<const char*>(grams.R.data()), sizeof(double) * static_cast<std::streamsize>(n * n));
    if (!out) throw IoError("write failed for " + file.string());
}

std::optional<KernelGrams> try_load_kernel_grams(std::uint64_t key, const GraphModel& graph,
                                                 const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[sizeof kGramMagic];
    std::uint64_t stored_key = 0;
    std::int64_t n = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&stored_key), sizeof stored_key);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!in || std::memcmp(magic, kGramMagic, sizeof magic) != 0 || stored_key != key || n != graph.n)
        return std::nullopt;
    KernelGrams g;
    in.read(reinterpret_cast<char*>(&g.lambda), sizeof g.lambda);
    in.read(reinterpret_cast<char*>(&g.gamma), sizeof g.gamma);
    in.read(reinterpret_cast<char*>(&g.sigma), sizeof g.sigma);
    in.read(reinterpret_cast<char*>(&g.relation_residual), sizeof g.relation_residual);
    g.K.resize(n, n);
    g.R.resize(n, n);
    in.read(reinterpret_cast<char*>(g.K.data()), sizeof(double) * static_cast<std::streamsize>(n * n));
    in.read(reinterpret_cast<char*>(g.R.data()), sizeof(double) * static_cast<std::streamsize>(n * n));
    if (!in) return std::nullopt;
    g.kl_factorization = factorize_kl(g.K, graph.laplacian, g.lambda, g.gamma);
    return g;
}

KernelGrams obtain_kernel_grams(Eigen::MatrixXd K, const Eigen::MatrixXd& features, const GraphModel& graph,
                                double lambda, double gamma, double sigma,
                                const std::optional<std::filesystem::path>& cache_dir) {
    if (!cache_dir) return build_kernel_grams_from_gram(std::move(K), graph, lambda, gamma, sigma);
    const std::uint64_t key = grams_content_key(features, graph, lambda, gamma, sigma);
    char name[32];
    std::snprintf(name, sizeof name, "grams_%016llx.bin", static_cast<unsigned long long>(key));
    const std::filesystem::path file = *cache_dir / name;
    if (auto cached = try_load_kernel_grams(key, graph, file)) return std::move(*cached);
    KernelGrams g = build_kernel_grams_from_gram(std::move(K), graph, lambda, gamma, sigma);
    std::filesystem::create_directories(*cache_dir);
    save_kernel_grams(g, key, file);
    return g;
}

RkhsNorms rkhs_norms(const Eigen::VectorXd& d, std::span<const int> label_idx, const KernelGrams& grams,
                     const Eigen::SparseMatrix<double>& L) {
    const Eigen::Index n = grams.R.rows();
    const Eigen::Index l = d.size();
    if (static_cast<Eigen::Index>(label_idx.size()) != l) throw ArgumentError("rkhs_norms: |d| != |label_idx|");
    for (int s : label_idx)
        if (s < 0 || s >= n) throw ArgumentError("rkhs_norms: label index " + std::to_string(s) + " out of range");

    RkhsNorms out;
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < l; ++j) {
        int s = label_idx[static_cast<std::size_t>(j)];
        f += d(j) * grams.R.col(s);
        z(s) += d(j);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < l; ++i) acc += d(i) * grams.R(label_idx[static_cast<std::size_t>(i)], s);
        out.norm_R_sq += acc * d(j);
    }
    // a = T_S d solves (lambda I + gamma L K) a = z, the transpose of the
    // cached factorization, with one refinement pass.
    Eigen::VectorXd a = grams.kl_factorization.transpose().solve(z);
    {
        Eigen::VectorXd resid = z - grams.lambda * a - grams.gamma * (L * (grams.K * a));
        if (resid.norm() > 1e-14 * z.norm()) {
            Eigen::VectorXd corr = grams.kl_factorization.transpose().solve(resid);
            a += corr;
        }
    }
    out.norm_K_sq = a.dot(grams.K * a);
    out.laplacian_term = laplacian_quadratic(L, f);
    return out;
}

}  // namespace glrp
