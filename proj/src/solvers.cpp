#include "glrp/solvers.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>

#include "glrp/errors.hpp"
#include "glrp/solver_kernels.hpp"

namespace glrp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
    return out;
}

void check_item(const SolverState& state, const LabeledItem& item) {
    const Eigen::Index n = state.grams->K.rows();
    if (item.label_idx.empty()) throw ArgumentError("per-item solve needs at least one labeled user");
    if (static_cast<Eigen::Index>(item.label_idx.size()) != item.y.size())
        throw ArgumentError("labeled item: |y| != |label_idx|");
    for (int s : item.label_idx)
        if (s < 0 || s >= n) throw ArgumentError("label index " + std::to_string(s) + " out of range");
}

}  // namespace

Method Method::parse(const std::string& name) {
    std::string low(name);
    std::transform(low.begin(), low.end(), low.begin(), [](unsigned char c) { return std::tolower(c); });
    if (low == "ori") return ori();
    if (low == "prop" || low == "prop.") return prop();
    if (low.rfind("gba", 0) == 0) {
        try {
            std::size_t pos = 0;
            int kb = std::stoi(low.substr(3), &pos);
            if (pos == low.size() - 3 && kb >= 1) return gba(kb);
        } catch (const std::exception&) {
        }
    }
    throw ValidationError("unknown method '" + name + "' (expected Ori, Prop or GBa<k_b>)");
}

std::string Method::name() const {
    switch (kind) {
        case MethodKind::ori: return "Ori";
        case MethodKind::prop: return "Prop";
        case MethodKind::gba: return "GBa" + std::to_string(k_b);
    }
    return "?";
}

LaplacianEigensystem eigendecompose_laplacian(const GraphModel& graph) {
    auto t0 = Clock::now();
    Eigen::MatrixXd dense = Eigen::MatrixXd(graph.laplacian);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    if (es.info() != Eigen::Success) throw NumericError("Laplacian eigendecomposition failed");
    LaplacianEigensystem sys;
    sys.values = es.eigenvalues();
    sys.vectors = es.eigenvectors();
    for (Eigen::Index c = 0; c < sys.vectors.cols(); ++c) {
        auto col = sys.vectors.col(c);
        const double tol = 1e-12 * col.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < col.size(); ++i) {
            if (std::abs(col(i)) > tol) {
                if (col(i) < 0.0) sys.vectors.col(c) = -col;
                break;
            }
        }
    }
    sys.seconds = seconds_since(t0);
    return sys;
}

namespace {

// B = lambda K + gamma K L K, symmetrized.
Eigen::MatrixXd normal_system_base(const KernelGrams& grams, const GraphModel& graph) {
    Eigen::MatrixXd lk = graph.laplacian * grams.K;
    Eigen::MatrixXd b = grams.gamma * (grams.K * lk);
    b += grams.lambda * grams.K;
    b = 0.5 * (b + b.transpose()).eval();
    return b;
}

}  // namespace

SolverState precompute(Method method, const KernelGrams& grams, const GraphModel& graph,
                       const LaplacianEigensystem* shared_eigensystem) {
    if (grams.K.rows() != graph.n) throw ArgumentError("grams and graph node counts differ");
    SolverState state;
    state.method = method;
    state.grams = &grams;
    state.graph = &graph;

    auto t0 = Clock::now();
    switch (method.kind) {
        case MethodKind::prop:
            break;  // R already lives in grams
        case MethodKind::ori:
            state.system_base = normal_system_base(grams, graph);
            break;
        case MethodKind::gba: {
            const int n = graph.n;
            if (method.k_b < 1 || method.k_b > n)
                throw ArgumentError("k_b must satisfy 1 <= k_b <= n, got " + std::to_string(method.k_b));
            double shared_seconds = 0.0;
            LaplacianEigensystem local;
            const LaplacianEigensystem* sys = shared_eigensystem;
            if (!sys) {
                local = eigendecompose_laplacian(graph);
                sys = &local;
            } else {
                shared_seconds = sys->seconds;
            }
            Eigen::MatrixXd b = normal_system_base(grams, graph);
            state.gba_basis = sys->vectors.leftCols(method.k_b);
            state.gba_eigenvalues = sys->values.head(method.k_b);
            state.gba_reduced = state.gba_basis.transpose() * b * state.gba_basis;
            state.gba_reduced = 0.5 * (state.gba_reduced + state.gba_reduced.transpose()).eval();
            state.gba_projection = grams.K * state.gba_basis;
            state.precompute_seconds = shared_seconds;  // charged even when reused
            break;
        }
    }
    state.precompute_seconds += seconds_since(t0);
    return state;
}

Prediction ori_predict_item(const SolverState& state, const LabeledItem& item) {
    if (state.method.kind != MethodKind::ori) throw ArgumentError("state was not precomputed for Ori");
    check_item(state, item);
    auto t0 = Clock::now();

    const Eigen::MatrixXd& k = state.grams->K;
    Eigen::MatrixXd ks = gather_columns(k, item.label_idx);
    Eigen::MatrixXd a = state.system_base;
    a.noalias() += ks * ks.transpose();
    Eigen::VectorXd rhs = ks * item.y;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    Prediction pred;
    pred.coefficients = lu.solve(rhs);
    if (!pred.coefficients.allFinite())
        throw NumericError("original-model normal equations are numerically singular", lu.rcond());
    {
        Eigen::VectorXd resid = rhs - a * pred.coefficients;
        if (resid.norm() > 1e-14 * rhs.norm()) {
            Eigen::VectorXd corr = lu.solve(resid);
            if (corr.allFinite()) pred.coefficients += corr;
        }
    }
    pred.f_star.noalias() = k * pred.coefficients;
    pred.solve_seconds = seconds_since(t0);
    return pred;
}

Prediction gba_predict_item(const SolverState& state, const LabeledItem& item) {
    if (state.method.kind != MethodKind::gba) throw ArgumentError("state was not precomputed for GBa");
    check_item(state, item);
    auto t0 = Clock::now();

    Eigen::MatrixXd ks = gather_columns(state.grams->K, item.label_idx);
    Eigen::MatrixXd q = state.gba_basis.transpose() * ks;  // k_b x l
    Eigen::MatrixXd m = state.gba_reduced;
    m.noalias() += q * q.transpose();
    Eigen::VectorXd rhs = q * item.y;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    Prediction pred;
    pred.coefficients = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !pred.coefficients.allFinite())
        throw NumericError("reduced bandlimited system is numerically singular");
    pred.f_star.noalias() = state.gba_projection * pred.coefficients;
    pred.solve_seconds = seconds_since(t0);
    return pred;
}

Prediction prop_predict_item(const SolverState& state, const LabeledItem& item) {
    if (state.method.kind != MethodKind::prop) throw ArgumentError("state was not precomputed for Prop");
    check_item(state, item);
    auto t0 = Clock::now();

    const Eigen::Index l = static_cast<Eigen::Index>(item.label_idx.size());
    PropWorkspace ws(l);
    Prediction pred;
    pred.f_star.resize(state.grams->R.rows());
    pred.coefficients.resize(l);
    prop_solve_item(state.grams->R, item.label_idx, item.y, ws, pred.f_star, pred.coefficients);
    pred.coeff_idx = item.label_idx;
    pred.solve_seconds = seconds_since(t0);
    return pred;
}

Prediction predict_item(const SolverState& state, const LabeledItem& item) {
    switch (state.method.kind) {
        case MethodKind::ori: return ori_predict_item(state, item);
        case MethodKind::gba: return gba_predict_item(state, item);
        case MethodKind::prop: return prop_predict_item(state, item);
    }
    throw ArgumentError("unknown method");
}

Eigen::VectorXd recover_alpha(const SolverState& state, const LabeledItem& item, const Eigen::VectorXd& d) {
    if (state.method.kind != MethodKind::prop) throw ArgumentError("recover_alpha applies to the Prop state");
    check_item(state, item);
    if (d.size() != static_cast<Eigen::Index>(item.label_idx.size()))
        throw ArgumentError("recover_alpha: |d| != |label_idx|");

    const KernelGrams& grams = *state.grams;
    const Eigen::Index n = grams.K.rows();
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < d.size(); ++j) z(item.label_idx[static_cast<std::size_t>(j)]) += d(j);

    // (lambda I + gamma L K) a = z via the transposed cached factorization,
    // with one refinement pass to push the residual to working precision.
    auto solve_t = [&](const Eigen::VectorXd& rhs) { return grams.kl_factorization.transpose().solve(rhs).eval(); };
    auto apply = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd out = grams.gamma * (state.graph->laplacian * (grams.K * x));
        out += grams.lambda * x;
        return out;
    };
    Eigen::VectorXd a = solve_t(z);
    Eigen::VectorXd resid = z - apply(a);
    if (resid.norm() > 1e-14 * z.norm()) a += solve_t(resid);
    if (!a.allFinite()) throw NumericError("coefficient recovery solve failed", grams.kl_factorization.rcond());
    return a;
}

MatrixPrediction predict_matrix(const SolverState& state, const RatingMatrix& train,
                                std::optional<std::pair<double, double>> clip, bool parallel_items) {
    const Eigen::Index n = state.grams->K.rows();
    if (train.n_users() != n)
        throw ArgumentError("prediction axis mismatch: state has " + std::to_string(n) + " nodes, train has " +
                            std::to_string(train.n_users()) + " users");
    const int m = train.n_items();
    const double global = train.n_entries() > 0 ? train.global_mean() : 0.0;

    MatrixPrediction out;
    out.scores.resize(n, m);
    out.item_seconds.assign(static_cast<std::size_t>(m), 0.0);

    auto solve_one = [&](int i) {
        auto labeled = train.labeled(i);
        if (labeled.empty()) {
            out.scores.col(i).setConstant(global);
            return false;
        }
        LabeledItem item;
        item.item_index = i;
        item.label_idx.reserve(labeled.size());
        item.y.resize(static_cast<Eigen::Index>(labeled.size()));
        for (std::size_t j = 0; j < labeled.size(); ++j) {
            item.label_idx.push_back(labeled[j].first);
            item.y(static_cast<Eigen::Index>(j)) = labeled[j].second;
        }
        Prediction pred = predict_item(state, item);
        out.scores.col(i) = pred.f_star;
        if (clip) out.scores.col(i) = out.scores.col(i).cwiseMax(clip->first).cwiseMin(clip->second);
        for (std::size_t j = 0; j < labeled.size(); ++j) out.scores(labeled[j].first, i) = labeled[j].second;
        out.item_seconds[static_cast<std::size_t>(i)] = pred.solve_seconds;
        return true;
    };

    if (parallel_items) {
        // exceptions cannot cross the omp region; carry the first one out
        std::exception_ptr first_error;
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < m; ++i) {
            try {
                solve_one(i);
            } catch (...) {
#pragma omp critical(glrp_predict_error)
                if (!first_error) first_error = std::current_exception();
            }
        }
        if (first_error) std::rethrow_exception(first_error);
        for (int i = 0; i < m; ++i)
            if (train.labeled(i).empty()) ++out.mean_filled_items;
    } else {
        for (int i = 0; i < m; ++i)
            if (!solve_one(i)) ++out.mean_filled_items;
    }
    out.solved_items = m - out.mean_filled_items;
    for (double s : out.item_seconds) out.total_solve_seconds += s;
    return out;
}

}  // namespace glrp
