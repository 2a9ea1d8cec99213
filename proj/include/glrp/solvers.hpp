#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "glrp/kernel_grams.hpp"
#include "glrp/rating_matrix.hpp"

namespace glrp {

enum class MethodKind { ori, gba, prop };

struct Method {
    MethodKind kind = MethodKind::prop;
    int k_b = 0;  // reconstruction bandwidth, GBa only

    static Method ori() { return {MethodKind::ori, 0}; }
    static Method prop() { return {MethodKind::prop, 0}; }
    static Method gba(int k_b) { return {MethodKind::gba, k_b}; }
    // "Ori", "Prop", "GBa<k_b>" (case-insensitive); ValidationError otherwise.
    static Method parse(const std::string& name);
    std::string name() const;
    bool operator==(const Method&) const = default;
};

/// One item's labeled users: index set S and their ratings y, |y| = |S| = l.
struct LabeledItem {
    int item_index = 0;
    std::vector<int> label_idx;
    Eigen::VectorXd y;
};

struct LaplacianEigensystem {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns, first nonzero component positive
    double seconds = 0.0;
};

LaplacianEigensystem eigendecompose_laplacian(const GraphModel& graph);

/// Item-independent caches for one method over one (grams, graph) pair.
/// Immutable after precompute and shareable across threads.
struct SolverState {
    Method method;
    const KernelGrams* grams = nullptr;
    const GraphModel* graph = nullptr;
    Eigen::MatrixXd system_base;      // Ori: B = lambda K + gamma K L K
    Eigen::MatrixXd gba_basis;        // GBa: U_{k_b}
    Eigen::VectorXd gba_eigenvalues;  // GBa: first k_b eigenvalues
    Eigen::MatrixXd gba_reduced;      // GBa: M0 = U^T B U
    Eigen::MatrixXd gba_projection;   // GBa: P = K U_{k_b}
    double precompute_seconds = 0.0;
};

// For GBa, pass shared_eigensystem to slice a previously computed full
// eigendecomposition (its cost is still charged to precompute_seconds);
// without it the eigensystem is computed here.
SolverState precompute(Method method, const KernelGrams& grams, const GraphModel& graph,
                       const LaplacianEigensystem* shared_eigensystem = nullptr);

struct Prediction {
    Eigen::VectorXd f_star;        // predicted signal over all n nodes
    Eigen::VectorXd coefficients;  // a (Ori), c (GBa) or d (Prop)
    std::vector<int> coeff_idx;    // label set for Prop's d; empty otherwise
    double solve_seconds = 0.0;
};

Prediction ori_predict_item(const SolverState& state, const LabeledItem& item);
Prediction gba_predict_item(const SolverState& state, const LabeledItem& item);
Prediction prop_predict_item(const SolverState& state, const LabeledItem& item);
Prediction predict_item(const SolverState& state, const LabeledItem& item);

// a = T_S d, mapping the equivalent-model coefficients back to a solution of
// the original normal equations; K a equals the Prop prediction.
Eigen::VectorXd recover_alpha(const SolverState& state, const LabeledItem& item, const Eigen::VectorXd& d);

struct MatrixPrediction {
    Eigen::MatrixXd scores;            // n x m, known training entries preserved
    std::vector<double> item_seconds;  // per-item solve time, 0 for unlabeled items
    double total_solve_seconds = 0.0;
    int solved_items = 0;
    int mean_filled_items = 0;
};

// Runs the per-item solve for every item with at least one label; items with
// none are filled with the global training mean. Known training entries
// always overwrite predictions. With parallel_items the items are solved on
// OpenMP threads; the result is bit-identical to the serial order.
MatrixPrediction predict_matrix(const SolverState& state, const RatingMatrix& train,
                                std::optional<std::pair<double, double>> clip = {}, bool parallel_items = false);

}  // namespace glrp
