#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

#include "glrp/rating_matrix.hpp"

namespace glrp {

enum class Axis { user_based, item_based };
enum class Impute { row_mean, global_mean };

const char* to_string(Axis axis);

/// Feature vectors for the graph/kernel stage, one row per node.
struct FeatureSet {
    Eigen::MatrixXd vectors;  // n x d
    Axis axis = Axis::user_based;
    std::string provenance;  // construction recipe, for the config echo
};

// Feature construction from the training ratings. For user_based, row j is
// user j's rating row with missing entries imputed: under Impute::row_mean the
// row's own mean (global training mean when the row is empty), under
// Impute::global_mean the global training mean everywhere. item_based is the
// same construction on the transposed matrix. With reduce_rank = r, rows are
// replaced by their coordinates in the top-r singular subspace of the imputed
// matrix (U_r * S_r, sign-fixed so each left singular vector's
// largest-magnitude component is positive).
FeatureSet build_features(const RatingMatrix& train, Axis axis, Impute impute = Impute::row_mean,
                          std::optional<int> reduce_rank = {});

void write_features_csv(const FeatureSet& features, const std::filesystem::path& file);

}  // namespace glrp
