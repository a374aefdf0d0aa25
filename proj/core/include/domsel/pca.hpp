#pragma once

#include <filesystem>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "domsel/embedding.hpp"

namespace domsel {

/// Principal axes of a centered embedding matrix.
struct PcaModel {
    Eigen::VectorXd mean;             ///< column means of the fit data
    Eigen::MatrixXd components;       ///< n_components x dim, orthonormal rows
    Eigen::VectorXd singular_values;  ///< descending, one per component

    Eigen::Index n_components() const noexcept { return components.rows(); }
    Eigen::Index dim() const noexcept { return components.cols(); }
};

/// Top right singular vectors of the centered data, computed by SVD (not by an
/// eigendecomposition of the covariance). Each component is sign-normalized so
/// its largest-magnitude coordinate is positive (first such coordinate on ties).
///
/// Requires count >= 2 and 1 <= n_components <= min(count, dim).
PcaModel fit_pca(const EmbeddingMatrix& m, Eigen::Index n_components);

/// (row - mean) * components^T, ids preserved.
Eigen::MatrixXd project(const PcaModel& p, const EmbeddingMatrix& m);
EmbeddingMatrix apply_pca(const PcaModel& p, const EmbeddingMatrix& m);

nlohmann::json to_json(const PcaModel& p);
PcaModel pca_from_json(const nlohmann::json& j);

}  // namespace domsel
