#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "domsel/embedding.hpp"

namespace domsel {

struct GmmOptions {
    int max_iter = 150;
    double tol = 1e-3;          ///< on the per-sample mean log-likelihood
    double reg_covar = 1e-6;    ///< added to every covariance diagonal each M-step
    int kmeans_iter = 10;       ///< Lloyd refinements after k-means++ seeding
};

/// Full-covariance Gaussian mixture.
struct GmmModel {
    int k = 0;
    Eigen::VectorXd weights;                 ///< k, sums to 1
    Eigen::MatrixXd means;                   ///< k x dim
    std::vector<Eigen::MatrixXd> covariances;  ///< k of dim x dim
    std::vector<double> log_likelihood_trace;  ///< mean log-likelihood after each M-step, the first from the k-means start
    std::uint64_t seed = 0;
    bool converged = false;
    int n_iter = 0;

    Eigen::Index dim() const noexcept { return means.cols(); }
};

struct ClusterAssignment {
    std::vector<int> hard_labels;     ///< argmax of each responsibility row, lowest index on ties
    Eigen::MatrixXd responsibilities; ///< count x k, rows sum to 1
};

/// EM from a k-means++ / Lloyd start, deterministic for a given seed.
///
/// Stops when the mean log-likelihood improves by less than options.tol or
/// after options.max_iter EM iterations. Throws std::invalid_argument when
/// k < 1, count < k, or the data has non-finite entries.
GmmModel fit_gmm(const Eigen::MatrixXd& data, int k, std::uint64_t seed, const GmmOptions& options = {});
GmmModel fit_gmm(const EmbeddingMatrix& m, int k, std::uint64_t seed, const GmmOptions& options = {});

/// Per-row log N(x | mean_c, cov_c) + log weight_c; count x k.
Eigen::MatrixXd weighted_log_densities(const GmmModel& g, const Eigen::MatrixXd& data);

/// Posterior responsibilities (Bayes rule in log space) and hard labels.
ClusterAssignment assign(const GmmModel& g, const Eigen::MatrixXd& data);
ClusterAssignment assign(const GmmModel& g, const EmbeddingMatrix& m);

/// Mean per-sample log-likelihood of data under g.
double mean_log_likelihood(const GmmModel& g, const Eigen::MatrixXd& data);

/// Binary model file: "GMM1", u32 LE header length, JSON header (k, dim, seed,
/// weights, trace, convergence), then float64 LE means (k x dim) and
/// covariances (k x dim x dim), row-major.
void write_gmm(const GmmModel& g, const std::filesystem::path& path);
GmmModel read_gmm(const std::filesystem::path& path);

}  // namespace domsel
