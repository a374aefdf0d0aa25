#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "domsel/corpus.hpp"
#include "domsel/embedding.hpp"
#include "domsel/gmm.hpp"

namespace domsel {

/// Majority-domain clustering accuracy.
struct PurityReport {
    double purity = 0.0;
    std::size_t total = 0;
    std::vector<std::string> domains;                       ///< sorted; indexes the confusion matrix
    std::vector<std::optional<std::string>> cluster_to_domain;  ///< empty clusters map to nothing
    std::vector<std::size_t> cluster_sizes;
    std::vector<std::size_t> majority_counts;
    /// confusion[true][assigned]: rows are the true domain, columns the majority
    /// domain of the row's cluster.
    std::vector<std::vector<std::size_t>> confusion;
};

/// Purity of hard labels against true domains. Cluster majority ties go to the
/// lexicographically smallest domain. n_clusters < 0 means max(label) + 1.
PurityReport purity(std::span<const int> hard_labels, std::span<const std::string> labels, int n_clusters = -1);
PurityReport purity(const ClusterAssignment& a, std::span<const std::string> labels);

nlohmann::json to_json(const PurityReport& r);
PurityReport purity_from_json(const nlohmann::json& j);

struct MeanVariance {
    double mean = 0.0;
    double variance = 0.0;  ///< unbiased (n - 1); 0 for a single value
};

MeanVariance mean_and_variance(std::span<const double> values);

struct SeedSweep {
    int k = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<double> purities;
    MeanVariance summary;
};

/// Fits one GMM per seed and reports purity for each plus mean/variance.
SeedSweep run_seed_sweep(const Eigen::MatrixXd& data, int k, std::span<const std::uint64_t> seeds,
                         std::span<const std::string> labels, const GmmOptions& options = {});

nlohmann::json to_json(const SeedSweep& s);

struct Outlier {
    SentenceId id = 0;
    std::string true_domain;
    std::string assigned_domain;
};

struct OutlierReport {
    std::vector<Outlier> outliers;
    double mean_token_len_outliers = 0.0;  ///< 0 when there are no outliers
    double mean_token_len_all = 0.0;
    std::map<std::string, std::size_t> attracted;  ///< assigned domain -> outliers pulled in
};

/// Sentences whose cluster's majority domain differs from their own domain.
/// records, labels and a.hard_labels are row-aligned.
OutlierReport outlier_report(const ClusterAssignment& a, std::span<const std::string> labels,
                             std::span<const SentenceRecord> records);

nlohmann::json to_json(const OutlierReport& r);

/// Element-wise mean of the rows whose ids are in `subset`. Throws on an empty
/// subset or unknown ids.
Eigen::VectorXd centroid(const EmbeddingMatrix& m, std::span<const SentenceId> subset);

/// One centroid per distinct label; labels row-aligned with m.
std::map<std::string, Eigen::VectorXd> domain_centroids(const EmbeddingMatrix& m,
                                                        std::span<const std::string> labels);

}  // namespace domsel
