#pragma once

#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "domsel/corpus.hpp"
#include "domsel/embedding.hpp"
#include "domsel/selection.hpp"

namespace domsel {

/// Precision/recall/F1 with their counts. p = tp/selected (0 when nothing was
/// selected), r = tp/relevant (0 when nothing is relevant), F1 the harmonic mean
/// (0 when p + r = 0).
struct PrfScores {
    std::size_t true_positives = 0;
    std::size_t selected = 0;
    std::size_t relevant = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

PrfScores make_prf(std::size_t tp, std::size_t selected, std::size_t relevant);

struct EvalEntry {
    std::string domain;
    PrfScores scores;
};

/// Per-domain selection quality.
struct EvalReport {
    std::vector<EvalEntry> entries;
};

using PoolLabels = std::unordered_map<SentenceId, std::string>;

/// Scores `selected` against the oracle set {id : label(id) == target_domain}.
/// Duplicate ids count once; ids missing from pool_labels throw std::invalid_argument.
EvalEntry selection_pr(std::span<const SentenceId> selected, const PoolLabels& pool_labels,
                       const std::string& target_domain);

/// Held-out classification quality at sigmoid threshold 0.5, positives as the
/// target class. Throws if either held-out set is empty or overlaps the ids the
/// classifier was trained on.
PrfScores classifier_holdout_eval(const ClassifierModel& c, const EmbeddingMatrix& held_pos,
                                  const EmbeddingMatrix& held_neg);

/// Sample Pearson correlation. Requires equal lengths >= 2 and nonzero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct CorrelationPair {
    std::string model_domain;
    std::string test_domain;
    double cosine = 0.0;
    double bleu = 0.0;
};

struct CorrelationReport {
    std::vector<CorrelationPair> pairs;
    double pearson_r = 0.0;
};

using BleuTable = std::map<std::string, std::map<std::string, double>>;

/// JSON {model_domain: {test_domain: number}}.
BleuTable read_bleu_table(const nlohmann::json& j);

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Every ordered (model, test) domain pair, diagonal included, in sorted order:
/// cosine of the two centroids against bleu[model][test]. The centroid and table
/// domain sets must match and the table must be complete.
CorrelationReport correlate_centroids_bleu(const std::map<std::string, Eigen::VectorXd>& centroids,
                                           const BleuTable& bleu);

nlohmann::json to_json(const PrfScores& s);
nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const CorrelationReport& r);
CorrelationReport correlation_from_json(const nlohmann::json& j);

}  // namespace domsel
