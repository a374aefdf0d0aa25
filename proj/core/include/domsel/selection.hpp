#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "domsel/corpus.hpp"
#include "domsel/embedding.hpp"
#include "domsel/ngram.hpp"

namespace domsel {

enum class SelectionMethod { cosine, classifier, moore_lewis, random };

std::string_view to_string(SelectionMethod m);
/// Accepts "cosine", "classifier", "moore-lewis"/"moore_lewis", "random".
std::optional<SelectionMethod> parse_selection_method(std::string_view s);

struct RankedEntry {
    SentenceId id = 0;
    double score = 0.0;
    friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

/// Pool ids ordered best-first. Higher scores are better for every method
/// except moore_lewis (lower cross-entropy difference is better); ties are
/// broken by ascending id.
struct SelectionRanking {
    SelectionMethod method = SelectionMethod::cosine;
    std::vector<RankedEntry> entries;

    std::size_t size() const noexcept { return entries.size(); }
    std::vector<SentenceId> ids() const;
};

/// Sorts entries in place per the method's polarity with the id tie-break.
void sort_ranking(SelectionRanking& r);

/// Element-wise mean of the in-domain rows.
Eigen::VectorXd domain_query(const EmbeddingMatrix& in_domain);

/// Cosine similarity of each pool row to the mean in-domain vector.
/// Zero-norm pool rows score -1; a zero-norm query throws std::invalid_argument.
SelectionRanking rank_cosine(const EmbeddingMatrix& in_domain, const EmbeddingMatrix& pool);
SelectionRanking rank_cosine_query(const Eigen::VectorXd& query, const EmbeddingMatrix& pool);

/// n ids drawn uniformly without replacement from ranking positions
/// ceil(|r|/3)+1 .. |r| (1-based), returned sorted. Requires n <= floor(2|r|/3).
std::vector<SentenceId> sample_negatives_preranked(const SelectionRanking& ranking, std::size_t n,
                                                   std::uint64_t seed);

/// n ids drawn uniformly without replacement from all of `ids`, returned sorted.
std::vector<SentenceId> sample_negatives_uniform(std::span<const SentenceId> ids, std::size_t n,
                                                 std::uint64_t seed);

struct ClassifierOptions {
    int epochs = 20;           ///< full-batch gradient steps
    double learning_rate = 0.1;
    double l2 = 1e-4;          ///< on the standardized weights, not the bias
    double variance_floor = 1e-8;
    std::uint64_t seed = 0;
};

/// Logistic model over raw embeddings. Standardization is folded in, so the
/// decision score is weights . x + bias directly; feature_mean/feature_scale
/// record the standardization fitted on the combined training set.
struct ClassifierModel {
    Eigen::VectorXd weights;
    double bias = 0.0;
    Eigen::VectorXd feature_mean;
    Eigen::VectorXd feature_scale;
    int epochs = 0;
    double learning_rate = 0.0;
    double l2 = 0.0;
    std::uint64_t seed = 0;
    std::vector<SentenceId> positive_ids;
    std::vector<SentenceId> negative_ids;
    std::vector<double> loss_trace;

    /// Weights/bias in standardized coordinates (what gradient descent optimized).
    Eigen::VectorXd standardized_weights() const;
    double standardized_bias() const;

    double score(std::span<const float> x) const;
};

/// Logistic regression by full-batch gradient descent from zero, on features
/// standardized with the combined positive+negative mean and variance.
ClassifierModel train_pu_classifier(const EmbeddingMatrix& pos, const EmbeddingMatrix& neg,
                                    const ClassifierOptions& options = {});

/// Objective gradient descent minimizes: mean logistic loss in standardized
/// coordinates plus (l2/2)|w|^2.
double pu_objective(const Eigen::MatrixXd& standardized, const Eigen::VectorXd& labels,
                    const Eigen::VectorXd& w, double b, double l2);

/// Descending pre-sigmoid score.
SelectionRanking rank_classifier(const ClassifierModel& c, const EmbeddingMatrix& pool);

/// Ids with sigmoid(score) >= 0.5, i.e. score >= 0, in pool order.
std::vector<SentenceId> select_positive(const ClassifierModel& c, const EmbeddingMatrix& pool);

/// Ascending moore_lewis_score over the pool sentences.
SelectionRanking rank_moore_lewis(const NgramModel& lm_in, const NgramModel& lm_gen,
                                  std::span<const SentenceRecord> pool);

/// General-domain LM for Moore-Lewis: trains on the whole pool, or on a uniform
/// sample of sample_cap sentences when the pool is larger.
NgramModel train_general_lm(std::span<const SentenceRecord> pool, int order, int min_count, double discount,
                            std::size_t sample_cap, std::uint64_t seed);

/// Uniform permutation; score is the number of entries ranked below.
SelectionRanking rank_random(std::span<const SentenceId> pool_ids, std::uint64_t seed);

/// First min(k, |r|) ids.
std::vector<SentenceId> select_top_k(const SelectionRanking& r, std::size_t k);

/// TSV with header "rank\tid\tscore\tmethod", rank 1-based.
void write_ranking(const SelectionRanking& r, const std::filesystem::path& path);
SelectionRanking read_ranking(const std::filesystem::path& path);

/// One id per line.
void write_selection(std::span<const SentenceId> ids, const std::filesystem::path& path);
std::vector<SentenceId> read_selection(const std::filesystem::path& path);

}  // namespace domsel
