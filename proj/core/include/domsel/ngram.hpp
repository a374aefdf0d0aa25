#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace domsel {

/// Interpolated Kneser-Ney language model with a single fixed discount.
///
/// Text is lowercased (ASCII) and whitespace-tokenized. Tokens seen fewer than
/// min_count times become <unk>. Sentences are scored as w1..wm </s> with one
/// <s> of left context; <s> itself is never predicted.
///
/// For an n-gram level below the model order, counts are continuation counts
/// (number of distinct left extensions) except for n-grams that begin with <s>,
/// which have no left extension and keep their raw counts. Every conditional
/// distribution is exactly normalized over predictable_vocab().
class NgramModel {
public:
    using TokenId = char32_t;
    using Key = std::u32string;

    static constexpr TokenId kUnk = 0;
    static constexpr TokenId kBos = 1;
    static constexpr TokenId kEos = 2;

    static NgramModel train(std::span<const std::string> sentences, int order, int min_count = 2,
                            double discount = 0.75);

    int order() const noexcept { return order_; }
    int min_count() const noexcept { return min_count_; }
    double discount() const noexcept { return discount_; }

    /// Full vocabulary including <unk>, <s>, </s>, in id order.
    const std::vector<std::string>& vocab() const noexcept { return vocab_; }
    /// Tokens that can be predicted (vocab without <s>).
    std::vector<std::string> predictable_vocab() const;

    /// Lowercase + split + map to ids (unknown -> <unk>).
    std::vector<TokenId> encode(std::string_view sentence) const;
    TokenId token_id(std::string_view token) const;

    /// P(word | context) using the last min(order-1, |context|) context tokens.
    /// Context tokens are raw vocabulary strings ("<s>" allowed); unknown
    /// strings map to <unk>.
    double probability(std::span<const std::string> context, const std::string& word) const;
    double probability(std::span<const TokenId> context, TokenId word) const;

    /// Mean negative natural-log probability per scored event (tokens plus </s>).
    double cross_entropy(std::string_view sentence) const;

    /// Writes a sorted, diffable text dump: header, vocabulary, then one line per
    /// stored n-gram: order, context, token, count, ln P(token|context), and the
    /// ln backoff weight of (context token) as a context ("-" if it has none).
    void write(const std::filesystem::path& path) const;
    static NgramModel read(const std::filesystem::path& path);

    friend bool operator==(const NgramModel& a, const NgramModel& b) {
        return a.order_ == b.order_ && a.min_count_ == b.min_count_ && a.discount_ == b.discount_ &&
               a.vocab_ == b.vocab_ && a.counts_ == b.counts_;
    }

private:
    struct ContextStats {
        std::uint64_t total = 0;
        std::uint64_t types = 0;
        friend bool operator==(const ContextStats&, const ContextStats&) = default;
    };

    void rebuild_contexts();
    double level_probability(const Key& context, TokenId word) const;

    int order_ = 1;
    int min_count_ = 2;
    double discount_ = 0.75;
    std::vector<std::string> vocab_;
    std::unordered_map<std::string, TokenId> index_;
    /// counts_[n-1]: n-gram -> count used at level n (raw or continuation).
    std::vector<std::unordered_map<Key, std::uint64_t>> counts_;
    /// contexts_[n-1]: (n-1)-token context -> totals over counts_[n-1].
    std::vector<std::unordered_map<Key, ContextStats>> contexts_;
};

NgramModel train_lm(std::span<const std::string> sentences, int order = 4, int min_count = 2,
                    double discount = 0.75);

double cross_entropy(const NgramModel& lm, std::string_view sentence);

/// cross_entropy(lm_in, s) - cross_entropy(lm_gen, s); lower means more in-domain.
double moore_lewis_score(const NgramModel& lm_in, const NgramModel& lm_gen, std::string_view sentence);

}  // namespace domsel
