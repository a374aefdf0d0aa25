#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace domsel {

using SentenceId = std::uint64_t;

struct SentenceRecord {
    SentenceId id = 0;
    std::string text;
    std::optional<std::string> domain;
};

/// Line-aligned sentence pair; tgt is absent for monolingual corpora.
struct ParallelPair {
    SentenceRecord src;
    std::optional<SentenceRecord> tgt;
};

struct DomainCorpus {
    std::string domain;
    std::vector<ParallelPair> pairs;

    std::size_t size() const noexcept { return pairs.size(); }
    bool parallel() const noexcept { return !pairs.empty() && pairs.front().tgt.has_value(); }

    /// Source-side records in corpus order.
    std::vector<SentenceRecord> source_records() const;
    std::vector<std::string> source_texts() const;
};

struct SplitOverlap {
    std::string domain;
    std::size_t dev_in_train = 0;
    std::size_t test_in_train = 0;
    std::size_t dev_size = 0;
    std::size_t test_size = 0;

    double dev_fraction() const { return dev_size ? double(dev_in_train) / double(dev_size) : 0.0; }
    double test_fraction() const { return test_size ? double(test_in_train) / double(test_size) : 0.0; }
};

/// Per-domain train/dev/test overlap counts, in domain order.
struct OverlapReport {
    std::vector<SplitOverlap> domains;
};

nlohmann::json to_json(const OverlapReport& report);

struct DedupResult {
    DomainCorpus corpus;
    std::size_t removed = 0;
};

/// Loads every corpus listed in a JSON manifest
/// {"domains": [{"name": str, "src": path, "tgt": path|null}]}.
/// Relative paths resolve against the manifest's directory. Record ids are
/// 0-based line numbers; pairs whose source (or target) line is blank after
/// trimming are skipped but do not shift the ids of later lines.
///
/// Throws FormatError on a malformed manifest, std::runtime_error on a missing
/// file, and AlignmentError when src/tgt line counts differ.
std::vector<DomainCorpus> load_domain_corpus(const std::filesystem::path& manifest_path);

/// Keeps a pair only if neither its trimmed source nor its trimmed target string
/// has been kept before. Order is preserved.
DedupResult dedup_pairs(const DomainCorpus& corpus);

/// Counts dev/test sentences whose trimmed source string occurs in train.
SplitOverlap check_split_overlap(const DomainCorpus& train, const DomainCorpus& dev,
                                 const DomainCorpus& test);

/// Uniform sample of n pairs without replacement, re-sorted by id. Identity when
/// the corpus already has at most n pairs.
DomainCorpus cap_corpus(const DomainCorpus& corpus, std::size_t n, std::uint64_t seed);

/// Concatenates corpora in order with fresh contiguous ids 0..N-1. Every record
/// keeps its originating domain label in SentenceRecord::domain.
DomainCorpus build_general_pool(const std::vector<DomainCorpus>& corpora);

}  // namespace domsel
