#include "domsel/corpus.hpp"

#include <algorithm>
#include <string_view>
#include <unordered_set>

#include "domsel/errors.hpp"
#include "domsel/rng.hpp"
#include "domsel/text.hpp"

namespace domsel {

namespace fs = std::filesystem;

std::vector<SentenceRecord> DomainCorpus::source_records() const {
    std::vector<SentenceRecord> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(p.src);
    return out;
}

std::vector<std::string> DomainCorpus::source_texts() const {
    std::vector<std::string> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(p.src.text);
    return out;
}

nlohmann::json to_json(const OverlapReport& report) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& d : report.domains) {
        j[d.domain] = {
            {"dev_in_train", d.dev_in_train},   {"test_in_train", d.test_in_train},
            {"dev_size", d.dev_size},           {"test_size", d.test_size},
            {"dev_fraction", d.dev_fraction()}, {"test_fraction", d.test_fraction()},
        };
    }
    return j;
}

std::vector<DomainCorpus> load_domain_corpus(const fs::path& manifest_path) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("manifest " + manifest_path.string() + ": " + e.what());
    }
    if (!manifest.is_object() || !manifest.contains("domains") || !manifest["domains"].is_array()) {
        throw FormatError("manifest " + manifest_path.string() + ": expected {\"domains\": [...]}");
    }
    const fs::path base = manifest_path.parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path path(p);
        return path.is_absolute() ? path : base / path;
    };

    std::vector<DomainCorpus> out;
    std::size_t index = 0;
    for (const auto& entry : manifest["domains"]) {
        const std::string where = "domains[" + std::to_string(index++) + "]";
        if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string() ||
            !entry.contains("src") || !entry["src"].is_string()) {
            throw FormatError("manifest " + where + ": needs string fields 'name' and 'src'");
        }
        DomainCorpus corpus;
        corpus.domain = entry["name"].get<std::string>();

        const fs::path src_path = resolve(entry["src"].get<std::string>());
        if (!fs::exists(src_path)) throw std::runtime_error("missing file: " + src_path.string());
        const auto src_lines = read_lines(src_path);

        std::optional<std::vector<std::string>> tgt_lines;
        if (entry.contains("tgt") && !entry["tgt"].is_null()) {
            if (!entry["tgt"].is_string()) throw FormatError("manifest " + where + ".tgt: expected string or null");
            const fs::path tgt_path = resolve(entry["tgt"].get<std::string>());
            if (!fs::exists(tgt_path)) throw std::runtime_error("missing file: " + tgt_path.string());
            tgt_lines = read_lines(tgt_path);
            if (tgt_lines->size() != src_lines.size()) {
                throw AlignmentError(corpus.domain, src_lines.size(), tgt_lines->size());
            }
        }

        corpus.pairs.reserve(src_lines.size());
        for (std::size_t i = 0; i < src_lines.size(); ++i) {
            if (trim(src_lines[i]).empty()) continue;
            if (tgt_lines && trim((*tgt_lines)[i]).empty()) continue;
            ParallelPair pair;
            pair.src = SentenceRecord{i, src_lines[i], corpus.domain};
            if (tgt_lines) pair.tgt = SentenceRecord{i, (*tgt_lines)[i], corpus.domain};
            corpus.pairs.push_back(std::move(pair));
        }
        out.push_back(std::move(corpus));
    }
    return out;
}

DedupResult dedup_pairs(const DomainCorpus& corpus) {
    DedupResult result;
    result.corpus.domain = corpus.domain;
    std::unordered_set<std::string_view> seen_src;
    std::unordered_set<std::string_view> seen_tgt;
    for (const auto& pair : corpus.pairs) {
        const std::string_view s = trim(pair.src.text);
        if (seen_src.contains(s)) {
            ++result.removed;
            continue;
        }
        if (pair.tgt) {
            const std::string_view t = trim(pair.tgt->text);
            if (seen_tgt.contains(t)) {
                ++result.removed;
                continue;
            }
            seen_tgt.insert(t);
        }
        seen_src.insert(s);
        result.corpus.pairs.push_back(pair);
    }
    return result;
}

SplitOverlap check_split_overlap(const DomainCorpus& train, const DomainCorpus& dev,
                                 const DomainCorpus& test) {
    std::unordered_set<std::string_view> train_src;
    train_src.reserve(train.size());
    for (const auto& p : train.pairs) train_src.insert(trim(p.src.text));

    auto count_in = [&](const DomainCorpus& split) {
        std::size_t n = 0;
        for (const auto& p : split.pairs) n += train_src.contains(trim(p.src.text)) ? 1 : 0;
        return n;
    };
    SplitOverlap r;
    r.domain = train.domain;
    r.dev_in_train = count_in(dev);
    r.test_in_train = count_in(test);
    r.dev_size = dev.size();
    r.test_size = test.size();
    return r;
}

DomainCorpus cap_corpus(const DomainCorpus& corpus, std::size_t n, std::uint64_t seed) {
    if (corpus.size() <= n) return corpus;
    Rng rng(seed);
    auto picks = rng.sample_without_replacement(corpus.size(), n);
    std::sort(picks.begin(), picks.end(), [&](std::size_t a, std::size_t b) {
        return corpus.pairs[a].src.id < corpus.pairs[b].src.id;
    });
    DomainCorpus out;
    out.domain = corpus.domain;
    out.pairs.reserve(n);
    for (std::size_t i : picks) out.pairs.push_back(corpus.pairs[i]);
    return out;
}

DomainCorpus build_general_pool(const std::vector<DomainCorpus>& corpora) {
    DomainCorpus pool;
    pool.domain = "general";
    std::size_t total = 0;
    for (const auto& c : corpora) total += c.size();
    pool.pairs.reserve(total);
    SentenceId next = 0;
    for (const auto& c : corpora) {
        for (const auto& pair : c.pairs) {
            ParallelPair p = pair;
            p.src.id = next;
            p.src.domain = c.domain;
            if (p.tgt) {
                p.tgt->id = next;
                p.tgt->domain = c.domain;
            }
            pool.pairs.push_back(std::move(p));
            ++next;
        }
    }
    return pool;
}

}  // namespace domsel
