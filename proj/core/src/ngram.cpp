#include "domsel/ngram.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "domsel/errors.hpp"
#include "domsel/text.hpp"

namespace domsel {
namespace {

constexpr std::string_view kUnkStr = "<unk>";
constexpr std::string_view kBosStr = "<s>";
constexpr std::string_view kEosStr = "</s>";

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view s, const char* what) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw FormatError(std::string("ngram model: bad ") + what + " '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

NgramModel NgramModel::train(std::span<const std::string> sentences, int order, int min_count, double discount) {
    if (order < 1) throw std::invalid_argument("train_lm: order must be >= 1");
    if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("train_lm: discount must be in (0, 1]");
    if (min_count < 1) throw std::invalid_argument("train_lm: min_count must be >= 1");

    std::vector<std::vector<std::string>> tokenized;
    tokenized.reserve(sentences.size());
    std::unordered_map<std::string, std::uint64_t> freq;
    for (const auto& s : sentences) {
        if (trim(s).empty()) continue;
        std::vector<std::string> toks;
        for (auto t : split_whitespace(s)) {
            toks.push_back(ascii_lower(t));
            ++freq[toks.back()];
        }
        tokenized.push_back(std::move(toks));
    }
    if (tokenized.empty()) throw std::invalid_argument("train_lm: empty corpus");

    NgramModel m;
    m.order_ = order;
    m.min_count_ = min_count;
    m.discount_ = discount;
    m.vocab_ = {std::string(kUnkStr), std::string(kBosStr), std::string(kEosStr)};
    std::vector<std::string> kept;
    for (const auto& [tok, c] : freq) {
        if (c >= static_cast<std::uint64_t>(min_count) && tok != kUnkStr && tok != kBosStr && tok != kEosStr) {
            kept.push_back(tok);
        }
    }
    std::sort(kept.begin(), kept.end());
    m.vocab_.insert(m.vocab_.end(), kept.begin(), kept.end());
    for (std::size_t i = 0; i < m.vocab_.size(); ++i) m.index_.emplace(m.vocab_[i], static_cast<TokenId>(i));

    const auto n_orders = static_cast<std::size_t>(order);
    std::vector<std::unordered_map<Key, std::uint64_t>> raw(n_orders);
    for (const auto& toks : tokenized) {
        Key seq;
        seq.reserve(toks.size() + 2);
        seq.push_back(kBos);
        for (const auto& t : toks) seq.push_back(m.token_id(t));
        seq.push_back(kEos);
        for (std::size_t n = 1; n <= n_orders; ++n) {
            for (std::size_t i = 0; i + n <= seq.size(); ++i) {
                if (seq[i + n - 1] == kBos) continue;  // <s> is context only
                ++raw[n - 1][seq.substr(i, n)];
            }
        }
    }

    m.counts_.assign(n_orders, {});
    m.counts_[n_orders - 1] = raw[n_orders - 1];
    for (std::size_t n = 1; n < n_orders; ++n) {
        auto& level = m.counts_[n - 1];
        for (const auto& [g, c] : raw[n - 1]) {
            if (g[0] == kBos) level.emplace(g, c);
        }
        for (const auto& entry : raw[n]) {
            const Key& ext = entry.first;
            if (ext[1] == kBos) continue;
            ++level[ext.substr(1)];
        }
    }
    m.rebuild_contexts();
    return m;
}

void NgramModel::rebuild_contexts() {
    contexts_.assign(counts_.size(), {});
    for (std::size_t n = 0; n < counts_.size(); ++n) {
        for (const auto& [g, c] : counts_[n]) {
            auto& s = contexts_[n][g.substr(0, n)];
            s.total += c;
            s.types += 1;
        }
    }
}

std::vector<std::string> NgramModel::predictable_vocab() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        if (i != kBos) out.push_back(vocab_[i]);
    }
    return out;
}

NgramModel::TokenId NgramModel::token_id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

std::vector<NgramModel::TokenId> NgramModel::encode(std::string_view sentence) const {
    std::vector<TokenId> out;
    for (auto t : split_whitespace(sentence)) out.push_back(token_id(ascii_lower(t)));
    return out;
}

double NgramModel::level_probability(const Key& context, TokenId word) const {
    double p = 1.0 / static_cast<double>(vocab_.size() - 1);
    Key key;
    for (std::size_t n = 1; n <= context.size() + 1; ++n) {
        const std::size_t ctx_len = n - 1;
        key.assign(context, context.size() - ctx_len, ctx_len);
        const auto s = contexts_[n - 1].find(key);
        if (s == contexts_[n - 1].end()) continue;
        key.push_back(word);
        const auto c = counts_[n - 1].find(key);
        const double count = c == counts_[n - 1].end() ? 0.0 : static_cast<double>(c->second);
        p = (std::max(count - discount_, 0.0) + discount_ * static_cast<double>(s->second.types) * p) /
            static_cast<double>(s->second.total);
    }
    return p;
}

double NgramModel::probability(std::span<const TokenId> context, TokenId word) const {
    const std::size_t keep = std::min(context.size(), static_cast<std::size_t>(order_ - 1));
    Key ctx(context.end() - static_cast<std::ptrdiff_t>(keep), context.end());
    return level_probability(ctx, word);
}

double NgramModel::probability(std::span<const std::string> context, const std::string& word) const {
    std::vector<TokenId> ids;
    ids.reserve(context.size());
    for (const auto& c : context) ids.push_back(token_id(c));
    return probability(ids, token_id(word));
}

double NgramModel::cross_entropy(std::string_view sentence) const {
    std::vector<TokenId> history{kBos};
    auto events = encode(sentence);
    events.push_back(kEos);
    double nll = 0.0;
    for (TokenId w : events) {
        nll -= std::log(probability(history, w));
        history.push_back(w);
    }
    return nll / static_cast<double>(events.size());
}

void NgramModel::write(const std::filesystem::path& path) const {
    std::string out = "#domsel-ngram\t1\n";
    out += "order\t" + std::to_string(order_) + "\n";
    out += "min_count\t" + std::to_string(min_count_) + "\n";
    out += "discount\t" + format_double(discount_) + "\n";
    for (const auto& v : vocab_) out += "vocab\t" + v + "\n";

    auto join = [&](const Key& k, std::size_t len) {
        std::string s;
        for (std::size_t i = 0; i < len; ++i) {
            if (i) s += ' ';
            s += vocab_[k[i]];
        }
        return s;
    };
    std::vector<std::string> lines;
    for (std::size_t n = 0; n < counts_.size(); ++n) {
        for (const auto& [g, c] : counts_[n]) {
            const Key ctx = g.substr(0, n);
            std::string backoff = "-";
            if (n + 1 < contexts_.size()) {
                const auto s = contexts_[n + 1].find(g);
                if (s != contexts_[n + 1].end()) {
                    backoff = format_double(std::log(discount_ * static_cast<double>(s->second.types) /
                                                     static_cast<double>(s->second.total)));
                }
            }
            lines.push_back("ngram\t" + std::to_string(n + 1) + "\t" + join(ctx, n) + "\t" + vocab_[g[n]] + "\t" +
                            std::to_string(c) + "\t" + format_double(std::log(level_probability(ctx, g[n]))) +
                            "\t" + backoff);
        }
    }
    std::sort(lines.begin(), lines.end());
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    write_file(path, out);
}

NgramModel NgramModel::read(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "#domsel-ngram\t1") throw FormatError(path.string() + ": not a domsel n-gram model");
    NgramModel m;
    bool have_order = false;
    std::vector<std::vector<std::string_view>> ngram_lines;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto f = split_tabs(lines[i]);
        if (f[0] == "order" && f.size() == 2) {
            m.order_ = parse_number<int>(f[1], "order");
            have_order = m.order_ >= 1;
        } else if (f[0] == "min_count" && f.size() == 2) {
            m.min_count_ = parse_number<int>(f[1], "min_count");
        } else if (f[0] == "discount" && f.size() == 2) {
            m.discount_ = std::stod(std::string(f[1]));
        } else if (f[0] == "vocab" && f.size() == 2) {
            m.index_.emplace(std::string(f[1]), static_cast<TokenId>(m.vocab_.size()));
            m.vocab_.emplace_back(f[1]);
        } else if (f[0] == "ngram" && f.size() == 7) {
            ngram_lines.push_back(std::move(f));
        } else {
            throw FormatError(path.string() + ": unrecognized line " + std::to_string(i + 1));
        }
    }
    if (!have_order || m.vocab_.size() < 3 || m.vocab_[kUnk] != kUnkStr || m.vocab_[kBos] != kBosStr ||
        m.vocab_[kEos] != kEosStr) {
        throw FormatError(path.string() + ": incomplete header");
    }
    m.counts_.assign(static_cast<std::size_t>(m.order_), {});
    for (const auto& f : ngram_lines) {
        const auto n = parse_number<std::size_t>(f[1], "n-gram order");
        if (n < 1 || n > m.counts_.size()) throw FormatError(path.string() + ": n-gram order out of range");
        Key g;
        for (auto t : split_whitespace(f[2])) {
            auto it = m.index_.find(std::string(t));
            if (it == m.index_.end()) throw FormatError(path.string() + ": unknown token '" + std::string(t) + "'");
            g.push_back(it->second);
        }
        auto it = m.index_.find(std::string(f[3]));
        if (it == m.index_.end() || g.size() != n - 1) throw FormatError(path.string() + ": malformed n-gram line");
        g.push_back(it->second);
        m.counts_[n - 1][g] = parse_number<std::uint64_t>(f[4], "count");
    }
    m.rebuild_contexts();
    return m;
}

NgramModel train_lm(std::span<const std::string> sentences, int order, int min_count, double discount) {
    return NgramModel::train(sentences, order, min_count, discount);
}

double cross_entropy(const NgramModel& lm, std::string_view sentence) { return lm.cross_entropy(sentence); }

double moore_lewis_score(const NgramModel& lm_in, const NgramModel& lm_gen, std::string_view sentence) {
    return lm_in.cross_entropy(sentence) - lm_gen.cross_entropy(sentence);
}

}  // namespace domsel
