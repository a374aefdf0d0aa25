#include "domsel/selection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_set>

#include "domsel/errors.hpp"
#include "domsel/rng.hpp"
#include "domsel/text.hpp"

namespace domsel {
namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void check_dim(const ClassifierModel& c, const EmbeddingMatrix& m, const char* who) {
    if (static_cast<Eigen::Index>(m.dim()) != c.weights.size()) {
        throw std::invalid_argument(std::string(who) + ": pool dim " + std::to_string(m.dim()) +
                                    " != classifier dim " + std::to_string(c.weights.size()));
    }
}

}  // namespace

std::string_view to_string(SelectionMethod m) {
    switch (m) {
        case SelectionMethod::cosine: return "cosine";
        case SelectionMethod::classifier: return "classifier";
        case SelectionMethod::moore_lewis: return "moore-lewis";
        case SelectionMethod::random: return "random";
    }
    return "unknown";
}

std::optional<SelectionMethod> parse_selection_method(std::string_view s) {
    if (s == "cosine") return SelectionMethod::cosine;
    if (s == "classifier") return SelectionMethod::classifier;
    if (s == "moore-lewis" || s == "moore_lewis") return SelectionMethod::moore_lewis;
    if (s == "random") return SelectionMethod::random;
    return std::nullopt;
}

std::vector<SentenceId> SelectionRanking::ids() const {
    std::vector<SentenceId> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.id);
    return out;
}

void sort_ranking(SelectionRanking& r) {
    const bool ascending = r.method == SelectionMethod::moore_lewis;
    std::sort(r.entries.begin(), r.entries.end(), [ascending](const RankedEntry& a, const RankedEntry& b) {
        if (a.score != b.score) return ascending ? a.score < b.score : a.score > b.score;
        return a.id < b.id;
    });
}

Eigen::VectorXd domain_query(const EmbeddingMatrix& in_domain) {
    if (in_domain.empty()) throw std::invalid_argument("rank_cosine: in-domain set is empty");
    return in_domain.to_eigen().colwise().mean().transpose();
}

SelectionRanking rank_cosine_query(const Eigen::VectorXd& query, const EmbeddingMatrix& pool) {
    if (query.size() != static_cast<Eigen::Index>(pool.dim())) {
        throw std::invalid_argument("rank_cosine: query dim " + std::to_string(query.size()) + " != pool dim " +
                                    std::to_string(pool.dim()));
    }
    const double qn = query.norm();
    if (!(qn > 0.0)) throw std::invalid_argument("rank_cosine: zero-norm query");

    SelectionRanking r;
    r.method = SelectionMethod::cosine;
    r.entries.resize(pool.count());
    for (std::size_t i = 0; i < pool.count(); ++i) {
        const auto row = pool.row(i);
        double dot = 0.0;
        double nn = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            const double x = row[j];
            dot += x * query(static_cast<Eigen::Index>(j));
            nn += x * x;
        }
        const double score = nn > 0.0 ? std::clamp(dot / (std::sqrt(nn) * qn), -1.0, 1.0) : -1.0;
        r.entries[i] = {pool.ids()[i], score};
    }
    sort_ranking(r);
    return r;
}

SelectionRanking rank_cosine(const EmbeddingMatrix& in_domain, const EmbeddingMatrix& pool) {
    if (in_domain.dim() != pool.dim()) {
        throw std::invalid_argument("rank_cosine: in-domain dim " + std::to_string(in_domain.dim()) +
                                    " != pool dim " + std::to_string(pool.dim()));
    }
    return rank_cosine_query(domain_query(in_domain), pool);
}

std::vector<SentenceId> sample_negatives_preranked(const SelectionRanking& ranking, std::size_t n,
                                                   std::uint64_t seed) {
    const std::size_t total = ranking.size();
    const std::size_t skip = (total + 2) / 3;  // ceil(total / 3)
    if (n > (2 * total) / 3) {
        throw std::invalid_argument("sample_negatives_preranked: n=" + std::to_string(n) + " exceeds floor(2*" +
                                    std::to_string(total) + "/3)");
    }
    Rng rng(seed);
    const auto picks = rng.sample_without_replacement(total - skip, n);
    std::vector<SentenceId> out;
    out.reserve(n);
    for (std::size_t p : picks) out.push_back(ranking.entries[skip + p].id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<SentenceId> sample_negatives_uniform(std::span<const SentenceId> ids, std::size_t n,
                                                 std::uint64_t seed) {
    if (n > ids.size()) throw std::invalid_argument("sample_negatives_uniform: n exceeds pool size");
    Rng rng(seed);
    const auto picks = rng.sample_without_replacement(ids.size(), n);
    std::vector<SentenceId> out;
    out.reserve(n);
    for (std::size_t p : picks) out.push_back(ids[p]);
    std::sort(out.begin(), out.end());
    return out;
}

Eigen::VectorXd ClassifierModel::standardized_weights() const { return weights.cwiseProduct(feature_scale); }

double ClassifierModel::standardized_bias() const { return bias + weights.dot(feature_mean); }

double ClassifierModel::score(std::span<const float> x) const {
    double s = bias;
    for (std::size_t j = 0; j < x.size(); ++j) s += weights(static_cast<Eigen::Index>(j)) * x[j];
    return s;
}

double pu_objective(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double b,
                    double l2) {
    const Eigen::VectorXd s = (z * w).array() + b;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) loss += y(i) > 0.5 ? softplus(-s(i)) : softplus(s(i));
    return loss / static_cast<double>(s.size()) + 0.5 * l2 * w.squaredNorm();
}

ClassifierModel train_pu_classifier(const EmbeddingMatrix& pos, const EmbeddingMatrix& neg,
                                    const ClassifierOptions& options) {
    if (pos.empty() || neg.empty()) throw std::invalid_argument("train_pu_classifier: need positives and negatives");
    if (pos.dim() != neg.dim()) throw std::invalid_argument("train_pu_classifier: positive/negative dims differ");
    if (options.epochs < 0 || !(options.learning_rate > 0.0)) {
        throw std::invalid_argument("train_pu_classifier: epochs must be >= 0 and learning_rate > 0");
    }

    const auto np = static_cast<Eigen::Index>(pos.count());
    const auto nn = static_cast<Eigen::Index>(neg.count());
    const Eigen::Index n = np + nn;
    Eigen::MatrixXd z(n, pos.dim());
    z.topRows(np) = pos.to_eigen();
    z.bottomRows(nn) = neg.to_eigen();
    Eigen::VectorXd y(n);
    y.head(np).setOnes();
    y.tail(nn).setZero();

    const Eigen::VectorXd mean = z.colwise().mean().transpose();
    z.rowwise() -= mean.transpose();
    const Eigen::VectorXd var = z.colwise().squaredNorm().transpose() / static_cast<double>(n);
    const Eigen::VectorXd scale = var.cwiseMax(options.variance_floor).cwiseSqrt();
    z = z.array().rowwise() / scale.transpose().array();

    ClassifierModel c;
    c.epochs = options.epochs;
    c.learning_rate = options.learning_rate;
    c.l2 = options.l2;
    c.seed = options.seed;
    c.positive_ids = pos.ids();
    c.negative_ids = neg.ids();
    c.feature_mean = mean;
    c.feature_scale = scale;

    Eigen::VectorXd w = Eigen::VectorXd::Zero(z.cols());
    double b = 0.0;
    c.loss_trace.push_back(pu_objective(z, y, w, b, options.l2));
    for (int e = 0; e < options.epochs; ++e) {
        Eigen::VectorXd resid = (z * w).array() + b;
        for (Eigen::Index i = 0; i < n; ++i) resid(i) = sigmoid(resid(i)) - y(i);
        const Eigen::VectorXd grad_w = z.transpose() * resid / static_cast<double>(n) + options.l2 * w;
        const double grad_b = resid.mean();
        w -= options.learning_rate * grad_w;
        b -= options.learning_rate * grad_b;
        c.loss_trace.push_back(pu_objective(z, y, w, b, options.l2));
    }

    c.weights = w.cwiseQuotient(scale);
    c.bias = b - c.weights.dot(mean);
    if (!c.weights.allFinite() || !std::isfinite(c.bias)) {
        throw std::runtime_error("train_pu_classifier: parameters diverged");
    }
    return c;
}

SelectionRanking rank_classifier(const ClassifierModel& c, const EmbeddingMatrix& pool) {
    check_dim(c, pool, "rank_classifier");
    SelectionRanking r;
    r.method = SelectionMethod::classifier;
    r.entries.resize(pool.count());
    for (std::size_t i = 0; i < pool.count(); ++i) r.entries[i] = {pool.ids()[i], c.score(pool.row(i))};
    sort_ranking(r);
    return r;
}

std::vector<SentenceId> select_positive(const ClassifierModel& c, const EmbeddingMatrix& pool) {
    check_dim(c, pool, "select_positive");
    std::vector<SentenceId> out;
    for (std::size_t i = 0; i < pool.count(); ++i) {
        if (c.score(pool.row(i)) >= 0.0) out.push_back(pool.ids()[i]);
    }
    return out;
}

SelectionRanking rank_moore_lewis(const NgramModel& lm_in, const NgramModel& lm_gen,
                                  std::span<const SentenceRecord> pool) {
    SelectionRanking r;
    r.method = SelectionMethod::moore_lewis;
    r.entries.reserve(pool.size());
    for (const auto& rec : pool) r.entries.push_back({rec.id, moore_lewis_score(lm_in, lm_gen, rec.text)});
    sort_ranking(r);
    return r;
}

NgramModel train_general_lm(std::span<const SentenceRecord> pool, int order, int min_count, double discount,
                            std::size_t sample_cap, std::uint64_t seed) {
    std::vector<std::string> texts;
    if (pool.size() <= sample_cap) {
        texts.reserve(pool.size());
        for (const auto& r : pool) texts.push_back(r.text);
    } else {
        Rng rng(seed);
        auto picks = rng.sample_without_replacement(pool.size(), sample_cap);
        std::sort(picks.begin(), picks.end());
        texts.reserve(sample_cap);
        for (std::size_t p : picks) texts.push_back(pool[p].text);
    }
    return train_lm(texts, order, min_count, discount);
}

SelectionRanking rank_random(std::span<const SentenceId> pool_ids, std::uint64_t seed) {
    std::vector<SentenceId> perm(pool_ids.begin(), pool_ids.end());
    Rng rng(seed);
    rng.shuffle(perm);
    SelectionRanking r;
    r.method = SelectionMethod::random;
    r.entries.reserve(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        r.entries.push_back({perm[i], static_cast<double>(perm.size() - 1 - i)});
    }
    return r;
}

std::vector<SentenceId> select_top_k(const SelectionRanking& r, std::size_t k) {
    const std::size_t n = std::min(k, r.size());
    std::vector<SentenceId> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(r.entries[i].id);
    return out;
}

void write_ranking(const SelectionRanking& r, const std::filesystem::path& path) {
    std::string out = "rank\tid\tscore\tmethod\n";
    const std::string method(to_string(r.method));
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
        out += std::to_string(i + 1) + "\t" + std::to_string(r.entries[i].id) + "\t" +
               format_double(r.entries[i].score) + "\t" + method + "\n";
    }
    write_file(path, out);
}

SelectionRanking read_ranking(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "rank\tid\tscore\tmethod") throw FormatError(path.string() + ": bad ranking header");
    SelectionRanking r;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split_whitespace(lines[i]);
        if (f.size() != 4) throw FormatError(path.string() + ": bad ranking line " + std::to_string(i + 1));
        const auto m = parse_selection_method(f[3]);
        if (!m) throw FormatError(path.string() + ": unknown method '" + std::string(f[3]) + "'");
        r.method = *m;
        SentenceId id = 0;
        auto [p, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), id);
        if (ec != std::errc{} || p != f[1].data() + f[1].size()) throw FormatError(path.string() + ": bad id");
        r.entries.push_back({id, std::stod(std::string(f[2]))});
    }
    return r;
}

void write_selection(std::span<const SentenceId> ids, const std::filesystem::path& path) {
    std::string out;
    for (SentenceId id : ids) {
        out += std::to_string(id);
        out += '\n';
    }
    write_file(path, out);
}

std::vector<SentenceId> read_selection(const std::filesystem::path& path) {
    std::vector<SentenceId> out;
    for (const auto& line : read_lines(path)) {
        const auto t = trim(line);
        if (t.empty()) continue;
        SentenceId id = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), id);
        if (ec != std::errc{} || p != t.data() + t.size()) throw FormatError(path.string() + ": bad id '" + line + "'");
        out.push_back(id);
    }
    return out;
}

}  // namespace domsel
