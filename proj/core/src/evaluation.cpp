#include "domsel/evaluation.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "domsel/errors.hpp"

namespace domsel {

PrfScores make_prf(std::size_t tp, std::size_t selected, std::size_t relevant) {
    PrfScores s;
    s.true_positives = tp;
    s.selected = selected;
    s.relevant = relevant;
    s.precision = selected ? static_cast<double>(tp) / static_cast<double>(selected) : 0.0;
    s.recall = relevant ? static_cast<double>(tp) / static_cast<double>(relevant) : 0.0;
    const double denom = s.precision + s.recall;
    s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
    return s;
}

EvalEntry selection_pr(std::span<const SentenceId> selected, const PoolLabels& pool_labels,
                       const std::string& target_domain) {
    std::unordered_set<SentenceId> unique(selected.begin(), selected.end());
    std::size_t tp = 0;
    for (SentenceId id : unique) {
        const auto it = pool_labels.find(id);
        if (it == pool_labels.end()) throw std::invalid_argument("selection_pr: unknown id " + std::to_string(id));
        if (it->second == target_domain) ++tp;
    }
    std::size_t relevant = 0;
    for (const auto& [id, label] : pool_labels) relevant += label == target_domain ? 1 : 0;
    return {target_domain, make_prf(tp, unique.size(), relevant)};
}

PrfScores classifier_holdout_eval(const ClassifierModel& c, const EmbeddingMatrix& held_pos,
                                  const EmbeddingMatrix& held_neg) {
    if (held_pos.empty() || held_neg.empty()) throw std::invalid_argument("classifier_holdout_eval: empty held-out set");
    auto check_disjoint = [](const std::vector<SentenceId>& train, const EmbeddingMatrix& held, const char* side) {
        std::unordered_set<SentenceId> t(train.begin(), train.end());
        for (SentenceId id : held.ids()) {
            if (t.contains(id)) {
                throw std::invalid_argument(std::string("classifier_holdout_eval: held-out ") + side + " id " +
                                            std::to_string(id) + " was used in training");
            }
        }
    };
    check_disjoint(c.positive_ids, held_pos, "positive");
    check_disjoint(c.negative_ids, held_neg, "negative");

    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < held_pos.count(); ++i) tp += c.score(held_pos.row(i)) >= 0.0 ? 1 : 0;
    for (std::size_t i = 0; i < held_neg.count(); ++i) fp += c.score(held_neg.row(i)) >= 0.0 ? 1 : 0;
    return make_prf(tp, tp + fp, held_pos.count());
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
    if (xs.size() < 2) throw std::invalid_argument("pearson: need at least two points");
    const auto n = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw std::invalid_argument("pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

BleuTable read_bleu_table(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("bleu fixture: expected an object of objects");
    BleuTable t;
    for (const auto& [model, row] : j.items()) {
        if (!row.is_object()) throw FormatError("bleu fixture: row '" + model + "' is not an object");
        for (const auto& [test, v] : row.items()) {
            if (!v.is_number()) throw FormatError("bleu fixture: " + model + "." + test + " is not a number");
            t[model][test] = v.get<double>();
        }
    }
    return t;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: dim mismatch");
    const double denom = a.norm() * b.norm();
    if (!(denom > 0.0)) throw std::invalid_argument("cosine_similarity: zero-norm vector");
    return std::clamp(a.dot(b) / denom, -1.0, 1.0);
}

CorrelationReport correlate_centroids_bleu(const std::map<std::string, Eigen::VectorXd>& centroids,
                                           const BleuTable& bleu) {
    std::set<std::string> a;
    std::set<std::string> b;
    for (const auto& [d, v] : centroids) a.insert(d);
    for (const auto& [d, row] : bleu) b.insert(d);
    if (a != b) throw std::invalid_argument("correlate_centroids_bleu: centroid and BLEU domain sets differ");

    CorrelationReport r;
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [model, cm] : centroids) {
        const auto& row = bleu.at(model);
        for (const auto& [test, ct] : centroids) {
            const auto it = row.find(test);
            if (it == row.end()) {
                throw std::invalid_argument("correlate_centroids_bleu: missing BLEU entry " + model + " -> " + test);
            }
            const double cos = cosine_similarity(cm, ct);
            r.pairs.push_back({model, test, cos, it->second});
            xs.push_back(cos);
            ys.push_back(it->second);
        }
    }
    r.pearson_r = pearson(xs, ys);
    return r;
}

nlohmann::json to_json(const PrfScores& s) {
    return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
            {"true_positives", s.true_positives}, {"selected", s.selected}, {"relevant", s.relevant}};
}

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& e : r.entries) j[e.domain] = to_json(e.scores);
    return j;
}

nlohmann::json to_json(const CorrelationReport& r) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : r.pairs) {
        pairs.push_back({{"model_domain", p.model_domain}, {"test_domain", p.test_domain},
                         {"cosine", p.cosine}, {"bleu", p.bleu}});
    }
    return {{"pairs", pairs}, {"pearson_r", r.pearson_r}};
}

CorrelationReport correlation_from_json(const nlohmann::json& j) {
    try {
        CorrelationReport r;
        r.pearson_r = j.at("pearson_r").get<double>();
        for (const auto& p : j.at("pairs")) {
            r.pairs.push_back({p.at("model_domain").get<std::string>(), p.at("test_domain").get<std::string>(),
                               p.at("cosine").get<double>(), p.at("bleu").get<double>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("correlation report: ") + e.what());
    }
}

}  // namespace domsel
