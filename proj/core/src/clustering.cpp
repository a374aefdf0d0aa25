#include "domsel/clustering.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "domsel/errors.hpp"
#include "domsel/text.hpp"

namespace domsel {

PurityReport purity(std::span<const int> hard_labels, std::span<const std::string> labels, int n_clusters) {
    if (hard_labels.empty()) throw std::invalid_argument("purity: empty input");
    if (hard_labels.size() != labels.size()) {
        throw std::invalid_argument("purity: " + std::to_string(hard_labels.size()) + " cluster labels vs " +
                                    std::to_string(labels.size()) + " domain labels");
    }
    const int max_label = *std::max_element(hard_labels.begin(), hard_labels.end());
    if (*std::min_element(hard_labels.begin(), hard_labels.end()) < 0) {
        throw std::invalid_argument("purity: negative cluster label");
    }
    const int k = n_clusters < 0 ? max_label + 1 : n_clusters;
    if (max_label >= k) throw std::invalid_argument("purity: cluster label exceeds n_clusters");

    PurityReport r;
    r.total = labels.size();
    r.domains.assign(labels.begin(), labels.end());
    std::sort(r.domains.begin(), r.domains.end());
    r.domains.erase(std::unique(r.domains.begin(), r.domains.end()), r.domains.end());
    auto domain_index = [&](const std::string& d) {
        return static_cast<std::size_t>(std::lower_bound(r.domains.begin(), r.domains.end(), d) - r.domains.begin());
    };

    const std::size_t nd = r.domains.size();
    std::vector<std::vector<std::size_t>> counts(static_cast<std::size_t>(k), std::vector<std::size_t>(nd, 0));
    std::vector<std::size_t> row_domain(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        row_domain[i] = domain_index(labels[i]);
        ++counts[static_cast<std::size_t>(hard_labels[i])][row_domain[i]];
    }

    r.cluster_to_domain.resize(static_cast<std::size_t>(k));
    r.cluster_sizes.assign(static_cast<std::size_t>(k), 0);
    r.majority_counts.assign(static_cast<std::size_t>(k), 0);
    std::vector<std::size_t> cluster_domain(static_cast<std::size_t>(k), 0);
    std::size_t correct = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        r.cluster_sizes[c] = std::accumulate(counts[c].begin(), counts[c].end(), std::size_t{0});
        if (r.cluster_sizes[c] == 0) continue;
        // domains are sorted, so the first maximum is the lexicographic tie-break
        const auto best = static_cast<std::size_t>(std::max_element(counts[c].begin(), counts[c].end()) - counts[c].begin());
        cluster_domain[c] = best;
        r.cluster_to_domain[c] = r.domains[best];
        r.majority_counts[c] = counts[c][best];
        correct += counts[c][best];
    }
    r.purity = static_cast<double>(correct) / static_cast<double>(r.total);

    r.confusion.assign(nd, std::vector<std::size_t>(nd, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++r.confusion[row_domain[i]][cluster_domain[static_cast<std::size_t>(hard_labels[i])]];
    }
    return r;
}

PurityReport purity(const ClusterAssignment& a, std::span<const std::string> labels) {
    return purity(a.hard_labels, labels, static_cast<int>(a.responsibilities.cols()));
}

nlohmann::json to_json(const PurityReport& r) {
    nlohmann::json clusters = nlohmann::json::array();
    for (std::size_t c = 0; c < r.cluster_to_domain.size(); ++c) {
        clusters.push_back({
            {"cluster", c},
            {"domain", r.cluster_to_domain[c] ? nlohmann::json(*r.cluster_to_domain[c]) : nlohmann::json(nullptr)},
            {"size", r.cluster_sizes[c]},
            {"majority_count", r.majority_counts[c]},
        });
    }
    return {{"purity", r.purity}, {"total", r.total}, {"domains", r.domains},
            {"clusters", clusters}, {"confusion", r.confusion}};
}

PurityReport purity_from_json(const nlohmann::json& j) {
    try {
        PurityReport r;
        r.purity = j.at("purity").get<double>();
        r.total = j.at("total").get<std::size_t>();
        r.domains = j.at("domains").get<std::vector<std::string>>();
        r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
        for (const auto& c : j.at("clusters")) {
            const auto& d = c.at("domain");
            r.cluster_to_domain.push_back(d.is_null() ? std::nullopt : std::optional(d.get<std::string>()));
            r.cluster_sizes.push_back(c.at("size").get<std::size_t>());
            r.majority_counts.push_back(c.at("majority_count").get<std::size_t>());
        }
        if (r.confusion.size() != r.domains.size()) throw FormatError("purity report: confusion shape mismatch");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("purity report: ") + e.what());
    }
}

MeanVariance mean_and_variance(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean_and_variance: no values");
    MeanVariance mv;
    // a constant sequence must report its value and zero variance exactly
    if (std::adjacent_find(values.begin(), values.end(), std::not_equal_to<>()) == values.end()) {
        mv.mean = values.front();
        return mv;
    }
    mv.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    {
        double ss = 0.0;
        for (double v : values) ss += (v - mv.mean) * (v - mv.mean);
        mv.variance = ss / static_cast<double>(values.size() - 1);
    }
    return mv;
}

SeedSweep run_seed_sweep(const Eigen::MatrixXd& data, int k, std::span<const std::uint64_t> seeds,
                         std::span<const std::string> labels, const GmmOptions& options) {
    if (seeds.empty()) throw std::invalid_argument("run_seed_sweep: need at least one seed");
    SeedSweep s;
    s.k = k;
    s.seeds.assign(seeds.begin(), seeds.end());
    for (auto seed : seeds) {
        const auto g = fit_gmm(data, k, seed, options);
        s.purities.push_back(purity(assign(g, data), labels).purity);
    }
    s.summary = mean_and_variance(s.purities);
    return s;
}

nlohmann::json to_json(const SeedSweep& s) {
    return {{"k", s.k}, {"seeds", s.seeds}, {"purities", s.purities},
            {"mean", s.summary.mean}, {"variance", s.summary.variance}};
}

OutlierReport outlier_report(const ClusterAssignment& a, std::span<const std::string> labels,
                             std::span<const SentenceRecord> records) {
    if (records.size() != labels.size()) throw std::invalid_argument("outlier_report: records/labels misaligned");
    const PurityReport p = purity(a, labels);
    OutlierReport r;
    double all_tokens = 0.0;
    double outlier_tokens = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto ntok = static_cast<double>(split_whitespace(records[i].text).size());
        all_tokens += ntok;
        const auto& assigned = p.cluster_to_domain[static_cast<std::size_t>(a.hard_labels[i])];
        if (assigned && *assigned != labels[i]) {
            r.outliers.push_back({records[i].id, labels[i], *assigned});
            ++r.attracted[*assigned];
            outlier_tokens += ntok;
        }
    }
    r.mean_token_len_all = records.empty() ? 0.0 : all_tokens / static_cast<double>(records.size());
    r.mean_token_len_outliers = r.outliers.empty() ? 0.0 : outlier_tokens / static_cast<double>(r.outliers.size());
    return r;
}

nlohmann::json to_json(const OutlierReport& r) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& o : r.outliers) {
        list.push_back({{"id", o.id}, {"true_domain", o.true_domain}, {"assigned_domain", o.assigned_domain}});
    }
    return {{"outliers", list}, {"count", r.outliers.size()},
            {"mean_token_len_outliers", r.mean_token_len_outliers},
            {"mean_token_len_all", r.mean_token_len_all}, {"attracted", r.attracted}};
}

Eigen::VectorXd centroid(const EmbeddingMatrix& m, std::span<const SentenceId> subset) {
    if (subset.empty()) throw std::invalid_argument("centroid: empty subset");
    const auto rows = m.select_ids(subset);
    return rows.to_eigen().colwise().mean().transpose();
}

std::map<std::string, Eigen::VectorXd> domain_centroids(const EmbeddingMatrix& m,
                                                        std::span<const std::string> labels) {
    if (labels.size() != m.count()) throw std::invalid_argument("domain_centroids: labels/rows misaligned");
    std::map<std::string, std::vector<SentenceId>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(m.ids()[i]);
    std::map<std::string, Eigen::VectorXd> out;
    for (const auto& [domain, ids] : groups) out.emplace(domain, centroid(m, ids));
    return out;
}

}  // namespace domsel
