#include "domsel/plots.hpp"

#include <cstdio>
#include <stdexcept>

namespace domsel {
namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

std::optional<PlotKind> parse_plot_kind(std::string_view s) {
    if (s == "scatter2d") return PlotKind::scatter2d;
    if (s == "confusion") return PlotKind::confusion;
    if (s == "correlation") return PlotKind::correlation;
    return std::nullopt;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string scatter2d_csv(const EmbeddingMatrix& points, std::span<const std::string> domains,
                          std::span<const int> clusters) {
    if (points.dim() != 2 && !(points.empty() && points.dim() == 0)) {
        throw std::invalid_argument("scatter2d needs exactly 2 components, got " + std::to_string(points.dim()));
    }
    if (domains.size() != points.count() || (!clusters.empty() && clusters.size() != points.count())) {
        throw std::invalid_argument("scatter2d: labels are not row-aligned with the points");
    }
    std::string out = "id,x,y,domain,cluster\n";
    for (std::size_t i = 0; i < points.count(); ++i) {
        const auto r = points.row(i);
        out += std::to_string(points.ids()[i]) + "," + num(r[0]) + "," + num(r[1]) + "," + csv_field(domains[i]) + ",";
        if (!clusters.empty()) out += std::to_string(clusters[i]);
        out += "\n";
    }
    return out;
}

std::string confusion_csv(const PurityReport& r) {
    std::string out = "true_domain";
    for (const auto& d : r.domains) out += "," + csv_field(d);
    out += "\n";
    for (std::size_t i = 0; i < r.domains.size(); ++i) {
        out += csv_field(r.domains[i]);
        for (std::size_t c : r.confusion[i]) out += "," + std::to_string(c);
        out += "\n";
    }
    return out;
}

std::string correlation_csv(const CorrelationReport& r) {
    std::string out = "model_domain,test_domain,cosine,bleu\n";
    for (const auto& p : r.pairs) {
        out += csv_field(p.model_domain) + "," + csv_field(p.test_domain) + "," + num(p.cosine) + "," + num(p.bleu) + "\n";
    }
    return out;
}

}  // namespace domsel
