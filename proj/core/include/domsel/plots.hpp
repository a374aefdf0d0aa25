#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "domsel/clustering.hpp"
#include "domsel/embedding.hpp"
#include "domsel/evaluation.hpp"

namespace domsel {

enum class PlotKind { scatter2d, confusion, correlation };

std::optional<PlotKind> parse_plot_kind(std::string_view s);

/// CSV "id,x,y,domain,cluster" from a 2-component projection. clusters may be
/// empty (column left blank). Throws std::invalid_argument unless dim == 2.
std::string scatter2d_csv(const EmbeddingMatrix& points, std::span<const std::string> domains,
                          std::span<const int> clusters);

/// CSV "true_domain,<assigned domains...>" with one row per true domain.
std::string confusion_csv(const PurityReport& r);

/// CSV "model_domain,test_domain,cosine,bleu".
std::string correlation_csv(const CorrelationReport& r);

/// RFC 4180 quoting for a single field.
std::string csv_field(std::string_view s);

}  // namespace domsel
