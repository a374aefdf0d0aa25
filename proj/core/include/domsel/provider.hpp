#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "domsel/corpus.hpp"
#include "domsel/embedding.hpp"

namespace domsel {

/// Client-side knobs for the embedding provider wire protocol
/// (POST {endpoint}/v1/embed, GET {endpoint}/v1/models).
struct FetchOptions {
    std::size_t batch_size = 256;
    std::size_t max_concurrency = 1;  ///< in-flight batch requests
    int max_retries = 3;              ///< extra attempts after a transient failure
    std::chrono::milliseconds initial_backoff{200};  ///< doubled after each retry
    std::chrono::seconds timeout{120};
    std::string pooling = "mean_last_hidden";
    std::optional<int> layer;  ///< provider default (last hidden layer) when unset
};

struct ProviderModel {
    std::string name;
    int hidden_size = 0;
    std::string family;  ///< "masked" or "autoregressive"
};

/// Fetches one pooled vector per record, row i <-> records[i], with ids taken
/// from the records. An empty record list returns a 0 x 0 matrix and makes no
/// request.
///
/// Connection failures and HTTP 429/502/503/504 are retried with exponential
/// backoff; after max_retries the call throws TransportError. Any other
/// non-200 answer, a malformed body, or a dim that changes between batches
/// throws ProviderError.
EmbeddingMatrix fetch_embeddings(const std::string& endpoint, const std::string& model,
                                 std::span<const SentenceRecord> records,
                                 const FetchOptions& options = {});

std::vector<ProviderModel> list_models(const std::string& endpoint, const FetchOptions& options = {});

}  // namespace domsel
