#include "domsel/provider.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "domsel/errors.hpp"

namespace domsel {
namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix without trailing slash
};

Endpoint parse_endpoint(const std::string& url) {
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) {
        throw std::invalid_argument("provider endpoint must start with http://: " + url);
    }
    const auto slash = url.find('/', scheme.size());
    Endpoint e;
    e.origin = url.substr(0, slash);
    if (slash != std::string::npos) e.prefix = url.substr(slash);
    while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
    if (e.origin.size() == scheme.size()) throw std::invalid_argument("provider endpoint has no host: " + url);
    return e;
}

bool transient_status(int status) {
    return status == 429 || status == 502 || status == 503 || status == 504;
}

std::string error_message(const httplib::Result& res) {
    std::string msg = "provider returned HTTP " + std::to_string(res->status);
    try {
        const auto j = nlohmann::json::parse(res->body);
        if (j.contains("error")) {
            const auto& e = j["error"];
            msg += ": " + (e.is_string() ? e.get<std::string>() : e.dump());
        } else if (j.contains("detail")) {
            msg += ": " + j["detail"].dump();
        }
    } catch (const nlohmann::json::exception&) {
        if (!res->body.empty()) msg += ": " + res->body.substr(0, 200);
    }
    return msg;
}

template <typename Send>
httplib::Result with_retries(const FetchOptions& options, const std::string& what, Send&& send) {
    auto backoff = options.initial_backoff;
    std::string last_failure;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Result res = send();
        if (!res) {
            last_failure = httplib::to_string(res.error());
            continue;
        }
        if (transient_status(res->status)) {
            last_failure = "HTTP " + std::to_string(res->status);
            continue;
        }
        return res;
    }
    throw TransportError(what + " failed after " + std::to_string(options.max_retries + 1) +
                         " attempts: " + last_failure);
}

httplib::Client make_client(const Endpoint& e, const FetchOptions& options) {
    httplib::Client cli(e.origin);
    cli.set_connection_timeout(options.timeout);
    cli.set_read_timeout(options.timeout);
    cli.set_write_timeout(options.timeout);
    return cli;
}

struct Batch {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t dim = 0;
    std::vector<float> values;
};

void fetch_batch(const Endpoint& e, const std::string& model, std::span<const SentenceRecord> records,
                 const FetchOptions& options, Batch& batch) {
    nlohmann::json req = {{"model", model}, {"pooling", options.pooling}};
    auto& texts = req["texts"] = nlohmann::json::array();
    for (std::size_t i = batch.begin; i < batch.end; ++i) texts.push_back(records[i].text);
    if (options.layer) req["layer"] = *options.layer;
    const std::string body = req.dump();

    auto cli = make_client(e, options);
    auto res = with_retries(options, "POST " + e.prefix + "/v1/embed",
                            [&] { return cli.Post(e.prefix + "/v1/embed", body, "application/json"); });
    if (res->status != 200) throw ProviderError(error_message(res), res->status);

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& ex) {
        throw ProviderError(std::string("provider body is not JSON: ") + ex.what(), res->status);
    }
    if (!j.contains("dim") || !j["dim"].is_number_integer() || !j.contains("vectors") ||
        !j["vectors"].is_array()) {
        throw ProviderError("provider response lacks 'dim'/'vectors'", res->status);
    }
    const auto dim = j["dim"].get<long long>();
    if (dim <= 0) throw ProviderError("provider reported non-positive dim", res->status);
    batch.dim = static_cast<std::size_t>(dim);
    const auto& vectors = j["vectors"];
    const std::size_t n = batch.end - batch.begin;
    if (vectors.size() != n) {
        throw ProviderError("provider returned " + std::to_string(vectors.size()) + " vectors for " +
                                std::to_string(n) + " texts",
                            res->status);
    }
    batch.values.reserve(n * batch.dim);
    for (const auto& v : vectors) {
        if (!v.is_array() || v.size() != batch.dim) {
            throw ProviderError("provider vector length differs from dim " + std::to_string(batch.dim),
                                res->status);
        }
        for (const auto& x : v) {
            if (!x.is_number()) throw ProviderError("provider vector has a non-numeric entry", res->status);
            const auto f = static_cast<float>(x.get<double>());
            if (!std::isfinite(f)) throw ProviderError("provider vector has a non-finite entry", res->status);
            batch.values.push_back(f);
        }
    }
}

}  // namespace

EmbeddingMatrix fetch_embeddings(const std::string& endpoint, const std::string& model,
                                 std::span<const SentenceRecord> records, const FetchOptions& options) {
    if (options.batch_size == 0) throw std::invalid_argument("fetch_embeddings: batch_size must be positive");
    const Endpoint e = parse_endpoint(endpoint);
    if (records.empty()) return EmbeddingMatrix(0);

    std::vector<Batch> batches;
    for (std::size_t b = 0; b < records.size(); b += options.batch_size) {
        batches.push_back({b, std::min(records.size(), b + options.batch_size), 0, {}});
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        for (;;) {
            if (failed.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= batches.size()) return;
            try {
                fetch_batch(e, model, records, options, batches[i]);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(options.max_concurrency, 1, batches.size());
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);

    const std::size_t dim = batches.front().dim;
    std::vector<float> data;
    data.reserve(records.size() * dim);
    for (const auto& b : batches) {
        if (b.dim != dim) {
            throw ProviderError("dim changed across batches: " + std::to_string(dim) + " then " +
                                std::to_string(b.dim));
        }
        data.insert(data.end(), b.values.begin(), b.values.end());
    }
    std::vector<SentenceId> ids;
    ids.reserve(records.size());
    for (const auto& r : records) ids.push_back(r.id);
    return EmbeddingMatrix(static_cast<std::uint32_t>(dim), std::move(data), std::move(ids));
}

std::vector<ProviderModel> list_models(const std::string& endpoint, const FetchOptions& options) {
    const Endpoint e = parse_endpoint(endpoint);
    auto cli = make_client(e, options);
    auto res = with_retries(options, "GET " + e.prefix + "/v1/models",
                            [&] { return cli.Get(e.prefix + "/v1/models"); });
    if (res->status != 200) throw ProviderError(error_message(res), res->status);
    std::vector<ProviderModel> out;
    try {
        const auto j = nlohmann::json::parse(res->body);
        const auto& list = j.is_array() ? j : j.at("models");
        for (const auto& m : list) {
            out.push_back({m.at("name").get<std::string>(), m.at("hidden_size").get<int>(),
                           m.at("family").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ProviderError(std::string("malformed /v1/models response: ") + ex.what(), res->status);
    }
    return out;
}

}  // namespace domsel
