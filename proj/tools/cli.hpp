#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace domsel::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Everything a subcommand can be configured with. Loaded from --config JSON
/// (nested sections below), then overridden by any flag given on the command line.
struct PipelineConfig {
    struct Paths {
        std::string manifest, train_manifest, dev_manifest, test_manifest;
        std::string input, emb_in, emb_out, labels, texts;
        std::string in_emb, pool_emb, in_text, pool_text, pool_labels;
        std::string selection, ranking_out, selection_out;
        std::string model_out, assign_in, assign_out, pca_model_out;
        std::string report_in, report_out, confusion_csv, csv_out;
        std::string bleu_fixture, out_dir, out;
    } paths;
    struct Provider {
        std::string url = "http://127.0.0.1:8000";
        std::string model = "bert-base-uncased";
        std::size_t batch_size = 256;
        std::size_t concurrency = 1;
        int layer = -1;  ///< negative: provider default (last hidden layer)
    } provider;
    struct Ingest {
        bool dedup = true;
        std::string cap_domain;
        long long cap = -1;  ///< negative: no cap
    } ingest;
    struct Clustering {
        std::vector<int> k{5};
        std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
        int pca = 50;  ///< 0 skips PCA
        int max_iter = 150;
        double tol = 1e-3;
    } clustering;
    struct Selection {
        std::string method = "cosine";
        long long top_k = 500000;
        int lm_order = 4;
        int lm_min_count = 2;
        double lm_discount = 0.75;
        std::size_t lm_gen_sample = 200000;
        int epochs = 20;
        double lr = 0.1;
        double l2 = 1e-4;
        bool prerank = true;
        bool positive_only = false;
        std::vector<std::string> targets;
    } selection;
    struct Plots {
        std::string kind;
    } plots;
    std::uint64_t seed = 0;
};

/// Runs one subcommand. Returns 0 on success, 1 on usage/config validation
/// errors, 2 on runtime errors. JSON results go to `out` unless --out is given.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace domsel::cli
