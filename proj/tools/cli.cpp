#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "domsel/clustering.hpp"
#include "domsel/corpus.hpp"
#include "domsel/embedding.hpp"
#include "domsel/evaluation.hpp"
#include "domsel/gmm.hpp"
#include "domsel/ngram.hpp"
#include "domsel/pca.hpp"
#include "domsel/plots.hpp"
#include "domsel/provider.hpp"
#include "domsel/selection.hpp"
#include "domsel/text.hpp"

namespace domsel::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// A config problem, reported as "<field path>: <message>".
class ValidationError : public std::runtime_error {
public:
    ValidationError(const std::string& field, const std::string& msg) : std::runtime_error(field + ": " + msg) {}
};

struct Binding {
    CLI::App* sub = nullptr;
    CLI::Option* opt = nullptr;
    std::string path;
    std::function<void(PipelineConfig&, const PipelineConfig&)> copy;
    std::function<void(PipelineConfig&, const json&)> load;
};

template <typename T>
std::string type_name() {
    if constexpr (std::is_same_v<T, bool>) return "boolean";
    else if constexpr (std::is_same_v<T, std::string>) return "string";
    else if constexpr (std::is_integral_v<T>) return "integer";
    else if constexpr (std::is_floating_point_v<T>) return "number";
    else return "array";
}

void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
    for (const auto& [key, value] : j.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object()) flatten(value, path, out);
        else out[path] = value;
    }
}

class Runner {
public:
    Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) { build(); }

    int run(std::span<const std::string> args) {
        if (args.empty()) {
            err_ << app_.help();
            return kExitValidation;
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        try {
            app_.parse(reversed);
        } catch (const CLI::CallForHelp& e) {
            out_ << app_.help();
            return kExitOk;
        } catch (const CLI::CallForAllHelp& e) {
            out_ << app_.help("", CLI::AppFormatMode::All);
            return kExitOk;
        } catch (const CLI::ParseError& e) {
            const int code = app_.exit(e, out_, err_);
            return code == 0 ? kExitOk : kExitValidation;
        }

        CLI::App* active = nullptr;
        for (auto* sub : app_.get_subcommands()) active = sub;
        if (active == nullptr) {
            err_ << app_.help();
            return kExitValidation;
        }
        const std::string name = active->get_name();
        try {
            cfg_ = resolve(active);
            validate(name);
        } catch (const ValidationError& e) {
            err_ << "config error: " << e.what() << "\n";
            return kExitValidation;
        }
        try {
            const json result = dispatch(name);
            emit(result);
        } catch (const ValidationError& e) {
            err_ << "config error: " << e.what() << "\n";
            return kExitValidation;
        } catch (const std::exception& e) {
            err_ << "error: " << e.what() << "\n";
            return kExitRuntime;
        }
        return kExitOk;
    }

private:
    template <typename T>
    CLI::Option* bind(CLI::App* sub, const std::string& flag, const std::string& path,
                      std::function<T&(PipelineConfig&)> acc, const std::string& desc) {
        CLI::Option* opt = nullptr;
        if constexpr (std::is_same_v<T, bool>) {
            opt = sub->add_flag(flag, acc(flags_), desc);
        } else {
            opt = sub->add_option(flag, acc(flags_), desc);
            if constexpr (!std::is_same_v<T, std::string> && !std::is_arithmetic_v<T>) opt->delimiter(',');
        }
        Binding b;
        b.sub = sub;
        b.opt = opt;
        b.path = path;
        b.copy = [acc](PipelineConfig& dst, const PipelineConfig& src) {
            acc(dst) = acc(const_cast<PipelineConfig&>(src));
        };
        b.load = [acc, path](PipelineConfig& dst, const json& v) {
            try {
                acc(dst) = v.get<T>();
            } catch (const json::exception&) {
                throw ValidationError(path, "expected " + type_name<T>() + ", got " + v.dump());
            }
        };
        bindings_.push_back(std::move(b));
        known_paths_.insert(path);
        return opt;
    }

#define DOMSEL_FIELD(type, expr) std::function<type&(PipelineConfig&)>([](PipelineConfig& c) -> type& { return expr; })

    void common(CLI::App* sub) {
        sub->add_option("--config", config_path_, "JSON config file; flags override its values")->check(CLI::ExistingFile);
        bind<std::uint64_t>(sub, "--seed", "seed", DOMSEL_FIELD(std::uint64_t, c.seed), "RNG seed");
        bind<std::string>(sub, "--out", "paths.out", DOMSEL_FIELD(std::string, c.paths.out),
                          "write the JSON result here instead of stdout");
    }

    void build() {
        app_.name("domsel");
        app_.description("Unsupervised domain clustering and in-domain data selection over sentence embeddings");
        app_.require_subcommand(1);

        auto* ingest = app_.add_subcommand("ingest", "Load a corpus manifest, dedup, cap and build the general pool");
        common(ingest);
        bind<std::string>(ingest, "--manifest", "paths.manifest", DOMSEL_FIELD(std::string, c.paths.manifest), "corpus manifest JSON");
        bind<bool>(ingest, "--dedup,!--no-dedup", "ingest.dedup", DOMSEL_FIELD(bool, c.ingest.dedup), "drop repeated source/target strings");
        bind<std::string>(ingest, "--cap-domain", "ingest.cap_domain", DOMSEL_FIELD(std::string, c.ingest.cap_domain), "domain to cap (default: all)");
        bind<long long>(ingest, "--cap", "ingest.cap", DOMSEL_FIELD(long long, c.ingest.cap), "maximum pairs per capped domain");
        bind<std::string>(ingest, "--out-dir", "paths.out_dir", DOMSEL_FIELD(std::string, c.paths.out_dir), "directory for pool.txt/pool.labels");

        auto* audit = app_.add_subcommand("audit-split", "Count dev/test sentences that also occur in train");
        common(audit);
        bind<std::string>(audit, "--train", "paths.train_manifest", DOMSEL_FIELD(std::string, c.paths.train_manifest), "train manifest");
        bind<std::string>(audit, "--dev", "paths.dev_manifest", DOMSEL_FIELD(std::string, c.paths.dev_manifest), "dev manifest");
        bind<std::string>(audit, "--test", "paths.test_manifest", DOMSEL_FIELD(std::string, c.paths.test_manifest), "test manifest");

        auto* embed = app_.add_subcommand("embed", "Fetch pooled sentence vectors from the embedding provider");
        common(embed);
        bind<std::string>(embed, "--input", "paths.input", DOMSEL_FIELD(std::string, c.paths.input), "sentences, one per line");
        bind<std::string>(embed, "--emb-out", "paths.emb_out", DOMSEL_FIELD(std::string, c.paths.emb_out), "EMB1 output");
        bind<std::string>(embed, "--provider-url", "provider.url", DOMSEL_FIELD(std::string, c.provider.url), "provider base URL");
        bind<std::string>(embed, "--model", "provider.model", DOMSEL_FIELD(std::string, c.provider.model), "provider model name");
        bind<std::size_t>(embed, "--batch-size", "provider.batch_size", DOMSEL_FIELD(std::size_t, c.provider.batch_size), "texts per request");
        bind<std::size_t>(embed, "--concurrency", "provider.concurrency", DOMSEL_FIELD(std::size_t, c.provider.concurrency), "in-flight requests");
        bind<int>(embed, "--layer", "provider.layer", DOMSEL_FIELD(int, c.provider.layer), "hidden layer to pool (default: last)");

        auto* pca = app_.add_subcommand("pca", "Fit PCA on an embedding file and project it");
        common(pca);
        bind<std::string>(pca, "--emb-in", "paths.emb_in", DOMSEL_FIELD(std::string, c.paths.emb_in), "EMB1 input");
        bind<std::string>(pca, "--emb-out", "paths.emb_out", DOMSEL_FIELD(std::string, c.paths.emb_out), "EMB1 output");
        bind<int>(pca, "--n,--pca", "clustering.pca", DOMSEL_FIELD(int, c.clustering.pca), "number of components");
        bind<std::string>(pca, "--pca-model-out", "paths.pca_model_out", DOMSEL_FIELD(std::string, c.paths.pca_model_out), "PCA model JSON");

        auto* cluster = app_.add_subcommand("cluster", "Fit one full-covariance GMM and write hard assignments");
        common(cluster);
        bind<std::string>(cluster, "--emb-in", "paths.emb_in", DOMSEL_FIELD(std::string, c.paths.emb_in), "EMB1 input");
        bind<std::vector<int>>(cluster, "--k", "clustering.k", DOMSEL_FIELD(std::vector<int>, c.clustering.k), "number of components");
        bind<int>(cluster, "--pca", "clustering.pca", DOMSEL_FIELD(int, c.clustering.pca), "PCA components before fitting (0: none)");
        bind<int>(cluster, "--max-iter", "clustering.max_iter", DOMSEL_FIELD(int, c.clustering.max_iter), "EM iteration cap");
        bind<double>(cluster, "--tol", "clustering.tol", DOMSEL_FIELD(double, c.clustering.tol), "mean log-likelihood tolerance");
        bind<std::string>(cluster, "--model-out", "paths.model_out", DOMSEL_FIELD(std::string, c.paths.model_out), "GMM1 model output");
        bind<std::string>(cluster, "--assign-out", "paths.assign_out", DOMSEL_FIELD(std::string, c.paths.assign_out), "hard labels, one per line");

        auto* purity_cmd = app_.add_subcommand("purity", "Seed sweep of GMM clustering purity against domain labels");
        common(purity_cmd);
        bind<std::string>(purity_cmd, "--emb-in", "paths.emb_in", DOMSEL_FIELD(std::string, c.paths.emb_in), "EMB1 input");
        bind<std::string>(purity_cmd, "--labels", "paths.labels", DOMSEL_FIELD(std::string, c.paths.labels), "domain per row");
        bind<std::string>(purity_cmd, "--texts", "paths.texts", DOMSEL_FIELD(std::string, c.paths.texts), "sentences per row (enables outlier report)");
        bind<std::vector<int>>(purity_cmd, "--k", "clustering.k", DOMSEL_FIELD(std::vector<int>, c.clustering.k), "k values, comma separated");
        bind<std::vector<std::uint64_t>>(purity_cmd, "--seeds", "clustering.seeds", DOMSEL_FIELD(std::vector<std::uint64_t>, c.clustering.seeds), "seeds, comma separated");
        bind<int>(purity_cmd, "--pca", "clustering.pca", DOMSEL_FIELD(int, c.clustering.pca), "PCA components (0: none)");
        bind<int>(purity_cmd, "--max-iter", "clustering.max_iter", DOMSEL_FIELD(int, c.clustering.max_iter), "EM iteration cap");
        bind<double>(purity_cmd, "--tol", "clustering.tol", DOMSEL_FIELD(double, c.clustering.tol), "mean log-likelihood tolerance");
        bind<std::string>(purity_cmd, "--report-out", "paths.report_out", DOMSEL_FIELD(std::string, c.paths.report_out), "purity report JSON (first k, first seed)");
        bind<std::string>(purity_cmd, "--confusion-csv", "paths.confusion_csv", DOMSEL_FIELD(std::string, c.paths.confusion_csv), "confusion matrix CSV");

        auto* select = app_.add_subcommand("select", "Rank the pool and select in-domain sentences");
        common(select);
        bind<std::string>(select, "--method", "selection.method", DOMSEL_FIELD(std::string, c.selection.method), "cosine|classifier|moore-lewis|random");
        bind<long long>(select, "--top-k", "selection.top_k", DOMSEL_FIELD(long long, c.selection.top_k), "sentences to select");
        bind<std::string>(select, "--in-emb", "paths.in_emb", DOMSEL_FIELD(std::string, c.paths.in_emb), "in-domain seed embeddings");
        bind<std::string>(select, "--pool-emb", "paths.pool_emb", DOMSEL_FIELD(std::string, c.paths.pool_emb), "pool embeddings");
        bind<std::string>(select, "--in-text", "paths.in_text", DOMSEL_FIELD(std::string, c.paths.in_text), "in-domain seed sentences");
        bind<std::string>(select, "--pool-text", "paths.pool_text", DOMSEL_FIELD(std::string, c.paths.pool_text), "pool sentences (id = line number)");
        bind<int>(select, "--lm-order", "selection.lm_order", DOMSEL_FIELD(int, c.selection.lm_order), "n-gram order");
        bind<int>(select, "--lm-min-count", "selection.lm_min_count", DOMSEL_FIELD(int, c.selection.lm_min_count), "vocabulary threshold");
        bind<double>(select, "--lm-discount", "selection.lm_discount", DOMSEL_FIELD(double, c.selection.lm_discount), "Kneser-Ney discount");
        bind<std::size_t>(select, "--lm-gen-sample", "selection.lm_gen_sample", DOMSEL_FIELD(std::size_t, c.selection.lm_gen_sample), "pool sample size for the general LM");
        bind<int>(select, "--epochs", "selection.epochs", DOMSEL_FIELD(int, c.selection.epochs), "classifier gradient steps");
        bind<double>(select, "--lr", "selection.lr", DOMSEL_FIELD(double, c.selection.lr), "classifier learning rate");
        bind<double>(select, "--l2", "selection.l2", DOMSEL_FIELD(double, c.selection.l2), "classifier L2 penalty");
        bind<bool>(select, "--prerank,!--no-prerank", "selection.prerank", DOMSEL_FIELD(bool, c.selection.prerank), "sample negatives from the bottom two-thirds of the cosine ranking");
        bind<bool>(select, "--positive-only", "selection.positive_only", DOMSEL_FIELD(bool, c.selection.positive_only), "select every pool sentence classified positive instead of top-k");
        bind<std::string>(select, "--ranking-out", "paths.ranking_out", DOMSEL_FIELD(std::string, c.paths.ranking_out), "ranking TSV");
        bind<std::string>(select, "--selection-out", "paths.selection_out", DOMSEL_FIELD(std::string, c.paths.selection_out), "selected ids, one per line");

        auto* eval = app_.add_subcommand("eval-selection", "Precision/recall of a selection against pool domain labels");
        common(eval);
        bind<std::string>(eval, "--selection", "paths.selection", DOMSEL_FIELD(std::string, c.paths.selection), "selected ids");
        bind<std::string>(eval, "--pool-labels", "paths.pool_labels", DOMSEL_FIELD(std::string, c.paths.pool_labels), "domain per pool id (line number)");
        bind<std::vector<std::string>>(eval, "--target", "selection.targets", DOMSEL_FIELD(std::vector<std::string>, c.selection.targets), "target domains (default: all)");

        auto* corr = app_.add_subcommand("correlate", "Correlate domain-centroid cosine with cross-domain BLEU");
        common(corr);
        bind<std::string>(corr, "--emb-in", "paths.emb_in", DOMSEL_FIELD(std::string, c.paths.emb_in), "EMB1 input");
        bind<std::string>(corr, "--labels", "paths.labels", DOMSEL_FIELD(std::string, c.paths.labels), "domain per row");
        bind<std::string>(corr, "--bleu-fixture", "paths.bleu_fixture", DOMSEL_FIELD(std::string, c.paths.bleu_fixture), "BLEU table JSON");
        bind<std::string>(corr, "--csv-out", "paths.csv_out", DOMSEL_FIELD(std::string, c.paths.csv_out), "pairs CSV");

        auto* plots = app_.add_subcommand("emit-plots", "Write plot-ready CSV");
        common(plots);
        bind<std::string>(plots, "--kind", "plots.kind", DOMSEL_FIELD(std::string, c.plots.kind), "scatter2d|confusion|correlation");
        bind<std::string>(plots, "--emb-in", "paths.emb_in", DOMSEL_FIELD(std::string, c.paths.emb_in), "2-component EMB1 (scatter2d)");
        bind<std::string>(plots, "--labels", "paths.labels", DOMSEL_FIELD(std::string, c.paths.labels), "domain per row (scatter2d)");
        bind<std::string>(plots, "--assign-in", "paths.assign_in", DOMSEL_FIELD(std::string, c.paths.assign_in), "cluster per row (scatter2d, optional)");
        bind<std::string>(plots, "--report-in", "paths.report_in", DOMSEL_FIELD(std::string, c.paths.report_in), "purity or correlation report JSON");
        bind<std::string>(plots, "--csv-out", "paths.csv_out", DOMSEL_FIELD(std::string, c.paths.csv_out), "CSV output");
    }

#undef DOMSEL_FIELD

    PipelineConfig resolve(CLI::App* active) {
        PipelineConfig cfg;
        if (!config_path_.empty()) {
            json j;
            try {
                j = json::parse(read_file(config_path_));
            } catch (const json::parse_error& e) {
                throw ValidationError("--config", std::string("not valid JSON: ") + e.what());
            }
            if (!j.is_object()) throw ValidationError("--config", "top level must be an object");
            std::map<std::string, json> leaves;
            flatten(j, "", leaves);
            for (const auto& [path, value] : leaves) {
                if (!known_paths_.contains(path)) throw ValidationError(path, "unknown config field");
            }
            for (const auto& b : bindings_) {
                if (b.sub != active) continue;
                if (auto it = leaves.find(b.path); it != leaves.end()) b.load(cfg, it->second);
            }
        }
        for (const auto& b : bindings_) {
            if (b.sub == active && b.opt->count() > 0) b.copy(cfg, flags_);
        }
        return cfg;
    }

    static void require(const std::string& field, const std::string& value) {
        if (value.empty()) throw ValidationError(field, "required");
    }

    static void require_file(const std::string& field, const std::string& value) {
        require(field, value);
        if (!fs::is_regular_file(value)) throw ValidationError(field, "no such file '" + value + "'");
    }

    static void require_writable(const std::string& field, const std::string& value) {
        require(field, value);
        const fs::path parent = fs::path(value).parent_path();
        if (!parent.empty() && !fs::is_directory(parent)) {
            throw ValidationError(field, "directory '" + parent.string() + "' does not exist");
        }
    }

    static void optional_writable(const std::string& field, const std::string& value) {
        if (!value.empty()) require_writable(field, value);
    }

    void validate_clustering(bool single_k) const {
        const auto& c = cfg_.clustering;
        if (c.k.empty()) throw ValidationError("clustering.k", "at least one value required");
        if (single_k && c.k.size() != 1) throw ValidationError("clustering.k", "cluster takes exactly one k");
        for (int k : c.k) {
            if (k < 1) throw ValidationError("clustering.k", "must be >= 1");
        }
        if (c.pca < 0) throw ValidationError("clustering.pca", "must be >= 0");
        if (c.max_iter < 1) throw ValidationError("clustering.max_iter", "must be >= 1");
        if (!(c.tol > 0.0)) throw ValidationError("clustering.tol", "must be > 0");
    }

    void validate(const std::string& cmd) const {
        const auto& p = cfg_.paths;
        optional_writable("paths.out", p.out);
        if (cmd == "ingest") {
            require_file("paths.manifest", p.manifest);
            require("paths.out_dir", p.out_dir);
            if (cfg_.ingest.cap < -1) throw ValidationError("ingest.cap", "must be >= 0");
            if (!cfg_.ingest.cap_domain.empty() && cfg_.ingest.cap < 0) {
                throw ValidationError("ingest.cap", "required when ingest.cap_domain is set");
            }
        } else if (cmd == "audit-split") {
            require_file("paths.train_manifest", p.train_manifest);
            require_file("paths.dev_manifest", p.dev_manifest);
            require_file("paths.test_manifest", p.test_manifest);
        } else if (cmd == "embed") {
            require_file("paths.input", p.input);
            require_writable("paths.emb_out", p.emb_out);
            if (cfg_.provider.url.rfind("http://", 0) != 0) throw ValidationError("provider.url", "must start with http://");
            require("provider.model", cfg_.provider.model);
            if (cfg_.provider.batch_size < 1) throw ValidationError("provider.batch_size", "must be >= 1");
            if (cfg_.provider.concurrency < 1) throw ValidationError("provider.concurrency", "must be >= 1");
        } else if (cmd == "pca") {
            require_file("paths.emb_in", p.emb_in);
            require_writable("paths.emb_out", p.emb_out);
            optional_writable("paths.pca_model_out", p.pca_model_out);
            if (cfg_.clustering.pca < 1) throw ValidationError("clustering.pca", "must be >= 1");
        } else if (cmd == "cluster") {
            require_file("paths.emb_in", p.emb_in);
            validate_clustering(true);
            optional_writable("paths.model_out", p.model_out);
            optional_writable("paths.assign_out", p.assign_out);
        } else if (cmd == "purity") {
            require_file("paths.emb_in", p.emb_in);
            require_file("paths.labels", p.labels);
            if (!p.texts.empty()) require_file("paths.texts", p.texts);
            validate_clustering(false);
            if (cfg_.clustering.seeds.empty()) throw ValidationError("clustering.seeds", "at least one seed required");
            optional_writable("paths.report_out", p.report_out);
            optional_writable("paths.confusion_csv", p.confusion_csv);
        } else if (cmd == "select") {
            const auto method = parse_selection_method(cfg_.selection.method);
            if (!method) throw ValidationError("selection.method", "unknown method '" + cfg_.selection.method + "'");
            if (cfg_.selection.top_k < 0) throw ValidationError("selection.top_k", "must be >= 0");
            require_writable("paths.selection_out", p.selection_out);
            optional_writable("paths.ranking_out", p.ranking_out);
            switch (*method) {
                case SelectionMethod::cosine:
                case SelectionMethod::classifier:
                    require_file("paths.in_emb", p.in_emb);
                    require_file("paths.pool_emb", p.pool_emb);
                    break;
                case SelectionMethod::moore_lewis:
                    require_file("paths.in_text", p.in_text);
                    require_file("paths.pool_text", p.pool_text);
                    break;
                case SelectionMethod::random:
                    if (p.pool_emb.empty() && p.pool_text.empty()) {
                        throw ValidationError("paths.pool_emb", "random selection needs paths.pool_emb or paths.pool_text");
                    }
                    if (!p.pool_emb.empty()) require_file("paths.pool_emb", p.pool_emb);
                    else require_file("paths.pool_text", p.pool_text);
                    break;
            }
            const auto& s = cfg_.selection;
            if (s.lm_order < 1) throw ValidationError("selection.lm_order", "must be >= 1");
            if (s.lm_min_count < 1) throw ValidationError("selection.lm_min_count", "must be >= 1");
            if (!(s.lm_discount > 0.0 && s.lm_discount <= 1.0)) throw ValidationError("selection.lm_discount", "must be in (0, 1]");
            if (s.lm_gen_sample < 1) throw ValidationError("selection.lm_gen_sample", "must be >= 1");
            if (s.epochs < 0) throw ValidationError("selection.epochs", "must be >= 0");
            if (!(s.lr > 0.0)) throw ValidationError("selection.lr", "must be > 0");
            if (s.l2 < 0.0) throw ValidationError("selection.l2", "must be >= 0");
            if (s.positive_only && *method != SelectionMethod::classifier) {
                throw ValidationError("selection.positive_only", "only applies to the classifier method");
            }
        } else if (cmd == "eval-selection") {
            require_file("paths.selection", p.selection);
            require_file("paths.pool_labels", p.pool_labels);
        } else if (cmd == "correlate") {
            require_file("paths.emb_in", p.emb_in);
            require_file("paths.labels", p.labels);
            require_file("paths.bleu_fixture", p.bleu_fixture);
            optional_writable("paths.csv_out", p.csv_out);
        } else if (cmd == "emit-plots") {
            const auto kind = parse_plot_kind(cfg_.plots.kind);
            if (!kind) throw ValidationError("plots.kind", "expected scatter2d, confusion or correlation");
            require_writable("paths.csv_out", p.csv_out);
            if (*kind == PlotKind::scatter2d) {
                require_file("paths.emb_in", p.emb_in);
                require_file("paths.labels", p.labels);
                if (!p.assign_in.empty()) require_file("paths.assign_in", p.assign_in);
            } else {
                require_file("paths.report_in", p.report_in);
            }
        }
    }

    json dispatch(const std::string& cmd) {
        if (cmd == "ingest") return cmd_ingest();
        if (cmd == "audit-split") return cmd_audit();
        if (cmd == "embed") return cmd_embed();
        if (cmd == "pca") return cmd_pca();
        if (cmd == "cluster") return cmd_cluster();
        if (cmd == "purity") return cmd_purity();
        if (cmd == "select") return cmd_select();
        if (cmd == "eval-selection") return cmd_eval();
        if (cmd == "correlate") return cmd_correlate();
        if (cmd == "emit-plots") return cmd_plots();
        throw std::logic_error("unhandled subcommand " + cmd);
    }

    void emit(const json& result) {
        const std::string text = result.dump(2) + "\n";
        if (cfg_.paths.out.empty()) out_ << text;
        else write_file(cfg_.paths.out, text);
    }

    static std::vector<std::string> read_row_labels(const std::string& field, const std::string& path,
                                                    std::size_t rows) {
        auto labels = read_lines(path);
        if (labels.size() != rows) {
            throw ValidationError(field, std::to_string(labels.size()) + " lines for " + std::to_string(rows) + " rows");
        }
        return labels;
    }

    static std::vector<SentenceRecord> read_records(const std::string& path) {
        const auto lines = read_lines(path);
        std::vector<SentenceRecord> recs;
        recs.reserve(lines.size());
        for (std::size_t i = 0; i < lines.size(); ++i) recs.push_back({i, lines[i], std::nullopt});
        return recs;
    }

    json cmd_ingest() {
        const auto& ic = cfg_.ingest;
        auto corpora = load_domain_corpus(cfg_.paths.manifest);
        if (!ic.cap_domain.empty()) {
            const bool found = std::any_of(corpora.begin(), corpora.end(),
                                           [&](const DomainCorpus& c) { return c.domain == ic.cap_domain; });
            if (!found) throw ValidationError("ingest.cap_domain", "no domain named '" + ic.cap_domain + "' in manifest");
        }
        json domains = json::array();
        for (auto& corpus : corpora) {
            json d = {{"name", corpus.domain}, {"loaded", corpus.size()}};
            if (ic.dedup) {
                auto r = dedup_pairs(corpus);
                d["removed_by_dedup"] = r.removed;
                corpus = std::move(r.corpus);
            }
            d["after_dedup"] = corpus.size();
            if (ic.cap >= 0 && (ic.cap_domain.empty() || ic.cap_domain == corpus.domain)) {
                corpus = cap_corpus(corpus, static_cast<std::size_t>(ic.cap), cfg_.seed);
            }
            d["final"] = corpus.size();
            domains.push_back(d);
        }
        const auto pool = build_general_pool(corpora);

        const fs::path dir(cfg_.paths.out_dir);
        fs::create_directories(dir);
        std::vector<std::string> src;
        std::vector<std::string> labels;
        std::vector<std::string> tgt;
        const bool parallel = std::all_of(pool.pairs.begin(), pool.pairs.end(),
                                          [](const ParallelPair& p) { return p.tgt.has_value(); });
        for (const auto& p : pool.pairs) {
            src.push_back(p.src.text);
            labels.push_back(p.src.domain.value_or(""));
            if (parallel) tgt.push_back(p.tgt->text);
        }
        write_lines(dir / "pool.txt", src);
        write_lines(dir / "pool.labels", labels);
        json outputs = {{"text", (dir / "pool.txt").string()}, {"labels", (dir / "pool.labels").string()}};
        if (parallel && !pool.pairs.empty()) {
            write_lines(dir / "pool.tgt", tgt);
            outputs["tgt"] = (dir / "pool.tgt").string();
        }
        return {{"domains", domains}, {"pool_size", pool.size()}, {"outputs", outputs}};
    }

    json cmd_audit() {
        const auto train = load_domain_corpus(cfg_.paths.train_manifest);
        const auto dev = load_domain_corpus(cfg_.paths.dev_manifest);
        const auto test = load_domain_corpus(cfg_.paths.test_manifest);
        auto find = [](const std::vector<DomainCorpus>& v, const std::string& name, const std::string& field) {
            for (const auto& c : v) {
                if (c.domain == name) return &c;
            }
            throw ValidationError(field, "no domain named '" + name + "'");
        };
        OverlapReport report;
        for (const auto& t : train) {
            report.domains.push_back(check_split_overlap(t, *find(dev, t.domain, "paths.dev_manifest"),
                                                         *find(test, t.domain, "paths.test_manifest")));
        }
        return to_json(report);
    }

    json cmd_embed() {
        const auto records = read_records(cfg_.paths.input);
        for (const auto& r : records) {
            if (trim(r.text).empty()) throw std::runtime_error("input line " + std::to_string(r.id + 1) + " is blank");
        }
        FetchOptions opts;
        opts.batch_size = cfg_.provider.batch_size;
        opts.max_concurrency = cfg_.provider.concurrency;
        if (cfg_.provider.layer >= 0) opts.layer = cfg_.provider.layer;
        const auto m = fetch_embeddings(cfg_.provider.url, cfg_.provider.model, records, opts);
        write_embeddings(m, cfg_.paths.emb_out);
        return {{"count", m.count()}, {"dim", m.dim()}, {"emb_out", cfg_.paths.emb_out}};
    }

    static void check_pca_size(int n, const EmbeddingMatrix& m) {
        const auto limit = std::min<std::size_t>(m.count(), m.dim());
        if (static_cast<std::size_t>(n) > limit) {
            throw ValidationError("clustering.pca", std::to_string(n) + " exceeds min(count, dim) = " + std::to_string(limit));
        }
        if (m.count() < 2) throw ValidationError("paths.emb_in", "PCA needs at least 2 rows");
    }

    json cmd_pca() {
        const auto m = read_embeddings(cfg_.paths.emb_in);
        check_pca_size(cfg_.clustering.pca, m);
        const auto model = fit_pca(m, cfg_.clustering.pca);
        write_embeddings(apply_pca(model, m), cfg_.paths.emb_out);
        if (!cfg_.paths.pca_model_out.empty()) write_file(cfg_.paths.pca_model_out, to_json(model).dump() + "\n");
        return {{"n_components", model.n_components()},
                {"singular_values", std::vector<double>(model.singular_values.begin(), model.singular_values.end())},
                {"emb_out", cfg_.paths.emb_out}};
    }

    Eigen::MatrixXd clustering_input(const EmbeddingMatrix& m) const {
        if (cfg_.clustering.pca == 0) return m.to_eigen();
        check_pca_size(cfg_.clustering.pca, m);
        return project(fit_pca(m, cfg_.clustering.pca), m);
    }

    GmmOptions gmm_options() const {
        GmmOptions o;
        o.max_iter = cfg_.clustering.max_iter;
        o.tol = cfg_.clustering.tol;
        return o;
    }

    static void check_k(int k, std::size_t rows) {
        if (static_cast<std::size_t>(k) > rows) {
            throw ValidationError("clustering.k", std::to_string(k) + " exceeds the number of rows " + std::to_string(rows));
        }
    }

    json cmd_cluster() {
        const auto m = read_embeddings(cfg_.paths.emb_in);
        const int k = cfg_.clustering.k.front();
        check_k(k, m.count());
        const auto data = clustering_input(m);
        const auto g = fit_gmm(data, k, cfg_.seed, gmm_options());
        const auto a = assign(g, data);
        if (!cfg_.paths.model_out.empty()) write_gmm(g, cfg_.paths.model_out);
        if (!cfg_.paths.assign_out.empty()) {
            std::vector<std::string> lines;
            for (int l : a.hard_labels) lines.push_back(std::to_string(l));
            write_lines(cfg_.paths.assign_out, lines);
        }
        std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
        for (int l : a.hard_labels) ++sizes[static_cast<std::size_t>(l)];
        return {{"k", k}, {"seed", cfg_.seed}, {"pca", cfg_.clustering.pca}, {"n_iter", g.n_iter},
                {"converged", g.converged}, {"log_likelihood_trace", g.log_likelihood_trace},
                {"weights", std::vector<double>(g.weights.begin(), g.weights.end())}, {"cluster_sizes", sizes}};
    }

    json cmd_purity() {
        const auto m = read_embeddings(cfg_.paths.emb_in);
        const auto labels = read_row_labels("paths.labels", cfg_.paths.labels, m.count());
        std::vector<SentenceRecord> records;
        if (!cfg_.paths.texts.empty()) {
            records = read_records(cfg_.paths.texts);
            if (records.size() != m.count()) throw ValidationError("paths.texts", "not row-aligned with paths.emb_in");
            for (std::size_t i = 0; i < records.size(); ++i) records[i].id = m.ids()[i];
        }
        for (int k : cfg_.clustering.k) check_k(k, m.count());
        const auto data = clustering_input(m);

        json sweeps = json::array();
        json result = {{"pca", cfg_.clustering.pca}, {"rows", m.count()}};
        for (std::size_t ki = 0; ki < cfg_.clustering.k.size(); ++ki) {
            const int k = cfg_.clustering.k[ki];
            SeedSweep sweep;
            sweep.k = k;
            for (std::size_t si = 0; si < cfg_.clustering.seeds.size(); ++si) {
                const auto seed = cfg_.clustering.seeds[si];
                const auto g = fit_gmm(data, k, seed, gmm_options());
                const auto a = assign(g, data);
                const auto report = purity(a, labels);
                sweep.seeds.push_back(seed);
                sweep.purities.push_back(report.purity);
                if (ki == 0 && si == 0) {
                    if (!cfg_.paths.report_out.empty()) write_file(cfg_.paths.report_out, to_json(report).dump(2) + "\n");
                    if (!cfg_.paths.confusion_csv.empty()) write_file(cfg_.paths.confusion_csv, confusion_csv(report));
                    if (!records.empty()) result["outliers"] = to_json(outlier_report(a, labels, records));
                }
            }
            sweep.summary = mean_and_variance(sweep.purities);
            sweeps.push_back(to_json(sweep));
        }
        result["sweeps"] = sweeps;
        return result;
    }

    json cmd_select() {
        const auto& s = cfg_.selection;
        const auto method = *parse_selection_method(s.method);
        SelectionRanking ranking;
        std::optional<std::vector<SentenceId>> selection;
        json extra = json::object();

        switch (method) {
            case SelectionMethod::cosine: {
                const auto in = read_embeddings(cfg_.paths.in_emb);
                const auto pool = read_embeddings(cfg_.paths.pool_emb);
                ranking = rank_cosine(in, pool);
                break;
            }
            case SelectionMethod::classifier: {
                const auto in = read_embeddings(cfg_.paths.in_emb);
                const auto pool = read_embeddings(cfg_.paths.pool_emb);
                const std::size_t n = in.count();
                std::vector<SentenceId> negatives;
                if (s.prerank) {
                    negatives = sample_negatives_preranked(rank_cosine(in, pool), n, cfg_.seed);
                } else {
                    negatives = sample_negatives_uniform(pool.ids(), n, cfg_.seed);
                }
                ClassifierOptions opts;
                opts.epochs = s.epochs;
                opts.learning_rate = s.lr;
                opts.l2 = s.l2;
                opts.seed = cfg_.seed;
                const auto model = train_pu_classifier(in, pool.select_ids(negatives), opts);
                ranking = rank_classifier(model, pool);
                if (s.positive_only) selection = select_positive(model, pool);
                extra = {{"negatives", negatives.size()}, {"prerank", s.prerank},
                         {"final_loss", model.loss_trace.back()}};
                break;
            }
            case SelectionMethod::moore_lewis: {
                const auto in = read_records(cfg_.paths.in_text);
                const auto pool = read_records(cfg_.paths.pool_text);
                std::vector<std::string> in_texts;
                for (const auto& r : in) in_texts.push_back(r.text);
                const auto lm_in = train_lm(in_texts, s.lm_order, s.lm_min_count, s.lm_discount);
                const auto lm_gen = train_general_lm(pool, s.lm_order, s.lm_min_count, s.lm_discount, s.lm_gen_sample,
                                                     cfg_.seed);
                ranking = rank_moore_lewis(lm_in, lm_gen, pool);
                extra = {{"lm_order", s.lm_order}, {"in_vocab", lm_in.vocab().size()}, {"gen_vocab", lm_gen.vocab().size()}};
                break;
            }
            case SelectionMethod::random: {
                std::vector<SentenceId> ids;
                if (!cfg_.paths.pool_emb.empty()) {
                    ids = read_embeddings(cfg_.paths.pool_emb).ids();
                } else {
                    for (const auto& r : read_records(cfg_.paths.pool_text)) ids.push_back(r.id);
                }
                ranking = rank_random(ids, cfg_.seed);
                break;
            }
        }
        if (!selection) selection = select_top_k(ranking, static_cast<std::size_t>(s.top_k));
        write_selection(*selection, cfg_.paths.selection_out);
        if (!cfg_.paths.ranking_out.empty()) write_ranking(ranking, cfg_.paths.ranking_out);
        json result = {{"method", std::string(to_string(method))}, {"pool_size", ranking.size()},
                       {"selected", selection->size()}, {"selection_out", cfg_.paths.selection_out}};
        result.update(extra);
        return result;
    }

    json cmd_eval() {
        const auto selected = read_selection(cfg_.paths.selection);
        const auto lines = read_lines(cfg_.paths.pool_labels);
        PoolLabels labels;
        std::set<std::string> domains;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            labels.emplace(i, lines[i]);
            domains.insert(lines[i]);
        }
        std::vector<std::string> targets = cfg_.selection.targets;
        if (targets.empty()) targets.assign(domains.begin(), domains.end());
        for (const auto& t : targets) {
            if (!domains.contains(t)) throw ValidationError("selection.targets", "no pool sentence has domain '" + t + "'");
        }
        EvalReport report;
        for (const auto& t : targets) report.entries.push_back(selection_pr(selected, labels, t));
        return to_json(report);
    }

    json cmd_correlate() {
        const auto m = read_embeddings(cfg_.paths.emb_in);
        const auto labels = read_row_labels("paths.labels", cfg_.paths.labels, m.count());
        json fixture;
        try {
            fixture = json::parse(read_file(cfg_.paths.bleu_fixture));
        } catch (const json::parse_error& e) {
            throw ValidationError("paths.bleu_fixture", std::string("not valid JSON: ") + e.what());
        }
        const auto report = correlate_centroids_bleu(domain_centroids(m, labels), read_bleu_table(fixture));
        if (!cfg_.paths.csv_out.empty()) write_file(cfg_.paths.csv_out, correlation_csv(report));
        return to_json(report);
    }

    json cmd_plots() {
        const auto kind = *parse_plot_kind(cfg_.plots.kind);
        std::string csv;
        std::size_t rows = 0;
        if (kind == PlotKind::scatter2d) {
            const auto m = read_embeddings(cfg_.paths.emb_in);
            if (m.dim() != 2 && m.count() > 0) {
                throw ValidationError("paths.emb_in", "scatter2d needs exactly 2 components, got " + std::to_string(m.dim()));
            }
            const auto labels = read_row_labels("paths.labels", cfg_.paths.labels, m.count());
            std::vector<int> clusters;
            if (!cfg_.paths.assign_in.empty()) {
                for (const auto& l : read_row_labels("paths.assign_in", cfg_.paths.assign_in, m.count())) {
                    clusters.push_back(std::stoi(l));
                }
            }
            csv = scatter2d_csv(m, labels, clusters);
            rows = m.count();
        } else {
            const auto j = json::parse(read_file(cfg_.paths.report_in));
            if (kind == PlotKind::confusion) {
                const auto r = purity_from_json(j);
                csv = confusion_csv(r);
                rows = r.domains.size();
            } else {
                const auto r = correlation_from_json(j);
                csv = correlation_csv(r);
                rows = r.pairs.size();
            }
        }
        write_file(cfg_.paths.csv_out, csv);
        return {{"kind", cfg_.plots.kind}, {"rows", rows}, {"csv_out", cfg_.paths.csv_out}};
    }

    std::ostream& out_;
    std::ostream& err_;
    CLI::App app_;
    PipelineConfig flags_;
    PipelineConfig cfg_;
    std::string config_path_;
    std::vector<Binding> bindings_;
    std::set<std::string> known_paths_;
};

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    Runner runner(out, err);
    return runner.run(args);
}

}  // namespace domsel::cli
