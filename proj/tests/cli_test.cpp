#include "cli.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "domsel/embedding.hpp"
#include "domsel/rng.hpp"
#include "domsel/selection.hpp"
#include "test_util.hpp"

// after Eigen: resolv.h, pulled in by httplib, defines a macro named _res
#include <httplib.h>

namespace domsel {
namespace {

using nlohmann::json;

struct Result {
    int code = 0;
    std::string out;
    std::string err;
    json parsed() const { return json::parse(out); }
};

Result run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// Three well-separated 4-d blobs with matching labels and texts.
struct Fixture {
    testing::TempDir dir;
    std::string emb, labels, texts;

    Fixture() {
        Rng rng(1);
        std::vector<float> data;
        std::vector<SentenceId> ids;
        std::vector<std::string> lab, txt;
        const char* names[] = {"it", "law", "medical"};
        for (int i = 0; i < 60; ++i) {
            const int c = i % 3;
            for (int j = 0; j < 4; ++j) data.push_back(static_cast<float>((j == c ? 12.0 : 0.0) + rng.normal()));
            ids.push_back(static_cast<SentenceId>(i));
            lab.push_back(names[c]);
            txt.push_back(std::string(names[c]) + " sentence " + std::to_string(i));
        }
        emb = (dir / "x.emb").string();
        write_embeddings(EmbeddingMatrix(4, data, ids), emb);
        labels = (dir / "x.labels").string();
        write_lines(labels, lab);
        texts = (dir / "x.txt").string();
        write_lines(texts, txt);
    }
};

TEST(Cli, NoArgumentsIsUsageError) {
    const auto r = run_cli({});
    EXPECT_EQ(r.code, cli::kExitValidation);
    EXPECT_NE(r.err.find("ingest"), std::string::npos);
}

TEST(Cli, UnknownFlagAndMissingFile) {
    EXPECT_EQ(run_cli({"pca", "--bogus"}).code, cli::kExitValidation);
    const auto r = run_cli({"pca", "--emb-in", "/nonexistent/x.emb", "--emb-out", "/tmp/y.emb", "--n", "2"});
    EXPECT_EQ(r.code, cli::kExitValidation);
    EXPECT_NE(r.err.find("paths.emb_in"), std::string::npos);
}

TEST(Cli, ConfigUnknownFieldAndWrongType) {
    testing::TempDir dir;
    dir.write("bad.json", R"({"clustering": {"kk": 3}})");
    auto r = run_cli({"cluster", "--config", (dir / "bad.json").string()});
    EXPECT_EQ(r.code, cli::kExitValidation);
    EXPECT_NE(r.err.find("clustering.kk"), std::string::npos);

    dir.write("type.json", R"({"clustering": {"max_iter": "many"}})");
    r = run_cli({"cluster", "--config", (dir / "type.json").string()});
    EXPECT_EQ(r.code, cli::kExitValidation);
    EXPECT_NE(r.err.find("clustering.max_iter"), std::string::npos);
}

TEST(Cli, FlagsOverrideConfig) {
    Fixture f;
    const auto cfg = f.dir.write("c.json", json{{"paths", {{"emb_in", f.emb}, {"emb_out", (f.dir / "p.emb").string()}}},
                                                {"clustering", {{"pca", 3}}}}
                                               .dump());
    auto r = run_cli({"pca", "--config", cfg.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.parsed()["n_components"], 3);
    EXPECT_EQ(read_embeddings(f.dir / "p.emb").dim(), 3u);

    r = run_cli({"pca", "--config", cfg.string(), "--n", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.parsed()["n_components"], 2);
    EXPECT_EQ(read_embeddings(f.dir / "p.emb").dim(), 2u);
}

TEST(Cli, ValidationBeforeWork) {
    Fixture f;
    auto r = run_cli({"pca", "--emb-in", f.emb, "--emb-out", (f.dir / "p.emb").string(), "--n", "9"});
    EXPECT_EQ(r.code, cli::kExitValidation);
    EXPECT_NE(r.err.find("clustering.pca"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(f.dir / "p.emb"));

    r = run_cli({"select", "--method", "bm25", "--selection-out", (f.dir / "s.txt").string()});
    EXPECT_EQ(r.code, cli::kExitValidation);
    EXPECT_NE(r.err.find("selection.method"), std::string::npos);
}

TEST(Cli, RuntimeErrorExitCode) {
    Fixture f;
    f.dir.write("corrupt.emb", "EMBX0000");
    f.dir.write("corrupt.emb.ids", "");
    const auto r = run_cli({"cluster", "--emb-in", (f.dir / "corrupt.emb").string(), "--k", "2", "--pca", "0"});
    EXPECT_EQ(r.code, cli::kExitRuntime);
}

TEST(Cli, IngestAndAudit) {
    testing::TempDir dir;
    dir.write("med.src", "a\nb\na\nc\n");
    dir.write("med.tgt", "A\nB\nX\nC\n");
    dir.write("law.src", "p\nq\nr\ns\nt\n");
    dir.write("law.tgt", "P\nQ\nR\nS\nT\n");
    dir.write("m.json", R"({"domains": [{"name": "medical", "src": "med.src", "tgt": "med.tgt"},
                                        {"name": "law", "src": "law.src", "tgt": "law.tgt"}]})");
    auto r = run_cli({"ingest", "--manifest", (dir / "m.json").string(), "--cap-domain", "law", "--cap", "2",
                      "--out-dir", (dir / "out").string(), "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = r.parsed();
    EXPECT_EQ(j["pool_size"], 5);
    EXPECT_EQ(j["domains"][0]["removed_by_dedup"], 1);
    EXPECT_EQ(j["domains"][1]["final"], 2);
    EXPECT_EQ(read_lines(dir / "out" / "pool.labels"),
              (std::vector<std::string>{"medical", "medical", "medical", "law", "law"}));
    EXPECT_EQ(read_lines(dir / "out" / "pool.tgt").size(), 5u);

    r = run_cli({"ingest", "--manifest", (dir / "m.json").string(), "--cap-domain", "koran", "--cap", "2",
                 "--out-dir", (dir / "out").string()});
    EXPECT_EQ(r.code, cli::kExitValidation);

    dir.write("dev.src", "a\nzz\n");
    dir.write("dev.json", R"({"domains": [{"name": "medical", "src": "dev.src", "tgt": null},
                                          {"name": "law", "src": "dev.src", "tgt": null}]})");
    r = run_cli({"audit-split", "--train", (dir / "m.json").string(), "--dev", (dir / "dev.json").string(), "--test",
                 (dir / "dev.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.parsed()["medical"]["dev_in_train"], 1);
    EXPECT_EQ(r.parsed()["law"]["dev_in_train"], 0);
}

TEST(Cli, EmbedAgainstLocalProvider) {
    httplib::Server server;
    server.Post("/v1/embed", [](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        json out = {{"dim", 2}, {"vectors", json::array()}};
        for (const auto& t : body["texts"]) out["vectors"].push_back({double(t.get<std::string>().size()), 1.0});
        res.set_content(out.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    testing::TempDir dir;
    dir.write("in.txt", "one\nthree\nfive5\n");
    const auto r = run_cli({"embed", "--input", (dir / "in.txt").string(), "--emb-out", (dir / "e.emb").string(),
                            "--provider-url", "http://127.0.0.1:" + std::to_string(port), "--batch-size", "2"});
    server.stop();
    t.join();
    ASSERT_EQ(r.code, 0) << r.err;
    const auto m = read_embeddings(dir / "e.emb");
    ASSERT_EQ(m.count(), 3u);
    EXPECT_EQ(m.row(1)[0], 5.0f);
    EXPECT_EQ(m.ids(), (std::vector<SentenceId>{0, 1, 2}));
}

TEST(Cli, EmbedProviderUnavailable) {
    httplib::Server server;
    server.Post("/v1/embed", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    testing::TempDir dir;
    dir.write("in.txt", "one\n");
    const auto r = run_cli({"embed", "--input", (dir / "in.txt").string(), "--emb-out", (dir / "e.emb").string(),
                            "--provider-url", "http://127.0.0.1:" + std::to_string(port)});
    server.stop();
    t.join();
    EXPECT_EQ(r.code, cli::kExitRuntime);
    EXPECT_NE(r.err.find("503"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(dir / "e.emb"));
}

TEST(Cli, ClusterPurityAndPlots) {
    Fixture f;
    auto r = run_cli({"cluster", "--emb-in", f.emb, "--k", "3", "--pca", "0", "--seed", "2", "--model-out",
                      (f.dir / "g.gmm").string(), "--assign-out", (f.dir / "a.txt").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.parsed()["cluster_sizes"], json({20, 20, 20}));
    EXPECT_EQ(read_lines(f.dir / "a.txt").size(), 60u);

    r = run_cli({"purity", "--emb-in", f.emb, "--labels", f.labels, "--texts", f.texts, "--k", "3,2", "--seeds", "1,2,3",
                 "--pca", "2", "--report-out", (f.dir / "rep.json").string(), "--confusion-csv",
                 (f.dir / "conf.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = r.parsed();
    ASSERT_EQ(j["sweeps"].size(), 2u);
    EXPECT_EQ(j["sweeps"][0]["mean"], 1.0);
    EXPECT_EQ(j["sweeps"][0]["variance"], 0.0);
    EXPECT_TRUE(j["outliers"]["outliers"].empty());
    EXPECT_EQ(read_file(f.dir / "conf.csv").substr(0, 29), "true_domain,it,law,medical\nit");

    r = run_cli({"emit-plots", "--kind", "confusion", "--report-in", (f.dir / "rep.json").string(), "--csv-out",
                 (f.dir / "c2.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_file(f.dir / "c2.csv"), read_file(f.dir / "conf.csv"));

    r = run_cli({"pca", "--emb-in", f.emb, "--emb-out", (f.dir / "p2.emb").string(), "--n", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    r = run_cli({"emit-plots", "--kind", "scatter2d", "--emb-in", (f.dir / "p2.emb").string(), "--labels", f.labels,
                 "--assign-in", (f.dir / "a.txt").string(), "--csv-out", (f.dir / "s.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto lines = read_lines(f.dir / "s.csv");
    EXPECT_EQ(lines.size(), 61u);
    EXPECT_EQ(lines[0], "id,x,y,domain,cluster");

    r = run_cli({"emit-plots", "--kind", "scatter2d", "--emb-in", f.emb, "--labels", f.labels, "--csv-out",
                 (f.dir / "bad.csv").string()});
    EXPECT_EQ(r.code, cli::kExitValidation);
}

TEST(Cli, SelectMethodsAndEvaluate) {
    Fixture f;
    // seed set: the first six "law" rows; pool: everything
    const auto all = read_embeddings(f.emb);
    std::vector<SentenceId> seed_ids = {1, 4, 7, 10, 13, 16};
    write_embeddings(all.select_ids(seed_ids), f.dir / "in.emb");
    const std::string sel = (f.dir / "sel.txt").string();

    auto r = run_cli({"select", "--method", "cosine", "--in-emb", (f.dir / "in.emb").string(), "--pool-emb", f.emb,
                      "--top-k", "20", "--selection-out", sel, "--ranking-out", (f.dir / "rank.tsv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_ranking(f.dir / "rank.tsv").size(), 60u);
    r = run_cli({"eval-selection", "--selection", sel, "--pool-labels", f.labels, "--target", "law"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = r.parsed();
    EXPECT_EQ(j["law"]["precision"], 1.0);
    EXPECT_EQ(j["law"]["recall"], 1.0);

    r = run_cli({"select", "--method", "classifier", "--in-emb", (f.dir / "in.emb").string(), "--pool-emb", f.emb,
                 "--positive-only", "--epochs", "200", "--selection-out", sel});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.parsed()["negatives"], 6);
    r = run_cli({"eval-selection", "--selection", sel, "--pool-labels", f.labels});
    ASSERT_EQ(r.code, 0) << r.err;
    j = r.parsed();
    EXPECT_EQ(j["law"]["recall"], 1.0);
    EXPECT_EQ(j["it"]["true_positives"], 0);

    write_lines(f.dir / "in.txt", {"law sentence 100", "law sentence 101", "law law sentence"});
    r = run_cli({"select", "--method", "moore-lewis", "--in-text", (f.dir / "in.txt").string(), "--pool-text", f.texts,
                 "--lm-min-count", "1", "--lm-order", "2", "--top-k", "20", "--selection-out", sel});
    ASSERT_EQ(r.code, 0) << r.err;
    r = run_cli({"eval-selection", "--selection", sel, "--pool-labels", f.labels, "--target", "law"});
    EXPECT_EQ(r.parsed()["law"]["recall"], 1.0);

    r = run_cli({"select", "--method", "random", "--pool-emb", f.emb, "--top-k", "5", "--seed", "4", "--selection-out", sel});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto first = read_file(sel);
    EXPECT_EQ(read_lines(sel).size(), 5u);
    run_cli({"select", "--method", "random", "--pool-emb", f.emb, "--top-k", "5", "--seed", "4", "--selection-out", sel});
    EXPECT_EQ(read_file(sel), first);

    r = run_cli({"eval-selection", "--selection", sel, "--pool-labels", f.labels, "--target", "koran"});
    EXPECT_EQ(r.code, cli::kExitValidation);
}

TEST(Cli, CorrelateWithFixture) {
    testing::TempDir dir;
    // one 3-d centroid per domain of the shipped BLEU table
    const std::vector<std::string> names = {"it", "koran", "law", "medical", "subtitles"};
    std::vector<float> data;
    std::vector<SentenceId> ids;
    std::vector<std::string> labels;
    Rng rng(5);
    for (std::size_t i = 0; i < 10; ++i) {
        for (int j = 0; j < 3; ++j) data.push_back(static_cast<float>(1.0 + rng.uniform01()));
        ids.push_back(i);
        labels.push_back(names[i % 5]);
    }
    write_embeddings(EmbeddingMatrix(3, data, ids), dir / "c.emb");
    write_lines(dir / "c.labels", labels);
    auto r = run_cli({"correlate", "--emb-in", (dir / "c.emb").string(), "--labels", (dir / "c.labels").string(),
                      "--bleu-fixture", DOMSEL_BLEU_FIXTURE, "--csv-out", (dir / "corr.csv").string(), "--out",
                      (dir / "corr.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(read_file(dir / "corr.json"));
    ASSERT_EQ(j["pairs"].size(), 25u);
    EXPECT_EQ(read_lines(dir / "corr.csv").size(), 26u);
    for (const auto& p : j["pairs"]) {
        if (p["model_domain"] == "medical" && p["test_domain"] == "law") {
            EXPECT_EQ(p["bleu"], 18.3);
        }
    }

    r = run_cli({"emit-plots", "--kind", "correlation", "--report-in", (dir / "corr.json").string(), "--csv-out",
                 (dir / "corr2.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_file(dir / "corr2.csv"), read_file(dir / "corr.csv"));
}

TEST(Cli, IdenticalRunsGiveIdenticalArtifacts) {
    Fixture f;
    std::string outputs[2];
    for (int i = 0; i < 2; ++i) {
        const auto r = run_cli({"cluster", "--emb-in", f.emb, "--k", "3", "--pca", "2", "--seed", "8", "--model-out",
                                (f.dir / ("g" + std::to_string(i))).string()});
        ASSERT_EQ(r.code, 0) << r.err;
        outputs[i] = r.out;
    }
    EXPECT_EQ(outputs[0], outputs[1]);
    EXPECT_EQ(read_file(f.dir / "g0"), read_file(f.dir / "g1"));
}

}  // namespace
}  // namespace domsel
