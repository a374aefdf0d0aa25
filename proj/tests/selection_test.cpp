#include "domsel/selection.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "domsel/rng.hpp"
#include "test_util.hpp"

namespace domsel {
namespace {

std::vector<SentenceId> iota_ids(std::size_t n, SentenceId first = 0) {
    std::vector<SentenceId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = first + i;
    return ids;
}

SelectionRanking ranking_of(std::size_t n) {
    SelectionRanking r;
    for (std::size_t i = 0; i < n; ++i) r.entries.push_back({100 + i, double(n - i)});
    return r;
}

TEST(SelectionMethod, Parse) {
    EXPECT_EQ(parse_selection_method("moore-lewis"), SelectionMethod::moore_lewis);
    EXPECT_EQ(parse_selection_method("moore_lewis"), SelectionMethod::moore_lewis);
    EXPECT_EQ(parse_selection_method("cosine"), SelectionMethod::cosine);
    EXPECT_FALSE(parse_selection_method("bm25").has_value());
    EXPECT_EQ(to_string(SelectionMethod::classifier), "classifier");
}

TEST(RankCosine, HandScores) {
    const EmbeddingMatrix pool(2, {2, 0, 0, 3, -1, 0}, {0, 1, 2});
    const auto r = rank_cosine_query(Eigen::Vector2d(1, 0), pool);
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r.ids(), (std::vector<SentenceId>{0, 1, 2}));
    EXPECT_DOUBLE_EQ(r.entries[0].score, 1.0);
    EXPECT_DOUBLE_EQ(r.entries[1].score, 0.0);
    EXPECT_DOUBLE_EQ(r.entries[2].score, -1.0);
}

TEST(RankCosine, QueryIsInDomainMeanAndSelfRanksFirst) {
    const EmbeddingMatrix in(3, {1, 2, 0, 3, 0, 2}, {0, 1});
    EXPECT_EQ(domain_query(in), Eigen::Vector3d(2, 1, 1));
    const EmbeddingMatrix pool(3, {0, 0, 1, 2, 1, 1, 0, 0, 0, 1, -1, 0}, {5, 6, 7, 8});
    const auto r = rank_cosine(in, pool);
    EXPECT_EQ(r.entries[0].id, 6u);
    EXPECT_NEAR(r.entries[0].score, 1.0, 1e-12);
    // zero row scores -1
    EXPECT_EQ(r.entries.back().id, 7u);
    EXPECT_EQ(r.entries.back().score, -1.0);
    EXPECT_THROW(rank_cosine_query(Eigen::Vector3d::Zero(), pool), std::invalid_argument);
    EXPECT_THROW(rank_cosine(EmbeddingMatrix(2, {1, 1}, {0}), pool), std::invalid_argument);
}

TEST(RankCosine, InvariantToPositiveRescaling) {
    Rng rng(3);
    std::vector<float> data(40 * 5), scaled;
    for (auto& v : data) v = static_cast<float>(rng.normal());
    scaled = data;
    for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t j = 0; j < 5; ++j) scaled[i * 5 + j] *= static_cast<float>(i % 2 ? 4.0 : 0.5);
    const EmbeddingMatrix pool(5, data, iota_ids(40)), pool2(5, scaled, iota_ids(40));
    Eigen::VectorXd q(5);
    q << 1, -2, 0.5, 0, 3;
    EXPECT_EQ(rank_cosine_query(q, pool).ids(), rank_cosine_query(q, pool2).ids());
    EXPECT_EQ(rank_cosine_query(q, pool).ids(), rank_cosine_query(7.0 * q, pool).ids());
}

TEST(SortRanking, PolarityAndTieBreak) {
    SelectionRanking r;
    r.entries = {{5, 1.0}, {2, 3.0}, {9, 1.0}, {1, 3.0}};
    sort_ranking(r);
    EXPECT_EQ(r.ids(), (std::vector<SentenceId>{1, 2, 5, 9}));
    r.method = SelectionMethod::moore_lewis;
    sort_ranking(r);
    EXPECT_EQ(r.ids(), (std::vector<SentenceId>{5, 9, 1, 2}));
}

TEST(SampleNegatives, ExhaustiveBottomTwoThirds) {
    const auto r = ranking_of(9);
    const auto all = sample_negatives_preranked(r, 6, 1);
    EXPECT_EQ(all, (std::vector<SentenceId>{103, 104, 105, 106, 107, 108}));
    EXPECT_THROW(sample_negatives_preranked(r, 7, 1), std::invalid_argument);
}

TEST(SampleNegatives, NeverTouchTopThirdAndDeterministic) {
    for (std::size_t n : {1u, 2u, 10u, 11u, 100u}) {
        const auto r = ranking_of(n);
        const std::size_t cut = (n + 2) / 3;
        const auto ids = r.ids();
        const std::set<SentenceId> top(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(cut));
        const std::size_t m = 2 * n / 3;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto s = sample_negatives_preranked(r, m, seed);
            EXPECT_EQ(s.size(), m);
            EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
            for (auto id : s) EXPECT_FALSE(top.count(id));
            EXPECT_EQ(s, sample_negatives_preranked(r, m, seed));
        }
    }
}

TEST(SampleNegatives, Uniform) {
    const auto ids = iota_ids(50, 1000);
    const auto a = sample_negatives_uniform(ids, 20, 4);
    EXPECT_EQ(a, sample_negatives_uniform(ids, 20, 4));
    EXPECT_EQ(std::set<SentenceId>(a.begin(), a.end()).size(), 20u);
    EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
    EXPECT_THROW(sample_negatives_uniform(ids, 51, 4), std::invalid_argument);
}

TEST(Classifier, SeparableToyCase) {
    // positives near +e1, negatives near -e1, margin 2
    const EmbeddingMatrix pos(3, {1, 0.1f, 0, 1, -0.2f, 0.3f, 1.2f, 0, -0.1f}, {0, 1, 2});
    const EmbeddingMatrix neg(3, {-1, 0.2f, 0.1f, -1, 0, -0.3f, -0.9f, -0.1f, 0}, {3, 4, 5});
    const auto c = train_pu_classifier(pos, neg);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_GT(c.score(pos.row(i)), 0.0);
        EXPECT_LT(c.score(neg.row(i)), 0.0);
    }
    EXPECT_EQ(c.loss_trace.size(), 21u);
    EXPECT_LT(c.loss_trace.back(), c.loss_trace.front());
    EXPECT_EQ(c.positive_ids, pos.ids());
    EXPECT_EQ(c.negative_ids, neg.ids());

    const EmbeddingMatrix pool(3, {2, 0, 0, -2, 0, 0, 0.5f, 0, 0, -0.7f, 1, 1}, {10, 11, 12, 13});
    EXPECT_EQ(select_positive(c, pool), (std::vector<SentenceId>{10, 12}));
    const EmbeddingMatrix all_neg(3, {-2, 0, 0, -3, 1, 0}, {20, 21});
    EXPECT_TRUE(select_positive(c, all_neg).empty());
}

TEST(Classifier, GradientVanishesAtOptimum) {
    const EmbeddingMatrix pos(1, {1}, {0});
    const EmbeddingMatrix neg(1, {-1}, {1});
    ClassifierOptions opts;
    opts.epochs = 50000;
    opts.learning_rate = 1.0;
    const auto c = train_pu_classifier(pos, neg, opts);

    Eigen::MatrixXd z(2, 1);
    z << (1.0 - c.feature_mean(0)) / c.feature_scale(0), (-1.0 - c.feature_mean(0)) / c.feature_scale(0);
    const Eigen::VectorXd y = Eigen::Vector2d(1, 0);
    Eigen::VectorXd w = c.standardized_weights();
    const double b = c.standardized_bias();
    const double h = 1e-5;
    Eigen::VectorXd wp = w, wm = w;
    wp(0) += h;
    wm(0) -= h;
    const double gw = (pu_objective(z, y, wp, b, opts.l2) - pu_objective(z, y, wm, b, opts.l2)) / (2 * h);
    const double gb = (pu_objective(z, y, w, b + h, opts.l2) - pu_objective(z, y, w, b - h, opts.l2)) / (2 * h);
    EXPECT_LT(std::abs(gw), 1e-6);
    EXPECT_LT(std::abs(gb), 1e-6);
    EXPECT_NEAR(c.loss_trace.back(), pu_objective(z, y, w, b, opts.l2), 1e-12);
}

TEST(Classifier, StandardizationIsFoldedIntoRawWeights) {
    Rng rng(6);
    std::vector<float> p(20 * 4), n(20 * 4);
    for (auto& v : p) v = static_cast<float>(3.0 + 2.0 * rng.normal());
    for (auto& v : n) v = static_cast<float>(-1.0 + 0.5 * rng.normal());
    const EmbeddingMatrix pos(4, p, iota_ids(20)), neg(4, n, iota_ids(20, 20));
    const auto c = train_pu_classifier(pos, neg);
    for (std::size_t i = 0; i < 20; ++i) {
        double standardized = c.standardized_bias();
        double raw = c.bias;
        for (int j = 0; j < 4; ++j) {
            standardized += c.standardized_weights()(j) * (pos.row(i)[j] - c.feature_mean(j)) / c.feature_scale(j);
            raw += c.weights(j) * pos.row(i)[j];
        }
        EXPECT_NEAR(c.score(pos.row(i)), standardized, 1e-9);
        EXPECT_NEAR(c.score(pos.row(i)), raw, 1e-12);
    }
}

TEST(RankClassifier, HandDotProducts) {
    ClassifierModel c;
    c.weights = Eigen::Vector2d(2.0, -1.0);
    c.bias = 0.5;
    c.feature_mean = Eigen::Vector2d::Zero();
    c.feature_scale = Eigen::Vector2d::Ones();
    const EmbeddingMatrix pool(2, {1, 1, 0, 2, 3, 0, -1, -1}, {0, 1, 2, 3});
    // w.x + b: 1.5, -1.5, 6.5, -0.5
    const auto r = rank_classifier(c, pool);
    EXPECT_EQ(r.ids(), (std::vector<SentenceId>{2, 0, 3, 1}));
    EXPECT_DOUBLE_EQ(r.entries[0].score, 6.5);
    EXPECT_DOUBLE_EQ(r.entries[1].score, 1.5);
    EXPECT_DOUBLE_EQ(r.entries[2].score, -0.5);
    EXPECT_DOUBLE_EQ(r.entries[3].score, -1.5);
    EXPECT_EQ(select_positive(c, pool), (std::vector<SentenceId>{0, 2}));
    EXPECT_THROW(rank_classifier(c, EmbeddingMatrix(3, {1, 1, 1}, {0})), std::invalid_argument);
}

TEST(RankMooreLewis, IdenticalModelsGiveIdOrder) {
    const std::vector<std::string> texts = {"alpha beta", "beta gamma", "gamma alpha"};
    const auto lm = train_lm(texts, 2, 1);
    std::vector<SentenceRecord> pool = {{7, "beta", {}}, {3, "alpha gamma", {}}, {5, "delta", {}}};
    const auto r = rank_moore_lewis(lm, lm, pool);
    EXPECT_EQ(r.ids(), (std::vector<SentenceId>{3, 5, 7}));
    for (const auto& e : r.entries) EXPECT_EQ(e.score, 0.0);
}

TEST(RankMooreLewis, PlantedDisjointVocabulary) {
    Rng rng(8);
    auto sentence = [&](const std::string& prefix, std::size_t vocab) {
        std::string s;
        const std::size_t len = 3 + rng.uniform_index(6);
        for (std::size_t t = 0; t < len; ++t) s += prefix + std::to_string(rng.uniform_index(vocab)) + " ";
        return s;
    };
    std::vector<std::string> seed;
    for (int i = 0; i < 50; ++i) seed.push_back(sentence("med", 30));
    std::vector<SentenceRecord> pool;
    for (SentenceId i = 0; i < 500; ++i) pool.push_back({i, i % 10 == 0 ? sentence("med", 30) : sentence("gen", 200), {}});
    const auto lm_in = train_lm(seed, 3, 1);
    const auto lm_gen = train_general_lm(pool, 3, 1, 0.75, 500, 2);
    const auto top = select_top_k(rank_moore_lewis(lm_in, lm_gen, pool), 50);
    for (auto id : top) EXPECT_EQ(id % 10, 0u);
}

TEST(TrainGeneralLm, SamplesWhenLarge) {
    std::vector<SentenceRecord> pool;
    for (SentenceId i = 0; i < 100; ++i) pool.push_back({i, "w" + std::to_string(i), {}});
    const auto full = train_general_lm(pool, 1, 1, 0.75, 1000, 0);
    EXPECT_EQ(full.vocab().size(), 103u);
    const auto sampled = train_general_lm(pool, 1, 1, 0.75, 10, 0);
    EXPECT_EQ(sampled.vocab().size(), 13u);
    EXPECT_EQ(sampled, train_general_lm(pool, 1, 1, 0.75, 10, 0));
}

TEST(RankRandom, PermutationDeterministicUniform) {
    const auto ids = iota_ids(20, 50);
    const auto r = rank_random(ids, 9);
    auto sorted = r.ids();
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, ids);
    EXPECT_EQ(r.ids(), rank_random(ids, 9).ids());
    for (std::size_t i = 0; i + 1 < r.size(); ++i) EXPECT_GT(r.entries[i].score, r.entries[i + 1].score);

    const std::vector<SentenceId> three = {0, 1, 2};
    std::array<int, 3> first{};
    for (std::uint64_t seed = 0; seed < 10000; ++seed) ++first[rank_random(three, seed).entries[0].id];
    for (int f : first) EXPECT_NEAR(f / 10000.0, 1.0 / 3.0, 0.02);
}

TEST(SelectTopK, Bounds) {
    const auto r = ranking_of(5);
    EXPECT_TRUE(select_top_k(r, 0).empty());
    EXPECT_EQ(select_top_k(r, 2), (std::vector<SentenceId>{100, 101}));
    EXPECT_EQ(select_top_k(r, 99), r.ids());
}

TEST(RankingFiles, RoundTrip) {
    testing::TempDir dir;
    SelectionRanking r;
    r.method = SelectionMethod::moore_lewis;
    r.entries = {{4, -1.25}, {2, 0.1}, {9, 3.0000000000000004}};
    write_ranking(r, dir / "r.tsv");
    const auto back = read_ranking(dir / "r.tsv");
    EXPECT_EQ(back.method, r.method);
    EXPECT_EQ(back.entries, r.entries);
    EXPECT_EQ(read_lines(dir / "r.tsv")[0], "rank\tid\tscore\tmethod");

    const std::vector<SentenceId> sel = {3, 1, 4};
    write_selection(sel, dir / "s.txt");
    EXPECT_EQ(read_selection(dir / "s.txt"), sel);
    EXPECT_EQ(read_file(dir / "s.txt"), "3\n1\n4\n");
}

}  // namespace
}  // namespace domsel
