#include <benchmark/benchmark.h>

#include "domsel/gmm.hpp"
#include "domsel/ngram.hpp"
#include "domsel/pca.hpp"
#include "domsel/rng.hpp"
#include "domsel/selection.hpp"

namespace {

using namespace domsel;

EmbeddingMatrix random_matrix(std::size_t rows, std::uint32_t dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> data(rows * dim);
    for (auto& v : data) v = static_cast<float>(rng.normal());
    std::vector<SentenceId> ids(rows);
    for (std::size_t i = 0; i < rows; ++i) ids[i] = i;
    return EmbeddingMatrix(dim, std::move(data), std::move(ids));
}

std::vector<std::string> random_sentences(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string s;
        const std::size_t len = 5 + rng.uniform_index(20);
        for (std::size_t t = 0; t < len; ++t) s += "w" + std::to_string(rng.uniform_index(5000)) + " ";
        out.push_back(std::move(s));
    }
    return out;
}

void BM_FitPca(benchmark::State& state) {
    const auto m = random_matrix(static_cast<std::size_t>(state.range(0)), 768, 1);
    for (auto _ : state) benchmark::DoNotOptimize(fit_pca(m, 50));
}
BENCHMARK(BM_FitPca)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FitGmm(benchmark::State& state) {
    const Eigen::MatrixXd x = random_matrix(static_cast<std::size_t>(state.range(0)), 50, 2).to_eigen();
    GmmOptions opts;
    opts.max_iter = 20;
    for (auto _ : state) benchmark::DoNotOptimize(fit_gmm(x, 5, 1, opts));
}
BENCHMARK(BM_FitGmm)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_RankCosine(benchmark::State& state) {
    const auto in = random_matrix(2000, 768, 3);
    const auto pool = random_matrix(static_cast<std::size_t>(state.range(0)), 768, 4);
    for (auto _ : state) benchmark::DoNotOptimize(rank_cosine(in, pool));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RankCosine)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_TrainLm(benchmark::State& state) {
    const auto corpus = random_sentences(static_cast<std::size_t>(state.range(0)), 5);
    for (auto _ : state) benchmark::DoNotOptimize(train_lm(corpus));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainLm)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_CrossEntropy(benchmark::State& state) {
    const auto lm = train_lm(random_sentences(20000, 6));
    const auto pool = random_sentences(1000, 7);
    for (auto _ : state) {
        double acc = 0.0;
        for (const auto& s : pool) acc += cross_entropy(lm, s);
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_CrossEntropy)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
