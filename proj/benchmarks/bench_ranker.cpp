#include <benchmark/benchmark.h>

#include <random>

#include "kgrank/ranker.hpp"

namespace {

using kgrank::Candidate;
using kgrank::ConceptRef;
using kgrank::KgSource;
using kgrank::Triple;
using kgrank::Vector;

Vector random_vector(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> normal;
    std::vector<double> v(dim);
    for (auto& x : v) x = normal(rng);
    return Vector(std::move(v));
}

std::vector<Candidate> candidates(std::size_t n, std::size_t dim) {
    std::mt19937_64 rng(1);
    std::vector<Candidate> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto s = std::to_string(i);
        Triple t(ConceptRef("H" + s, "head " + s, KgSource::umls), "rel",
                 ConceptRef("T" + s, "tail " + s, KgSource::umls));
        out.push_back(Candidate{std::move(t), random_vector(rng, dim)});
    }
    return out;
}

void BM_RankSimilarity(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto cands = candidates(n, 768);
    std::mt19937_64 rng(2);
    auto q = random_vector(rng, 768);
    for (auto _ : state) benchmark::DoNotOptimize(kgrank::rank_similarity(q, cands));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_RankSimilarity)->Arg(100)->Arg(1000);

void BM_RankMmr(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto k = static_cast<std::size_t>(state.range(1));
    auto cands = candidates(n, 768);
    std::mt19937_64 rng(3);
    auto q = random_vector(rng, 768);
    for (auto _ : state) benchmark::DoNotOptimize(kgrank::rank_mmr(q, cands, kgrank::MmrParams{0.1, 0.01, k}));
}
BENCHMARK(BM_RankMmr)->Args({100, 60})->Args({1000, 60})->Args({1000, 1000});

}  // namespace
