#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "kgrank/metrics.hpp"

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t words) {
    static const char* vocab[] = {"the", "patient", "should", "take", "dose", "with", "food",
                                  "blood", "pressure", "may", "rise", "doctor", "daily", "risk"};
    std::uniform_int_distribution<std::size_t> pick(0, std::size(vocab) - 1);
    std::string out;
    for (std::size_t i = 0; i < words; ++i) out += std::string(i ? " " : "") + vocab[pick(rng)];
    return out;
}

void BM_RougeL(benchmark::State& state) {
    std::mt19937_64 rng(4);
    const auto words = static_cast<std::size_t>(state.range(0));
    auto a = random_text(rng, words);
    auto b = random_text(rng, words);
    for (auto _ : state) benchmark::DoNotOptimize(kgrank::rouge_l(a, b));
}
BENCHMARK(BM_RougeL)->Arg(30)->Arg(150)->Arg(600);

void BM_Rouge2(benchmark::State& state) {
    std::mt19937_64 rng(5);
    auto a = random_text(rng, 150);
    auto b = random_text(rng, 150);
    for (auto _ : state) benchmark::DoNotOptimize(kgrank::rouge_n(a, b, 2));
}
BENCHMARK(BM_Rouge2);

}  // namespace

BENCHMARK_MAIN();
