#include "cbid/classify.hpp"
#include "cbid/hamming.hpp"
#include "cbid/hashfn.hpp"
#include "cbid/synthetic.hpp"
#include "cbid/trainer.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace cbid;

namespace {

BinaryCode random_code(std::mt19937_64& rng, std::size_t bits) {
    BinaryCode c(bits);
    for (std::size_t s = 0; s < bits; ++s) c.set(s, (rng() & 1U) ? +1 : -1);
    return c;
}

WeightedMetric random_metric(std::mt19937_64& rng, std::size_t bits) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> w(bits);
    for (auto& v : w) v = unit(rng);
    return WeightedMetric(std::move(w));
}

std::vector<BinaryCode> random_codes(std::mt19937_64& rng, std::size_t bits, std::size_t n) {
    std::vector<BinaryCode> codes;
    codes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) codes.push_back(random_code(rng, bits));
    return codes;
}

void BM_HammingNaive(benchmark::State& state) {
    const auto bits = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    const auto metric = random_metric(rng, bits);
    const auto codes = random_codes(rng, bits, 1024);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(weighted_hamming(metric, codes[i & 1023], codes[(i + 1) & 1023]));
        ++i;
    }
}
BENCHMARK(BM_HammingNaive)->Arg(8)->Arg(32)->Arg(64)->Arg(256);

void BM_HammingTable(benchmark::State& state) {
    const auto bits = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    const auto metric = build_tables(random_metric(rng, bits));
    const auto codes = random_codes(rng, bits, 1024);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(weighted_hamming_lookup(metric, codes[i & 1023], codes[(i + 1) & 1023]));
        ++i;
    }
}
BENCHMARK(BM_HammingTable)->Arg(8)->Arg(32)->Arg(64)->Arg(256);

// Full scan of a database of range(0) codes with 64 bits.
void BM_TopK(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(2);
    const auto metric = build_tables(random_metric(rng, 64));
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = 1 + static_cast<int>(i % 4);
    const auto db = make_database(64, random_codes(rng, 64, n), labels);
    const auto query = random_code(rng, 64);
    for (auto _ : state) benchmark::DoNotOptimize(top_k(db, metric, query, 10));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_TopK)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_Encode(benchmark::State& state) {
    const auto bits = static_cast<std::size_t>(state.range(0));
    const std::size_t dim = 128;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    CodeBook cb(dim);
    for (std::size_t s = 0; s < bits; ++s) {
        std::vector<double> beta(dim);
        for (auto& v : beta) v = normal(rng);
        cb.append(HashFunction(std::move(beta), normal(rng)));
    }
    Matrix xs(256, dim);
    for (std::size_t i = 0; i < xs.rows(); ++i)
        for (auto& v : xs.row(i)) v = normal(rng);
    for (auto _ : state) benchmark::DoNotOptimize(encode(cb, xs));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(xs.rows()));
}
BENCHMARK(BM_Encode)->Arg(32)->Arg(256);

void BM_TrainSpiral(benchmark::State& state) {
    synthetic::SpiralOptions so;
    so.per_class = 200;
    const auto ds = synthetic::spiral(so, 1);
    const auto triplets = mine_triplets_image(ds);
    TrainConfig cfg;
    cfg.bits = 8;
    cfg.seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(train(ds, triplets, cfg));
}
BENCHMARK(BM_TrainSpiral)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
