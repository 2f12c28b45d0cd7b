#include <benchmark/benchmark.h>

#include <random>

#include "f2f/embedding.hpp"
#include "f2f/episodic.hpp"
#include "f2f/synthetic.hpp"
#include "f2f/trainer.hpp"
#include "f2f/triplet.hpp"

using namespace f2f;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = normal(gen);
    return m;
}

EmbeddingSet random_set(std::size_t subjects, std::size_t images, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<float> normal;
    EmbeddingSet set(dim);
    for (std::size_t s = 0; s < subjects; ++s) {
        for (std::size_t i = 0; i < images; ++i) {
            std::vector<float> v(dim);
            for (auto& x : v) x = normal(gen);
            set.add(SubjectId("s" + std::to_string(s)), "i" + std::to_string(i), std::move(v));
        }
    }
    return set;
}

void BM_Distance(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const auto m = random_matrix(2, dim, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(distance<double>(DistanceKind::euclidean, m.row(0), m.row(1)));
    }
}
BENCHMARK(BM_Distance)->Arg(16)->Arg(128)->Arg(2048);

void BM_PairwiseDistances(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_matrix(n, 128, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(pairwise_distances(DistanceKind::euclidean, a, a));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n));
}
BENCHMARK(BM_PairwiseDistances)->Arg(32)->Arg(128);

void BM_MineHardTriplets(benchmark::State& state) {
    const auto b = static_cast<std::size_t>(state.range(0));
    TripletBatch batch{random_matrix(b, 128, 3), random_matrix(b, 128, 4), {}};
    for (std::size_t i = 0; i < b; ++i) batch.ids.emplace_back("id" + std::to_string(i));
    const LossConfig cfg;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(mine_hard_triplets(batch, cfg, seed++));
    }
}
BENCHMARK(BM_MineHardTriplets)->Arg(16)->Arg(32)->Arg(128);

void BM_EvaluateEpisodes(benchmark::State& state) {
    const auto set = random_set(200, 3, 16, 5);
    EpisodeSpec spec;
    spec.n_way = static_cast<std::size_t>(state.range(0));
    spec.episodes = 100;
    for (auto _ : state) {
        benchmark::DoNotOptimize(evaluate(set, spec));
    }
}
BENCHMARK(BM_EvaluateEpisodes)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_TrainSteps(benchmark::State& state) {
    SyntheticSpec spec;
    spec.n_subjects = 50;
    const auto inputs = generate_synthetic(spec).train;
    const EncoderArchitecture arch{{32, static_cast<std::size_t>(state.range(0)), 16}, Activation::relu};
    const auto model = EncoderModel::initialize(arch, 0);
    TrainConfig cfg;
    cfg.steps = 100;
    for (auto _ : state) {
        benchmark::DoNotOptimize(train(model, inputs, cfg));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * cfg.steps));
}
BENCHMARK(BM_TrainSteps)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
