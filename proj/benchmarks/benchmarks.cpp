#include <random>

#include <benchmark/benchmark.h>

#include "causalrec/dagness.hpp"
#include "causalrec/score.hpp"
#include "causalrec/simulator.hpp"

using namespace causalrec;

static void BM_DagPenalty(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d * d; ++i) g(i / d, i % d) = n01(rng) - 3.0;
  for (auto _ : state) benchmark::DoNotOptimize(dag_penalty(g).value);
}
BENCHMARK(BM_DagPenalty)->Arg(10)->Arg(50)->Arg(100);

static void BM_BatchScore(benchmark::State& state) {
  SimConfig sc;
  sc.d = static_cast<int>(state.range(0));
  sc.n_users = 64;
  sc.seed = 2;
  const auto truth = make_ground_truth(sc);
  const auto examples = make_examples(generate(sc, truth, make_recommender(sc)), 5);
  const std::vector<TransitionExample> batch(examples.begin(), examples.begin() + 256);
  CausalModel model(ModelShape{sc.d});
  model.initialize(3);
  ScoreOptions opts;
  opts.negatives = static_cast<int>(state.range(1));
  GradientTape tape;
  std::uint64_t key = 0;
  for (auto _ : state) {
    model.params().zero_grad();
    benchmark::DoNotOptimize(batch_score(model, batch, ++key, opts, tape, 1.0).value);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_BatchScore)->Args({10, 10})->Args({50, 10})->Args({50, -1});

BENCHMARK_MAIN();
