#include "gekln/data_ingest.hpp"
#include "gekln/graph_store.hpp"
#include "gekln/metrics.hpp"
#include "gekln/model.hpp"
#include "gekln/synthetic.hpp"
#include "gekln/training.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace gekln;

const Dataset& bench_dataset() {
  static const Dataset ds = [] {
    SyntheticSpec spec;
    spec.students = 1000;
    spec.exercises = 2000;
    spec.concepts = 60;
    spec.logs_per_student = 60;
    return build_dataset(synthetic_records(spec));
  }();
  return ds;
}

void BM_BuildGraph(benchmark::State& state) {
  const Dataset& ds = bench_dataset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_graph(ds.logs, ds.num_students, ds.num_exercises));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.logs.size()));
}
BENCHMARK(BM_BuildGraph)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  const Dataset& ds = bench_dataset();
  const auto graph = build_graph(ds.logs, ds.num_students, ds.num_exercises);
  ModelConfig cfg;
  cfg.dim = static_cast<std::size_t>(state.range(0));
  const GeklnModel model(cfg, ds.num_students, ds.num_exercises, ds.num_concepts, 1);
  const auto pairs = pairs_of(ds.logs);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict_batch(graph, ds.q_matrix, pairs));
  }
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const Dataset& ds = bench_dataset();
  const auto graph = build_graph(ds.logs, ds.num_students, ds.num_exercises);
  ModelConfig cfg;
  cfg.dim = static_cast<std::size_t>(state.range(0));
  GeklnModel model(cfg, ds.num_students, ds.num_exercises, ds.num_concepts, 1);
  const auto pairs = pairs_of(ds.logs);
  const auto labels = labels_of(ds.logs);
  for (auto _ : state) {
    ad::Tape tape;
    tape.backward(ad::mean_squared_error(model.forward(tape, graph, ds.q_matrix, pairs), labels));
    model.params().zero_grad();
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Auc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> preds(n), labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    preds[i] = unit(rng);
    labels[i] = unit(rng) < 0.6 ? 1.0 : 0.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(auc(preds, labels));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Auc)->RangeMultiplier(10)->Range(1000, 1000000)->Complexity(benchmark::oNLogN);

}  // namespace
BENCHMARK_MAIN();
