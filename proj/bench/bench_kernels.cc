// SPDX-License-Identifier: Apache-2.0
//
// Parallel kernels against their serial references. Thread count follows
// OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "topoledger/augment.h"
#include "topoledger/coa_graph.h"
#include "topoledger/embed.h"
#include "topoledger/experiment.h"
#include "topoledger/mapper.h"
#include "topoledger/synth.h"

namespace topoledger {
namespace {

SynthConfig bench_config(std::size_t n) {
  SynthConfig cfg;
  cfg.n_vertices = n;
  cfg.max_children = 8;
  cfg.records_per_vertex = 3;
  cfg.synonym_probability = 0.3;
  cfg.drop_probability = 0.2;
  return cfg;
}

const SynthCorpus& corpus() {
  static const SynthCorpus c = generate_corpus(bench_config(400), 6, 11);
  return c;
}

template <DistanceMatrix (*Fn)(const CoaTree&)>
void BM_DistanceMatrix(benchmark::State& state) {
  SynthConfig cfg = bench_config(static_cast<std::size_t>(state.range(0)));
  const CoaTree tree = generate_coa(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(tree));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DistanceMatrix<distance_matrix_serial>)->Name("distance_matrix/serial")->Arg(200)->Arg(1000);
BENCHMARK(BM_DistanceMatrix<distance_matrix>)->Name("distance_matrix/parallel")->Arg(200)->Arg(1000);

template <AugmentedDataset (*Fn)(std::span<const MappingRecord>, const CoaCatalog&, std::size_t,
                                 std::uint64_t)>
void BM_Augment(benchmark::State& state) {
  const auto& c = corpus();
  for (auto _ : state) {
    benchmark::DoNotOptimize(Fn(c.records, c.catalog, static_cast<std::size_t>(state.range(0)), 1));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * c.records.size()));
}
BENCHMARK(BM_Augment<build_augmented_serial>)->Name("build_augmented/serial")->Arg(20);
BENCHMARK(BM_Augment<build_augmented>)->Name("build_augmented/parallel")->Arg(20);

template <bool kParallel>
void BM_MapRecords(benchmark::State& state) {
  const auto& c = corpus();
  const EmbeddingModel model =
      EmbeddingModel::initialize(training_vocabulary(c.records, c.catalog), 64, 3);
  const IndexSet indexes(model, c.catalog);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kParallel ? map_records(indexes, model, c.records, 0)
                                       : map_records_serial(indexes, model, c.records, 0));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * c.records.size()));
}
BENCHMARK(BM_MapRecords<false>)->Name("map_records/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MapRecords<true>)->Name("map_records/parallel")->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace topoledger

BENCHMARK_MAIN();
