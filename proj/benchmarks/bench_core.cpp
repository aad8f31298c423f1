/*
 * SPDX-License-Identifier: Apache-2.0
 */

// Microbenchmarks for the hot paths: the instance-major transform, its
// inverse, plane packing and section compression.

#include <benchmark/benchmark.h>

#include "terc/container.hpp"
#include "terc/layout.hpp"
#include "terc/simgen.hpp"

namespace {

using namespace terc;

/// Reduced reference workload so a benchmark iteration stays in the
/// millisecond range.
const GroundTruthStream& bench_stream() {
  static const GroundTruthStream stream = [] {
    WorkloadSpec spec = w1_reference_workload();
    spec.entity_count = 64;
    spec.step_count = 1000;
    return generate(spec, 7);
  }();
  return stream;
}

const ReplaySequence& bench_sequence() {
  static const ReplaySequence seq = sample(bench_stream(), SamplingPolicy::every_step());
  return seq;
}

const Schema& bench_schema() { return bench_stream().schema; }

void BM_Generate(benchmark::State& state) {
  WorkloadSpec spec = w1_reference_workload();
  spec.entity_count = 64;
  spec.step_count = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate(spec, 7));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Generate)->Arg(100)->Arg(1000);

void BM_FlattenSort(benchmark::State& state) {
  const auto& seq = bench_sequence();
  for (auto _ : state) {
    benchmark::DoNotOptimize(flatten_sort(bench_schema(), seq));
  }
}
BENCHMARK(BM_FlattenSort);

void BM_Reconstruct(benchmark::State& state) {
  const FlattenedSoA flat = flatten_sort(bench_schema(), bench_sequence());
  for (auto _ : state) {
    benchmark::DoNotOptimize(reconstruct(bench_schema(), flat));
  }
}
BENCHMARK(BM_Reconstruct);

void BM_Relayout(benchmark::State& state) {
  const auto order = static_cast<LayoutOrder>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(relayout(bench_schema(), bench_sequence(), order));
  }
  state.SetLabel(std::string(to_string(order)));
}
BENCHMARK(BM_Relayout)->DenseRange(0, 3);

void BM_CompressEntities(benchmark::State& state) {
  const auto stream = relayout(bench_schema(), bench_sequence(), LayoutOrder::InstanceMajor);
  for (auto _ : state) {
    benchmark::DoNotOptimize(deflate_compress(stream, kDefaultCodecLevel));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(stream.size()));
}
BENCHMARK(BM_CompressEntities);

void BM_PackBits(benchmark::State& state) {
  Plane plane;
  plane.width = 256;
  plane.height = 256;
  plane.pixels.assign(plane.width * plane.height, 0);
  for (std::size_t i = 0; i < plane.pixels.size(); i += 37) plane.pixels[i] = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pack_bits(plane));
  }
  state.SetBytesProcessed(state.iterations() *
                          static_cast<std::int64_t>(plane.pixels.size()));
}
BENCHMARK(BM_PackBits);

}  // namespace

BENCHMARK_MAIN();
