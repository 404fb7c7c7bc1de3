#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <string>
#include <vector>

#include "mixdown/kernels.hpp"
#include "mixdown/langid.hpp"

using namespace mixdown;

namespace {

std::vector<std::string> corpus(std::size_t n) {
  static const std::vector<std::string> words{"data ", "model ", "answer ", "question ", "数据", "模型", "训练",
                                              "the ", "river ", "explain ", "why ", "步骤"};
  std::mt19937_64 rng(42);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string t;
    const auto len = 20 + rng() % 200;
    for (std::size_t j = 0; j < len; ++j) t += words[rng() % words.size()];
    out.push_back(std::move(t));
  }
  return out;
}

const std::vector<std::string>& texts() {
  static const auto t = corpus(4096);
  return t;
}

void set_threads(benchmark::State& state) { omp_set_num_threads(static_cast<int>(state.range(0))); }

void BM_Md5Serial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::md5_batch(texts()));
}
void BM_Md5Parallel(benchmark::State& state) {
  set_threads(state);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::parallel::md5_batch(texts()));
}

void BM_EmbedSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::embed_batch(texts(), 256));
}
void BM_EmbedParallel(benchmark::State& state) {
  set_threads(state);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::parallel::embed_batch(texts(), 256));
}

void BM_LangidSerial(benchmark::State& state) {
  const auto& profiles = default_profiles();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::score_languages_batch(texts(), profiles));
}
void BM_LangidParallel(benchmark::State& state) {
  set_threads(state);
  const auto& profiles = default_profiles();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::parallel::score_languages_batch(texts(), profiles));
}

const kernels::PointSet& points() {
  static const auto ps = kernels::PointSet::from_embeddings(kernels::serial::embed_batch(texts(), 256));
  return ps;
}

void BM_KCenterSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::kcenter_greedy(points(), 256));
}
void BM_KCenterParallel(benchmark::State& state) {
  set_threads(state);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::parallel::kcenter_greedy(points(), 256));
}

}  // namespace

BENCHMARK(BM_Md5Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Md5Parallel)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EmbedSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EmbedParallel)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_LangidSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LangidParallel)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_KCenterSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KCenterParallel)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
