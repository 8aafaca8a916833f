// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <vector>

#include "sheetscan/baseline.hpp"
#include "sheetscan/featurize.hpp"
#include "sheetscan/metrics.hpp"
#include "sheetscan/neuro/detector.hpp"
#include "sheetscan/neuro/layers.hpp"
#include "sheetscan/rng.hpp"
#include "sheetscan/synth.hpp"
#include "test_support.hpp"

using namespace sheetscan;
using namespace sheetscan::neuro;

namespace {

const SynthCorpus& corpus() {
  static const SynthCorpus c = [] {
    SynthConfig cfg;
    cfg.seed = 42;
    cfg.sheet_count = 20;
    return generate_corpus(cfg);
  }();
  return c;
}

Tensor<float> random_tensor(int h, int w, int c, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> t(h, w, c);
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(-1, 1));
  return t;
}

void BM_Conv3x3(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const int ch = static_cast<int>(state.range(1));
  const Tensor<float> in = random_tensor(side, side, ch, 1);
  const ConvSpec spec{3, 3, ch, ch, 2};
  const Tensor<float> w = random_tensor(1, 1, static_cast<int>(spec.weight_count()), 2);
  const std::vector<float> b(ch, 0.0f);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward<float>(in, spec, w.data, b));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_Conv3x3)->Args({32, 16})->Args({64, 32});

void BM_RoiAlign(benchmark::State& state) {
  const Tensor<float> feat = random_tensor(64, 64, 32, 3);
  const Roi roi{3.2, 5.7, 41.9, 30.1};
  const int out = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(roi_align(feat, roi, out, out));
}
BENCHMARK(BM_RoiAlign)->Arg(7)->Arg(14);

void BM_FeaturizeSheet(benchmark::State& state) {
  const Sheet& s = corpus().sheets[0];
  for (auto _ : state) benchmark::DoNotOptimize(featurize_sheet(s));
  state.SetItemsProcessed(state.iterations() * s.n_rows() * s.n_cols());
}
BENCHMARK(BM_FeaturizeSheet);

void BM_RegionGrowth(benchmark::State& state) {
  for (auto _ : state)
    for (const auto& s : corpus().sheets) benchmark::DoNotOptimize(detect_all_region_growth(s));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().sheets.size()));
}
BENCHMARK(BM_RegionGrowth);

void BM_DetectUntrained(benchmark::State& state) {
  ModelConfig cfg;
  cfg.score_threshold = 0.0;
  const Model m(cfg, 7);
  const Sheet& s = corpus().sheets[0];
  for (auto _ : state) benchmark::DoNotOptimize(detect(m, s));
}
BENCHMARK(BM_DetectUntrained)->Unit(benchmark::kMillisecond);

void BM_MatchAndScore(benchmark::State& state) {
  std::map<std::string, std::vector<Detection>> dets;
  for (const auto& s : corpus().sheets) dets[s.id()] = detect_all_region_growth(s);
  const GoldMap gold = gold_map(corpus().labels);
  for (auto _ : state) benchmark::DoNotOptimize(match_and_score(dets, gold, 2));
}
BENCHMARK(BM_MatchAndScore);

void BM_IouEob(benchmark::State& state) {
  Rng rng(9);
  std::vector<std::pair<BBox, BBox>> pairs;
  for (int i = 0; i < 1024; ++i) pairs.emplace_back(testkit::random_box(rng, 64, 64), testkit::random_box(rng, 64, 64));
  for (auto _ : state) {
    double acc = 0.0;
    for (const auto& [a, b] : pairs) acc += iou(a, b) + eob(a, b);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_IouEob);

}  // namespace

BENCHMARK_MAIN();
